"""Unaligned PER (UPER) bit primitives.

Only the pieces the RRC paging/broadcast subset needs are here: constrained
whole numbers, sequence preambles, choice indices, fixed-size bit strings and
the small forms of the length determinant. Everything is big-endian bit order.
"""

from __future__ import annotations

import enum

__all__ = [
    "BitReader",
    "BitWriter",
    "DecodeError",
    "EncodeError",
    "ErrorKind",
    "decode_constrained_int",
    "decode_sequence_preamble",
    "range_bits",
]


class ErrorKind(str, enum.Enum):
    OUT_OF_BITS = "out_of_bits"
    BAD_CHOICE_INDEX = "bad_choice_index"
    CONSTRAINT_VIOLATION = "constraint_violation"
    UNSUPPORTED_EXTENSION = "unsupported_extension"


class DecodeError(ValueError):
    """A failed decode, located at a bit offset into the input."""

    def __init__(self, kind: ErrorKind, bit_offset: int, detail: str = ""):
        self.kind = ErrorKind(kind)
        self.bit_offset = bit_offset
        self.detail = detail
        msg = f"{self.kind.value} at bit {bit_offset}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class EncodeError(ValueError):
    """A value that cannot be encoded under the grammar constraints."""

    kind = ErrorKind.CONSTRAINT_VIOLATION


def range_bits(lo: int, hi: int) -> int:
    """Width in bits of a constrained whole number in ``lo..hi``."""
    if hi < lo:
        raise ValueError(f"empty range {lo}..{hi}")
    return (hi - lo).bit_length()


class BitReader:
    """Sequential big-endian bit reader over a byte string."""

    __slots__ = ("_value", "_nbits", "cursor")

    def __init__(self, buffer: bytes):
        if type(buffer) is not bytes:
            buffer = bytes(buffer)
        self._value = int.from_bytes(buffer, "big")
        self._nbits = 8 * len(buffer)
        self.cursor = 0

    @property
    def remaining(self) -> int:
        return self._nbits - self.cursor

    def read(self, n: int) -> int:
        if n == 0:
            return 0
        if n > self._nbits - self.cursor:
            raise DecodeError(
                ErrorKind.OUT_OF_BITS, self.cursor, f"need {n} bits, have {self.remaining}"
            )
        shift = self._nbits - self.cursor - n
        self.cursor += n
        return (self._value >> shift) & ((1 << n) - 1)

    def read_bit(self) -> bool:
        return bool(self.read(1))

    def constrained_int(self, lo: int, hi: int) -> int:
        start = self.cursor
        raw = self.read(range_bits(lo, hi))
        if lo + raw > hi:
            raise DecodeError(
                ErrorKind.CONSTRAINT_VIOLATION, start, f"{lo + raw} outside {lo}..{hi}"
            )
        return lo + raw

    def enumerated(self, count: int, extensible: bool = False) -> int:
        """Index into a root enumeration of ``count`` items."""
        if extensible and self.read_bit():
            raise DecodeError(ErrorKind.UNSUPPORTED_EXTENSION, self.cursor - 1)
        return self.constrained_int(0, count - 1)

    def choice(self, count: int, extensible: bool = False) -> int:
        start = self.cursor
        if extensible and self.read_bit():
            raise DecodeError(ErrorKind.UNSUPPORTED_EXTENSION, start)
        index = self.read(range_bits(0, count - 1))
        if index >= count:
            raise DecodeError(
                ErrorKind.BAD_CHOICE_INDEX, start, f"index {index} of {count} alternatives"
            )
        return index

    def sequence_preamble(
        self, has_extension_marker: bool, optional_count: int
    ) -> tuple[bool, tuple[bool, ...]]:
        """Return ``(extended, presence)`` with presence in declaration order."""
        extended = self.read_bit() if has_extension_marker else False
        return extended, tuple(self.read_bit() for _ in range(optional_count))

    def size(self, lo: int, hi: int) -> int:
        return self.constrained_int(lo, hi)

    def length(self) -> int:
        """Unconstrained length determinant; only the short (< 128) form."""
        start = self.cursor
        if self.read_bit():
            raise DecodeError(
                ErrorKind.CONSTRAINT_VIOLATION, start, "long or fragmented length form"
            )
        return self.read(7)


class BitWriter:
    """Accumulates bits MSB-first; :meth:`to_bytes` zero-pads the tail."""

    __slots__ = ("_value", "_nbits")

    def __init__(self):
        self._value = 0
        self._nbits = 0

    @property
    def cursor(self) -> int:
        return self._nbits

    def write(self, value: int, n: int) -> None:
        if n == 0:
            if value:
                raise EncodeError(f"value {value} does not fit in 0 bits")
            return
        if value < 0 or value >> n:
            raise EncodeError(f"value {value} does not fit in {n} bits")
        self._value = (self._value << n) | value
        self._nbits += n

    def write_bit(self, bit: bool) -> None:
        self.write(1 if bit else 0, 1)

    def constrained_int(self, value: int, lo: int, hi: int) -> None:
        if not lo <= value <= hi:
            raise EncodeError(f"{value} outside {lo}..{hi}")
        self.write(value - lo, range_bits(lo, hi))

    def enumerated(self, index: int, count: int, extensible: bool = False) -> None:
        if extensible:
            self.write_bit(False)
        self.constrained_int(index, 0, count - 1)

    def choice(self, index: int, count: int, extensible: bool = False) -> None:
        if extensible:
            self.write_bit(False)
        self.constrained_int(index, 0, count - 1)

    def sequence_preamble(self, has_extension_marker: bool, presence) -> None:
        if has_extension_marker:
            self.write_bit(False)
        for bit in presence:
            self.write_bit(bit)

    def size(self, n: int, lo: int, hi: int) -> None:
        self.constrained_int(n, lo, hi)

    def length(self, n: int) -> None:
        if not 0 <= n < 128:
            raise EncodeError(f"length {n} needs the long form")
        self.write(n, 8)

    def to_bytes(self) -> bytes:
        pad = -self._nbits % 8
        total = self._nbits + pad
        return (self._value << pad).to_bytes(total // 8, "big")


def decode_constrained_int(r: BitReader, lo: int, hi: int) -> int:
    if hi - lo >= 1 << 32:
        raise ValueError("range wider than 2**32")
    return r.constrained_int(lo, hi)


def decode_sequence_preamble(
    r: BitReader, has_extension_marker: bool, optional_count: int
) -> tuple[bool, tuple[bool, ...]]:
    if optional_count < 0:
        raise ValueError("optional_count must be >= 0")
    return r.sequence_preamble(has_extension_marker, optional_count)
