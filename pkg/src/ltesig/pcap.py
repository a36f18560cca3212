"""PCAP container with Wireshark MAC-LTE per-record framing.

Each record starts with the ASCII string ``mac-lte``, then three header bytes
(radio type, direction, RNTI type), then optional tags, and finally tag
``0x01`` followed by the MAC PDU up to the end of the record::

    tag 0x02  RNTI               2 bytes, big-endian
    tag 0x03  UEID               2 bytes, big-endian
    tag 0x04  SFN / subframe     2 bytes, (sfn << 4) | subframe
    tag 0x01  payload            rest of record

The files are written with a DLT_USER link type so Wireshark can be told to
dissect them as ``mac-lte-framed``.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, NamedTuple, Union

__all__ = [
    "DEFAULT_DLT",
    "P_RNTI",
    "SI_RNTI",
    "CaptureFrame",
    "Channel",
    "Direction",
    "FramingError",
    "FramingErrorKind",
    "PcapFormatError",
    "RadioType",
    "RawRecord",
    "RntiType",
    "build_mac_lte_framing",
    "classify_channel",
    "iter_records",
    "parse_mac_lte_framing",
    "read_capture",
    "write_capture",
]

START_STRING = b"mac-lte"
DLT_USER_RANGE = range(147, 163)
DEFAULT_DLT = 149

P_RNTI = 0xFFFE
SI_RNTI = 0xFFFF

TAG_PAYLOAD = 0x01
TAG_RNTI = 0x02
TAG_UEID = 0x03
TAG_FRAME_SUBFRAME = 0x04

MAGIC_US = 0xA1B2C3D4
MAGIC_NS = 0xA1B23C4D
_GLOBAL_HEADER = struct.Struct("<IHHiIII")
_RECORD_HEADER_LEN = 16
SNAPLEN = 65535


class RadioType(enum.IntEnum):
    FDD = 1
    TDD = 2


class Direction(enum.IntEnum):
    UPLINK = 0
    DOWNLINK = 1


class RntiType(enum.IntEnum):
    NO_RNTI = 0
    P_RNTI = 1
    RA_RNTI = 2
    C_RNTI = 3
    SI_RNTI = 4
    SPS_RNTI = 5


class Channel(str, enum.Enum):
    PCCH = "PCCH"
    BCCH_DL_SCH = "BCCH_DL_SCH"
    BCCH_BCH = "BCCH_BCH"
    OTHER = "other"


class FramingErrorKind(str, enum.Enum):
    BAD_START_STRING = "bad_start_string"
    UNKNOWN_TAG = "unknown_tag"
    TRUNCATED_TAG = "truncated_tag"
    MISSING_PAYLOAD = "missing_payload"


class PcapFormatError(OSError):
    """The file is not a readable PCAP capture."""


class FramingError(ValueError):
    """A malformed MAC-LTE record. ``offset`` is a byte index into the record."""

    def __init__(self, kind: FramingErrorKind, offset: int, detail: str = ""):
        self.kind = FramingErrorKind(kind)
        self.offset = offset
        self.detail = detail
        self.timestamp_us: int | None = None
        msg = f"{self.kind.value} at byte {offset}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)

    def __eq__(self, other):
        if not isinstance(other, FramingError):
            return NotImplemented
        return (self.kind, self.offset) == (other.kind, other.offset)

    def __hash__(self):
        return hash((self.kind, self.offset))


@dataclass(slots=True)
class CaptureFrame:
    timestamp_us: int
    payload: bytes
    radio_type: RadioType = RadioType.FDD
    direction: Direction = Direction.DOWNLINK
    rnti_type: RntiType = RntiType.NO_RNTI
    rnti: int | None = None
    sfn: int | None = None
    subframe: int | None = None
    ueid: int | None = None

    def __post_init__(self):
        if type(self.radio_type) is not RadioType:
            self.radio_type = RadioType(self.radio_type)
        if type(self.direction) is not Direction:
            self.direction = Direction(self.direction)
        if type(self.rnti_type) is not RntiType:
            self.rnti_type = RntiType(self.rnti_type)
        if type(self.payload) is not bytes:
            self.payload = bytes(self.payload)
        if not self.payload:
            raise ValueError("payload must be non-empty")
        if self.timestamp_us < 0:
            raise ValueError("timestamp_us must be non-negative")
        if self.rnti is not None:
            if not 0 <= self.rnti <= 0xFFFF:
                raise ValueError("rnti must be a 16-bit value")
            if self.rnti_type is RntiType.P_RNTI and self.rnti != P_RNTI:
                raise ValueError("a P-RNTI frame must carry rnti 0xFFFE")
        if self.ueid is not None and not 0 <= self.ueid <= 0xFFFF:
            raise ValueError("ueid must be a 16-bit value")
        if self.sfn is not None or self.subframe is not None:
            if self.sfn is None or self.subframe is None:
                raise ValueError("sfn and subframe are set together")
            if not (0 <= self.sfn <= 1023 and 0 <= self.subframe <= 9):
                raise ValueError("sfn must be 0..1023 and subframe 0..9")


Item = Union[CaptureFrame, FramingError]

_new = object.__new__


def _trusted_frame(
    timestamp_us, payload, radio_type, direction, rnti_type, rnti, sfn, subframe, ueid
) -> CaptureFrame:
    """Build a frame from fields the caller has already validated."""
    f = _new(CaptureFrame)
    f.timestamp_us = timestamp_us
    f.payload = payload
    f.radio_type = radio_type
    f.direction = direction
    f.rnti_type = rnti_type
    f.rnti = rnti
    f.sfn = sfn
    f.subframe = subframe
    f.ueid = ueid
    return f


def classify_channel(frame: CaptureFrame) -> Channel:
    if frame.rnti_type is RntiType.P_RNTI:
        return Channel.PCCH
    if frame.rnti_type is RntiType.SI_RNTI:
        return Channel.BCCH_DL_SCH
    if frame.rnti_type is RntiType.NO_RNTI and frame.rnti is None:
        return Channel.BCCH_BCH
    return Channel.OTHER


def build_mac_lte_framing(frame: CaptureFrame) -> bytes:
    parts = [START_STRING, bytes((frame.radio_type, frame.direction, frame.rnti_type))]
    if frame.rnti is not None:
        parts.append(_TAG_VALUE.pack(TAG_RNTI, frame.rnti))
    if frame.ueid is not None:
        parts.append(_TAG_VALUE.pack(TAG_UEID, frame.ueid))
    if frame.sfn is not None:
        parts.append(_TAG_VALUE.pack(TAG_FRAME_SUBFRAME, (frame.sfn << 4) | frame.subframe))
    parts.append(b"\x01")
    parts.append(frame.payload)
    return b"".join(parts)


_TAG_VALUE = struct.Struct(">BH")
_RADIO = {int(m): m for m in RadioType}
_DIRECTION = {int(m): m for m in Direction}
_RNTI_TYPE = {int(m): m for m in RntiType}
_HEADER_LEN = len(START_STRING) + 3


def parse_mac_lte_framing(record: bytes, timestamp_us: int = 0) -> CaptureFrame:
    """Decode one record; raises :class:`FramingError` on any malformation."""
    if not record.startswith(START_STRING):
        i = 0
        while i < len(record) and i < len(START_STRING) and record[i] == START_STRING[i]:
            i += 1
        raise FramingError(FramingErrorKind.BAD_START_STRING, i)
    end = len(record)
    if end < _HEADER_LEN:
        raise FramingError(FramingErrorKind.TRUNCATED_TAG, end, "fixed header")
    n = len(START_STRING)
    radio = _RADIO.get(record[n])
    direction = _DIRECTION.get(record[n + 1])
    rnti_type = _RNTI_TYPE.get(record[n + 2])
    if radio is None or direction is None or rnti_type is None:
        pos = n if radio is None else n + 1 if direction is None else n + 2
        raise FramingError(FramingErrorKind.UNKNOWN_TAG, pos, f"header byte {record[pos]}")

    rnti = ueid = sfn = subframe = None
    pos = _HEADER_LEN
    while True:
        if pos >= end:
            raise FramingError(FramingErrorKind.MISSING_PAYLOAD, pos)
        tag = record[pos]
        if tag == TAG_PAYLOAD:
            if pos + 1 == end:
                raise FramingError(FramingErrorKind.MISSING_PAYLOAD, pos, "empty MAC PDU")
            payload = record[pos + 1 :]
            break
        if tag != TAG_RNTI and tag != TAG_UEID and tag != TAG_FRAME_SUBFRAME:
            raise FramingError(FramingErrorKind.UNKNOWN_TAG, pos, f"tag 0x{tag:02x}")
        if pos + 3 > end:
            raise FramingError(FramingErrorKind.TRUNCATED_TAG, pos, f"tag 0x{tag:02x}")
        value = (record[pos + 1] << 8) | record[pos + 2]
        if tag == TAG_RNTI:
            rnti = value
        elif tag == TAG_UEID:
            ueid = value
        else:
            sfn, subframe = value >> 4, value & 0xF
            if sfn > 1023 or subframe > 9:
                raise FramingError(
                    FramingErrorKind.UNKNOWN_TAG, pos, f"sfn {sfn} / subframe {subframe}"
                )
        pos += 3

    if rnti_type is RntiType.P_RNTI and rnti is not None and rnti != P_RNTI:
        raise FramingError(FramingErrorKind.UNKNOWN_TAG, pos, f"P-RNTI frame with rnti 0x{rnti:04x}")
    return _trusted_frame(
        timestamp_us, payload, radio, direction, rnti_type, rnti, sfn, subframe, ueid
    )


class RawRecord(NamedTuple):
    offset: int  # byte offset of the record header in the file
    timestamp_us: int
    data: bytes
    orig_len: int


@dataclass(frozen=True)
class _Header:
    endian: str
    nanosecond: bool
    linktype: int


def _read_global_header(f: BinaryIO) -> _Header:
    raw = f.read(_GLOBAL_HEADER.size)
    if len(raw) < _GLOBAL_HEADER.size:
        raise PcapFormatError("truncated PCAP global header")
    head = int.from_bytes(raw[:4], "little")
    for endian in "<>":
        magic = struct.unpack(endian + "I", raw[:4])[0]
        if magic in (MAGIC_US, MAGIC_NS):
            break
    else:
        raise PcapFormatError(f"bad PCAP magic 0x{head:08x}")
    fields = struct.unpack(endian + "IHHiIII", raw)
    return _Header(endian, magic == MAGIC_NS, fields[6])


def iter_records(path, dlt: int | None = None) -> Iterator[RawRecord | FramingError]:
    """Yield raw PCAP records in file order.

    ``dlt`` selects the expected link type; by default any DLT_USER value is
    accepted. A record cut short by end-of-file yields one
    ``truncated_tag`` error and ends the stream.
    """
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise PcapFormatError(f"cannot open {path}: {exc}") from exc
    with f:
        header = _read_global_header(f)
        if dlt is not None:
            if header.linktype != dlt:
                raise PcapFormatError(f"link type {header.linktype}, expected {dlt}")
        elif header.linktype not in DLT_USER_RANGE:
            raise PcapFormatError(f"link type {header.linktype} is not a DLT_USER value")
        rec_header = struct.Struct(header.endian + "IIII")
        scale = 1000 if header.nanosecond else 1
        offset = _GLOBAL_HEADER.size
        buf, pos = b"", 0
        while True:
            if len(buf) - pos < _RECORD_HEADER_LEN:
                buf, pos = _refill(f, buf[pos:], _RECORD_HEADER_LEN), 0
                if not buf:
                    return
                if len(buf) < _RECORD_HEADER_LEN:
                    yield FramingError(FramingErrorKind.TRUNCATED_TAG, 0, "record header cut short")
                    return
            ts_sec, ts_frac, incl_len, orig_len = rec_header.unpack_from(buf, pos)
            end = pos + _RECORD_HEADER_LEN + incl_len
            if end > len(buf):
                buf, pos = _refill(f, buf[pos:], _RECORD_HEADER_LEN + incl_len), 0
                end = _RECORD_HEADER_LEN + incl_len
                if end > len(buf):
                    have = len(buf) - _RECORD_HEADER_LEN
                    yield FramingError(FramingErrorKind.TRUNCATED_TAG, have, "record cut short")
                    return
            data = buf[pos + _RECORD_HEADER_LEN : end]
            yield RawRecord(offset, ts_sec * 1_000_000 + ts_frac // scale, data, orig_len)
            offset += _RECORD_HEADER_LEN + incl_len
            pos = end


def _refill(f: BinaryIO, tail: bytes, need: int) -> bytes:
    """Append reads to ``tail`` until it holds ``need`` bytes or the file ends."""
    parts = [tail]
    have = len(tail)
    while have < need:
        more = f.read(max(_CHUNK, need - have))
        if not more:
            break
        parts.append(more)
        have += len(more)
    return b"".join(parts)


_CHUNK = 1 << 20


def read_capture(path, dlt: int | None = None) -> Iterator[Item]:
    """Yield a :class:`CaptureFrame` or :class:`FramingError` per record."""
    for rec in iter_records(path, dlt):
        if type(rec) is FramingError:
            yield rec
            continue
        try:
            yield parse_mac_lte_framing(rec.data, rec.timestamp_us)
        except FramingError as err:
            err.timestamp_us = rec.timestamp_us
            yield err


def write_capture(frames: Iterable[CaptureFrame], path, dlt: int = DEFAULT_DLT) -> int:
    """Write ``frames`` as a microsecond PCAP file; returns the record count."""
    if not 0 <= dlt < 1 << 32:
        raise ValueError(f"bad link type {dlt}")
    header = _GLOBAL_HEADER.pack(MAGIC_US, 2, 4, 0, 0, SNAPLEN, dlt)
    rec_header = struct.Struct("<IIII")
    count = 0
    with open(Path(path), "wb") as f:
        f.write(header)
        chunks = []
        for frame in frames:
            data = build_mac_lte_framing(frame)
            sec, usec = divmod(frame.timestamp_us, 1_000_000)
            chunks.append(rec_header.pack(sec, usec, len(data), len(data)))
            chunks.append(data)
            count += 1
            if len(chunks) >= 8192:
                f.write(b"".join(chunks))
                chunks.clear()
        f.write(b"".join(chunks))
    return count
