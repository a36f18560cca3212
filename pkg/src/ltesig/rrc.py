"""RRC message values and their UPER codec.

Covers the Release 8 field sets of

* ``PCCH-Message`` (Paging),
* ``BCCH-BCH-Message`` (MasterInformationBlock),
* ``BCCH-DL-SCH-Message`` (SystemInformationBlockType1 in full, and the
  header of SystemInformation so that SIB2 presence can be detected).

Extension additions and critical/non-critical extensions are rejected with
``unsupported_extension``; skipping them would leave the cursor misaligned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Union

from .uper import BitReader, BitWriter, DecodeError, EncodeError, ErrorKind

__all__ = [
    "MAX_PAGE_REC",
    "CnDomain",
    "DlBandwidth",
    "Imsi",
    "IntraFreqReselection",
    "Mib",
    "PagingMessage",
    "PagingRecord",
    "PhichDuration",
    "PhichResource",
    "PlmnInfo",
    "STmsi",
    "SchedulingInfo",
    "Sib1",
    "SystemInformationSummary",
    "TddConfig",
    "UeIdentity",
    "decode_bcch_dl_sch",
    "decode_mib",
    "decode_pcch",
    "decode_sib1",
    "encode_mib",
    "encode_pcch",
    "encode_sib1",
    "encode_system_information_header",
]

MAX_PAGE_REC = 16
MAX_SIB = 32
MAX_SI_MESSAGE = 32
MAX_SIB_MAPPING = 31  # maxSIB - 1
SIB_TYPE_ROOT = 16  # sibType3..sibType11 and seven spares
SI_SIB_ALTERNATIVES = 10  # sib2..sib11

SI_PERIODICITIES_RF = (8, 16, 32, 64, 128, 256, 512)
SI_WINDOW_LENGTHS_MS = (1, 2, 5, 10, 15, 20, 40)


_ORDER: dict[type, tuple] = {}
_INDEX: dict = {}


class _Indexed(enum.Enum):
    """Enumeration whose declaration order is its UPER index."""

    @classmethod
    def from_index(cls, i: int):
        return _ORDER[cls][i]

    @property
    def index(self) -> int:
        return _INDEX[self]


class CnDomain(_Indexed):
    PS = "ps"
    CS = "cs"


class DlBandwidth(_Indexed):
    N6 = "n6"
    N15 = "n15"
    N25 = "n25"
    N50 = "n50"
    N75 = "n75"
    N100 = "n100"


class PhichDuration(_Indexed):
    NORMAL = "normal"
    EXTENDED = "extended"


class PhichResource(_Indexed):
    ONE_SIXTH = "oneSixth"
    HALF = "half"
    ONE = "one"
    TWO = "two"


class IntraFreqReselection(_Indexed):
    ALLOWED = "allowed"
    NOT_ALLOWED = "notAllowed"


for _cls in (CnDomain, DlBandwidth, PhichDuration, PhichResource, IntraFreqReselection):
    _ORDER[_cls] = tuple(_cls)
    _INDEX.update((m, k) for k, m in enumerate(_cls))

def _check_digits(digits, lo: int, hi: int, what: str) -> tuple[int, ...]:
    digits = tuple(int(d) for d in digits)
    if not lo <= len(digits) <= hi:
        raise ValueError(f"{what} needs {lo}..{hi} digits, got {len(digits)}")
    if any(not 0 <= d <= 9 for d in digits):
        raise ValueError(f"{what} digits must be 0..9")
    return digits


def _check_uint(value: int, bits: int, what: str) -> None:
    if not 0 <= value < 1 << bits:
        raise ValueError(f"{what} must fit in {bits} bits, got {value}")


class STmsi(NamedTuple):
    """S-TMSI: 8-bit MME code and 32-bit M-TMSI.

    Field ranges are enforced when the value is encoded.
    """

    mmec: int
    m_tmsi: int

    @property
    def key(self) -> int:
        """40-bit identity: MMEC in the top byte, M-TMSI below."""
        return (self.mmec << 32) | self.m_tmsi

    @classmethod
    def from_key(cls, key: int) -> STmsi:
        if not 0 <= key < 1 << 40:
            raise ValueError(f"S-TMSI key {key:#x} exceeds 40 bits")
        return cls(key >> 32, key & 0xFFFFFFFF)

    def __str__(self) -> str:
        return f"s-TMSI {self.key:010x}"


@dataclass(frozen=True)
class Imsi:
    digits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "digits", _check_digits(self.digits, 6, 21, "IMSI"))

    @classmethod
    def from_string(cls, s: str) -> Imsi:
        return cls(tuple(int(c) for c in s))

    def masked(self) -> str:
        """All digits but the last two replaced by ``*``."""
        tail = "".join(map(str, self.digits[-2:]))
        return "*" * (len(self.digits) - 2) + tail

    def __str__(self) -> str:
        return f"IMSI {self.masked()}"

    def __repr__(self) -> str:
        # keep raw digits out of logs and tracebacks
        return f"Imsi({self.masked()!r})"


UeIdentity = Union[STmsi, Imsi]


class PagingRecord(NamedTuple):
    ue_identity: UeIdentity
    cn_domain: CnDomain = CnDomain.PS


@dataclass(frozen=True)
class PagingMessage:
    records: tuple[PagingRecord, ...] = ()
    system_info_modification: bool = False
    etws_indication: bool = False

    def __post_init__(self):
        if type(self.records) is not tuple:
            object.__setattr__(self, "records", tuple(self.records))


@dataclass(frozen=True)
class Mib:
    dl_bandwidth: DlBandwidth = DlBandwidth.N6
    phich_duration: PhichDuration = PhichDuration.NORMAL
    phich_resource: PhichResource = PhichResource.ONE_SIXTH
    sfn_msb: int = 0
    spare: int = 0

    def __post_init__(self):
        _check_uint(self.sfn_msb, 8, "sfn_msb")
        _check_uint(self.spare, 10, "spare")


@dataclass(frozen=True)
class PlmnInfo:
    mnc: tuple[int, ...]
    mcc: tuple[int, ...] | None = None
    cell_reserved: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mnc", _check_digits(self.mnc, 2, 3, "MNC"))
        if self.mcc is not None:
            object.__setattr__(self, "mcc", _check_digits(self.mcc, 3, 3, "MCC"))


@dataclass(frozen=True)
class SchedulingInfo:
    """One SI message: its periodicity and the SIB numbers mapped into it.

    SIB numbers are 3..11; 12..18 stand for the seven spare code points.
    """

    periodicity_rf: int = 8
    sib_types: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sib_types", tuple(self.sib_types))
        if self.periodicity_rf not in SI_PERIODICITIES_RF:
            raise ValueError(f"bad si-Periodicity rf{self.periodicity_rf}")
        if len(self.sib_types) > MAX_SIB_MAPPING:
            raise ValueError("too many SIB mappings")
        if any(not 3 <= t < 3 + SIB_TYPE_ROOT for t in self.sib_types):
            raise ValueError("SIB type out of range")


@dataclass(frozen=True)
class TddConfig:
    subframe_assignment: int = 0
    special_subframe_patterns: int = 0

    def __post_init__(self):
        if not 0 <= self.subframe_assignment <= 6:
            raise ValueError("subframe_assignment must be 0..6")
        if not 0 <= self.special_subframe_patterns <= 8:
            raise ValueError("special_subframe_patterns must be 0..8")


@dataclass(frozen=True)
class Sib1:
    plmn_list: tuple[PlmnInfo, ...]
    tracking_area_code: int
    cell_identity: int
    cell_barred: bool = False
    intra_freq_reselection: IntraFreqReselection = IntraFreqReselection.ALLOWED
    csg_indication: bool = False
    csg_identity: int | None = None
    q_rx_lev_min: int = -70
    q_rx_lev_min_offset: int | None = None
    p_max: int | None = None
    freq_band_indicator: int = 1
    scheduling_info: tuple[SchedulingInfo, ...] = field(
        default_factory=lambda: (SchedulingInfo(),)
    )
    tdd_config: TddConfig | None = None
    si_window_length_ms: int = 20
    system_info_value_tag: int = 0

    def __post_init__(self):
        object.__setattr__(self, "plmn_list", tuple(self.plmn_list))
        object.__setattr__(self, "scheduling_info", tuple(self.scheduling_info))
        if not 1 <= len(self.plmn_list) <= 6:
            raise ValueError("plmn_list needs 1..6 entries")
        if not 1 <= len(self.scheduling_info) <= MAX_SI_MESSAGE:
            raise ValueError("scheduling_info needs 1..32 entries")
        _check_uint(self.tracking_area_code, 16, "tracking_area_code")
        _check_uint(self.cell_identity, 28, "cell_identity")
        if self.csg_identity is not None:
            _check_uint(self.csg_identity, 27, "csg_identity")
        if not -70 <= self.q_rx_lev_min <= -22:
            raise ValueError("q_rx_lev_min must be -70..-22")
        if self.q_rx_lev_min_offset is not None and not 1 <= self.q_rx_lev_min_offset <= 8:
            raise ValueError("q_rx_lev_min_offset must be 1..8")
        if self.p_max is not None and not -30 <= self.p_max <= 33:
            raise ValueError("p_max must be -30..33")
        if not 1 <= self.freq_band_indicator <= 64:
            raise ValueError("freq_band_indicator must be 1..64")
        if self.si_window_length_ms not in SI_WINDOW_LENGTHS_MS:
            raise ValueError(f"bad si-WindowLength {self.si_window_length_ms}")
        if not 0 <= self.system_info_value_tag <= 31:
            raise ValueError("system_info_value_tag must be 0..31")

    @property
    def scheduling_info_count(self) -> int:
        return len(self.scheduling_info)


@dataclass(frozen=True)
class SystemInformationSummary:
    """Header of a SystemInformation message; SIB contents are not decoded."""

    sib_count: int
    first_sib: int

    @property
    def contains_sib2(self) -> bool:
        # SIB2, when scheduled, is always the first entry of SI message 1
        return self.first_sib == 2


# --- PCCH -----------------------------------------------------------------


def decode_pcch(payload: bytes) -> PagingMessage:
    fast = _decode_pcch_stmsi(payload)
    if fast is not None:
        return fast
    r = BitReader(payload)
    # message choice (1 bit; c1 has a single alternative and takes none),
    # then the Paging presence bitmap in declaration order
    head = r.read(5)
    if head & 0b10000:
        raise DecodeError(ErrorKind.UNSUPPORTED_EXTENSION, 0, "messageClassExtension")
    records = []
    if head & 0b01000:
        for _ in range(r.size(1, MAX_PAGE_REC)):
            records.append(_decode_paging_record(r))
    if head & 0b00001:
        raise DecodeError(ErrorKind.UNSUPPORTED_EXTENSION, 4, "Paging nonCriticalExtension")
    return PagingMessage(tuple(records), bool(head & 0b100), bool(head & 0b010))


# Each S-TMSI record is 44 bits: two zero extension bits, choice 0, then
# mmec, m-TMSI and cn-Domain.
_STMSI_RECORD_BITS = 44


def _decode_pcch_stmsi(payload: bytes) -> PagingMessage | None:
    """Whole-integer decode of a Paging made only of S-TMSI records.

    Returns None for anything else (IMSI records, extensions, short input)
    so that the bit-by-bit path can produce the value or the precise error.
    """
    nbits = 8 * len(payload)
    if nbits < 9:
        return None
    v = int.from_bytes(payload, "big")
    head = v >> (nbits - 9)
    if head & 0b110010000 != 0b010000000:
        return None
    count = (head & 0xF) + 1
    shift = nbits - 9 - count * _STMSI_RECORD_BITS
    if shift < 0:
        return None
    records = []
    for k in range(count - 1, -1, -1):
        rec = (v >> (shift + k * _STMSI_RECORD_BITS)) & 0xFFFFFFFFFFF
        if rec >> 41:
            return None
        records.append(PagingRecord(STmsi(rec >> 33, (rec >> 1) & 0xFFFFFFFF), _CN[rec & 1]))
    return PagingMessage(tuple(records), bool(head & 0b001000000), bool(head & 0b000100000))


def _decode_paging_record(r: BitReader) -> PagingRecord:
    start = r.cursor
    # PagingRecord extension bit, PagingUE-Identity extension bit, choice index
    head = r.read(3)
    if head & 0b110:
        where = start if head & 0b100 else start + 1
        raise DecodeError(ErrorKind.UNSUPPORTED_EXTENSION, where, "PagingRecord extension")
    if not head & 1:
        # mmec(8) m-TMSI(32) cn-Domain(1)
        v = r.read(41)
        return PagingRecord(STmsi(v >> 33, (v >> 1) & 0xFFFFFFFF), _CN[v & 1])
    n = r.size(6, 21)
    identity = Imsi(tuple(r.constrained_int(0, 9) for _ in range(n)))
    return PagingRecord(identity, CnDomain.from_index(r.enumerated(2)))


_CN = (CnDomain.PS, CnDomain.CS)


def encode_pcch(msg: PagingMessage) -> bytes:
    if len(msg.records) > MAX_PAGE_REC:
        raise EncodeError(f"{len(msg.records)} paging records exceed maxPageRec")
    flags = (msg.system_info_modification << 2) | (msg.etws_indication << 1)
    fast = _encode_pcch_stmsi(msg.records, flags)
    if fast is not None:
        return fast
    w = BitWriter()
    w.write(
        (bool(msg.records) << 3)
        | (msg.system_info_modification << 2)
        | (msg.etws_indication << 1),
        5,
    )
    if msg.records:
        w.size(len(msg.records), 1, MAX_PAGE_REC)
        for rec in msg.records:
            ident = rec.ue_identity
            if type(ident) is STmsi:
                if not (0 <= ident.mmec <= 0xFF and 0 <= ident.m_tmsi <= 0xFFFFFFFF):
                    raise EncodeError(f"bad S-TMSI {ident!r}")
                # extension bits of PagingRecord and PagingUE-Identity, choice 0
                w.write(0, 3)
                w.write((ident.mmec << 33) | (ident.m_tmsi << 1) | rec.cn_domain.index, 41)
            elif isinstance(ident, Imsi):
                w.sequence_preamble(True, ())
                w.choice(1, 2, extensible=True)
                w.size(len(ident.digits), 6, 21)
                for d in ident.digits:
                    w.constrained_int(d, 0, 9)
                w.enumerated(rec.cn_domain.index, 2)
            else:
                raise EncodeError(f"not a paging identity: {ident!r}")
    return w.to_bytes()


def _encode_pcch_stmsi(records, flags: int) -> bytes | None:
    if not records:
        return None
    v = 0b01000 | flags
    v = (v << 4) | (len(records) - 1)
    for rec in records:
        ident = rec.ue_identity
        if type(ident) is not STmsi:
            return None
        mmec, m_tmsi = ident
        if not (0 <= mmec <= 0xFF and 0 <= m_tmsi <= 0xFFFFFFFF):
            return None
        v = (v << _STMSI_RECORD_BITS) | (mmec << 33) | (m_tmsi << 1) | rec.cn_domain.index
    nbits = 9 + len(records) * _STMSI_RECORD_BITS
    pad = -nbits % 8
    return (v << pad).to_bytes((nbits + pad) // 8, "big")


# --- BCCH-BCH -------------------------------------------------------------


def decode_mib(payload: bytes) -> Mib:
    r = BitReader(payload)
    bw = DlBandwidth.from_index(r.enumerated(6))
    duration = PhichDuration.from_index(r.enumerated(2))
    resource = PhichResource.from_index(r.enumerated(4))
    return Mib(bw, duration, resource, r.read(8), r.read(10))


def encode_mib(m: Mib) -> bytes:
    w = BitWriter()
    w.enumerated(m.dl_bandwidth.index, 6)
    w.enumerated(m.phich_duration.index, 2)
    w.enumerated(m.phich_resource.index, 4)
    w.write(m.sfn_msb, 8)
    w.write(m.spare, 10)
    return w.to_bytes()


# --- BCCH-DL-SCH ----------------------------------------------------------


def decode_bcch_dl_sch(payload: bytes) -> Sib1 | SystemInformationSummary:
    r = BitReader(payload)
    if r.choice(2):
        raise DecodeError(ErrorKind.UNSUPPORTED_EXTENSION, 0, "messageClassExtension")
    if r.choice(2) == 0:
        return _decode_si_header(r)
    return _decode_sib1_body(r)


decode_sib1 = decode_bcch_dl_sch


def _decode_si_header(r: BitReader) -> SystemInformationSummary:
    start = r.cursor
    if r.choice(2):
        raise DecodeError(ErrorKind.UNSUPPORTED_EXTENSION, start, "criticalExtensionsFuture")
    r.sequence_preamble(False, 1)
    count = r.size(1, MAX_SIB)
    first = r.choice(SI_SIB_ALTERNATIVES, extensible=True)
    return SystemInformationSummary(count, first + 2)


def _decode_digits(r: BitReader, n: int) -> tuple[int, ...]:
    return tuple(r.constrained_int(0, 9) for _ in range(n))


def _decode_sib1_body(r: BitReader) -> Sib1:
    _, (has_pmax, has_tdd, has_nce) = r.sequence_preamble(False, 3)

    _, (has_csg_id,) = r.sequence_preamble(False, 1)
    plmns = []
    for _ in range(r.size(1, 6)):
        _, (has_mcc,) = r.sequence_preamble(False, 1)
        mcc = _decode_digits(r, 3) if has_mcc else None
        mnc = _decode_digits(r, r.size(2, 3))
        reserved = r.enumerated(2) == 0
        plmns.append(PlmnInfo(mnc, mcc, reserved))
    tac = r.read(16)
    cell_id = r.read(28)
    barred = r.enumerated(2) == 0
    reselection = IntraFreqReselection.from_index(r.enumerated(2))
    csg_indication = r.read_bit()
    csg_identity = r.read(27) if has_csg_id else None

    _, (has_offset,) = r.sequence_preamble(False, 1)
    q_rx_lev_min = r.constrained_int(-70, -22)
    q_offset = r.constrained_int(1, 8) if has_offset else None

    p_max = r.constrained_int(-30, 33) if has_pmax else None
    band = r.constrained_int(1, 64)

    sched = []
    for _ in range(r.size(1, MAX_SI_MESSAGE)):
        periodicity = SI_PERIODICITIES_RF[r.enumerated(len(SI_PERIODICITIES_RF))]
        n = r.size(0, MAX_SIB_MAPPING)
        sibs = tuple(3 + r.enumerated(SIB_TYPE_ROOT, extensible=True) for _ in range(n))
        sched.append(SchedulingInfo(periodicity, sibs))

    tdd = None
    if has_tdd:
        tdd = TddConfig(r.enumerated(7), r.enumerated(9))
    window = SI_WINDOW_LENGTHS_MS[r.enumerated(len(SI_WINDOW_LENGTHS_MS))]
    value_tag = r.constrained_int(0, 31)
    if has_nce:
        raise DecodeError(ErrorKind.UNSUPPORTED_EXTENSION, r.cursor, "SIB1 nonCriticalExtension")
    return Sib1(
        plmn_list=tuple(plmns),
        tracking_area_code=tac,
        cell_identity=cell_id,
        cell_barred=barred,
        intra_freq_reselection=reselection,
        csg_indication=csg_indication,
        csg_identity=csg_identity,
        q_rx_lev_min=q_rx_lev_min,
        q_rx_lev_min_offset=q_offset,
        p_max=p_max,
        freq_band_indicator=band,
        scheduling_info=tuple(sched),
        tdd_config=tdd,
        si_window_length_ms=window,
        system_info_value_tag=value_tag,
    )


def encode_sib1(s: Sib1) -> bytes:
    w = BitWriter()
    w.choice(0, 2)
    w.choice(1, 2)
    w.sequence_preamble(False, (s.p_max is not None, s.tdd_config is not None, False))

    w.sequence_preamble(False, (s.csg_identity is not None,))
    w.size(len(s.plmn_list), 1, 6)
    for plmn in s.plmn_list:
        w.sequence_preamble(False, (plmn.mcc is not None,))
        for d in plmn.mcc or ():
            w.constrained_int(d, 0, 9)
        w.size(len(plmn.mnc), 2, 3)
        for d in plmn.mnc:
            w.constrained_int(d, 0, 9)
        w.enumerated(0 if plmn.cell_reserved else 1, 2)
    w.write(s.tracking_area_code, 16)
    w.write(s.cell_identity, 28)
    w.enumerated(0 if s.cell_barred else 1, 2)
    w.enumerated(s.intra_freq_reselection.index, 2)
    w.write_bit(s.csg_indication)
    if s.csg_identity is not None:
        w.write(s.csg_identity, 27)

    w.sequence_preamble(False, (s.q_rx_lev_min_offset is not None,))
    w.constrained_int(s.q_rx_lev_min, -70, -22)
    if s.q_rx_lev_min_offset is not None:
        w.constrained_int(s.q_rx_lev_min_offset, 1, 8)

    if s.p_max is not None:
        w.constrained_int(s.p_max, -30, 33)
    w.constrained_int(s.freq_band_indicator, 1, 64)

    w.size(len(s.scheduling_info), 1, MAX_SI_MESSAGE)
    for info in s.scheduling_info:
        w.enumerated(SI_PERIODICITIES_RF.index(info.periodicity_rf), len(SI_PERIODICITIES_RF))
        w.size(len(info.sib_types), 0, MAX_SIB_MAPPING)
        for t in info.sib_types:
            w.enumerated(t - 3, SIB_TYPE_ROOT, extensible=True)

    if s.tdd_config is not None:
        w.enumerated(s.tdd_config.subframe_assignment, 7)
        w.enumerated(s.tdd_config.special_subframe_patterns, 9)
    w.enumerated(SI_WINDOW_LENGTHS_MS.index(s.si_window_length_ms), len(SI_WINDOW_LENGTHS_MS))
    w.constrained_int(s.system_info_value_tag, 0, 31)
    return w.to_bytes()


def encode_system_information_header(summary: SystemInformationSummary) -> bytes:
    """Encode only the SystemInformation header.

    The result is a stub for exercising the presence detector: it carries the
    outer choice, the SIB count and the first SIB's choice tag, with no SIB
    contents after it.
    """
    if not 2 <= summary.first_sib <= 11:
        raise EncodeError(f"sib{summary.first_sib} is outside sib2..sib11")
    w = BitWriter()
    w.choice(0, 2)
    w.choice(0, 2)
    w.choice(0, 2)
    w.sequence_preamble(False, (False,))
    w.size(summary.sib_count, 1, MAX_SIB)
    w.choice(summary.first_sib - 2, SI_SIB_ALTERNATIVES, extensible=True)
    return w.to_bytes()
