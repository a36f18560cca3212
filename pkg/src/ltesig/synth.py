"""Synthetic paging and broadcast captures with known ground truth.

TMSIs follow a three-way lifespan mixture: a short-lived majority, a fraction
active for the whole capture, and the rest with lifespans between the two.
Pages are placed on a 1 ms subframe grid; the expected statistics are
computed by direct bookkeeping over the generated page times, never by
running the analyzer.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .analytics import US_PER_MIN, PagingStats, TmsiSession
from .pcap import (
    DEFAULT_DLT,
    P_RNTI,
    SI_RNTI,
    CaptureFrame,
    Direction,
    RadioType,
    RntiType,
    _trusted_frame,
    write_capture,
)
from .rrc import (
    MAX_PAGE_REC,
    Imsi,
    Mib,
    PagingMessage,
    PagingRecord,
    Sib1,
    STmsi,
    encode_mib,
    encode_pcch,
    encode_sib1,
)

__all__ = [
    "GroundTruth",
    "SynthModel",
    "generate_sib_beacon",
    "generate_trace",
    "load_truth",
    "truth_path",
    "write_trace",
]

DEFAULT_START_US = 1_560_000_000_000_000


@dataclass(frozen=True)
class SynthModel:
    duration_min: float = 60.0
    page_rate_per_s: float = 10.0
    tmsi_population: int = 1000
    short_lived_fraction: float = 0.8
    short_lifespan_max_min: float = 5.0
    long_lived_fraction_full_duration: float = 0.05
    imsi_page_count: int = 0
    rng_seed: int = 0
    mmecs: tuple[int, ...] = (0x01,)
    start_time_us: int = DEFAULT_START_US

    def __post_init__(self):
        object.__setattr__(self, "mmecs", tuple(self.mmecs))
        if not self.duration_min > 0:
            raise ValueError("duration_min must be positive")
        if not self.page_rate_per_s > 0:
            raise ValueError("page_rate_per_s must be positive")
        if not self.short_lifespan_max_min > 0:
            raise ValueError("short_lifespan_max_min must be positive")
        for name in ("short_lived_fraction", "long_lived_fraction_full_duration"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.short_lived_fraction + self.long_lived_fraction_full_duration > 1.0:
            raise ValueError("short and long-lived fractions exceed 1")
        if self.tmsi_population < 0 or self.imsi_page_count < 0:
            raise ValueError("counts must be non-negative")
        if not self.mmecs or any(not 0 <= m <= 0xFF for m in self.mmecs):
            raise ValueError("mmecs must be a non-empty set of 8-bit codes")
        if self.tmsi_population > len(set(self.mmecs)) << 32:
            raise ValueError("population exceeds the S-TMSI space")

    @property
    def duration_ms(self) -> int:
        return round(self.duration_min * 60_000)


@dataclass
class GroundTruth:
    stats: PagingStats
    model: SynthModel

    def histogram(self, bin_minutes: float = 5.0) -> list[tuple[float, int]]:
        width = round(bin_minutes * US_PER_MIN)
        spans = np.fromiter(
            (s.last_seen_us - s.first_seen_us for s in self.stats.sessions.values()),
            dtype=np.int64,
            count=len(self.stats.sessions),
        )
        nbins = self.stats.duration_us // width + 1
        counts = np.bincount(spans // width, minlength=nbins)
        return [(k * bin_minutes, int(c)) for k, c in enumerate(counts)]

    def to_json(self) -> dict:
        return {"model": asdict(self.model), "stats": self.stats.to_dict()}

    @classmethod
    def from_json(cls, d: dict) -> GroundTruth:
        return cls(PagingStats.from_dict(d["stats"]), SynthModel(**d["model"]))


def _draw_keys(rng: np.random.Generator, n: int, mmecs: tuple[int, ...]) -> np.ndarray:
    pool = np.array(sorted(set(mmecs)), dtype=np.int64)
    keys = np.empty(0, dtype=np.int64)
    while len(keys) < n:
        need = n - len(keys)
        mmec = pool[rng.integers(0, len(pool), size=need)]
        m_tmsi = rng.integers(0, 1 << 32, size=need, dtype=np.int64)
        fresh = (mmec << 32) | m_tmsi
        keys = np.concatenate([keys, fresh])
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)]
    return keys


def _schedule(model: SynthModel, rng: np.random.Generator):
    """Page times (ms offsets) and owner keys; owner -1 marks an IMSI page."""
    n = model.tmsi_population
    d = model.duration_ms
    keys = _draw_keys(rng, n, model.mmecs)

    u = rng.random(n)
    fs, fl = model.short_lived_fraction, model.long_lived_fraction_full_duration
    short = u < fs
    full = (u >= fs) & (u < fs + fl)
    short_max = min(round(model.short_lifespan_max_min * 60_000), d)

    length = np.where(
        short,
        rng.integers(0, short_max + 1, size=n),
        rng.integers(short_max, d + 1, size=n),
    )
    length[full] = d
    start = (rng.random(n) * (d - length + 1)).astype(np.int64)

    total = max(n, round(model.page_rate_per_s * d / 1000.0))
    counts = np.ones(n, dtype=np.int64)
    if n and total > n:
        weight = (length + 1000).astype(np.float64)
        counts += rng.multinomial(total - n, weight / weight.sum())

    owner = np.repeat(np.arange(n), counts)
    first_of = np.repeat(np.cumsum(counts) - counts, counts)
    rank = np.arange(len(owner)) - first_of
    k = counts[owner]
    span = length[owner]
    jitter = (rng.random(len(owner)) * (span + 1)).astype(np.int64)
    offset = np.where(k == 1, jitter, np.where(rank == 0, 0, np.where(rank == 1, span, jitter)))
    times = start[owner] + offset
    page_keys = keys[owner]

    m = model.imsi_page_count
    imsi_times = rng.integers(0, d + 1, size=m)
    imsi_digits = rng.integers(0, 10, size=(m, 15))
    times = np.concatenate([times, imsi_times])
    page_keys = np.concatenate([page_keys, np.full(m, -1, dtype=np.int64)])
    imsi_index = np.concatenate([np.full(len(owner), -1), np.arange(m)])

    order = np.argsort(times, kind="stable")
    return times[order], page_keys[order], imsi_index[order], imsi_digits


def _bookkeep(model: SynthModel, times_ms, page_keys, imsi_digits) -> PagingStats:
    stats = PagingStats()
    if len(times_ms) == 0:
        return stats
    t_us = model.start_time_us + times_ms * 1000
    stats.total_pages = len(times_ms)
    stats.capture_start_us = int(t_us.min())
    stats.capture_end_us = int(t_us.max())
    tmsi = page_keys >= 0
    stats.imsi_pages = int((~tmsi).sum())
    for row in imsi_digits:
        stats.imsi_masked[Imsi(tuple(int(x) for x in row)).masked()] += 1
    uniq, inverse, occ = np.unique(page_keys[tmsi], return_inverse=True, return_counts=True)
    first = np.full(len(uniq), np.iinfo(np.int64).max)
    last = np.full(len(uniq), np.iinfo(np.int64).min)
    np.minimum.at(first, inverse, t_us[tmsi])
    np.maximum.at(last, inverse, t_us[tmsi])
    for key, f, l, c in zip(uniq.tolist(), first.tolist(), last.tolist(), occ.tolist()):
        stats.sessions[key] = TmsiSession(key, f, l, c)
    return stats


def _paging_frame(timestamp_us: int, ms: int, payload: bytes) -> CaptureFrame:
    # every field here is valid by construction
    return _trusted_frame(
        timestamp_us,
        payload,
        RadioType.FDD,
        Direction.DOWNLINK,
        RntiType.P_RNTI,
        P_RNTI,
        (ms // 10) % 1024,
        ms % 10,
        None,
    )


def generate_trace(model: SynthModel) -> tuple[list[CaptureFrame], GroundTruth]:
    frames, truth = _trace(model)
    return list(frames), truth


def _trace(model: SynthModel) -> tuple[Iterator[CaptureFrame], GroundTruth]:
    """Ground truth up front, frames lazily in time order."""
    rng = np.random.default_rng(model.rng_seed)
    times_ms, page_keys, imsi_index, imsi_digits = _schedule(model, rng)
    truth = GroundTruth(_bookkeep(model, times_ms, page_keys, imsi_digits), model)
    return _frames(model, times_ms, page_keys, imsi_index, imsi_digits), truth


def _frames(model, times_ms, page_keys, imsi_index, imsi_digits) -> Iterator[CaptureFrame]:
    imsi_records = [PagingRecord(Imsi(tuple(int(x) for x in row))) for row in imsi_digits]
    tmsi_records: dict[int, PagingRecord] = {}
    # a TMSI is usually paged alone, and its single-record payload repeats
    single_payload: dict[int, bytes] = {}
    times_l, keys_l, imsi_l = times_ms.tolist(), page_keys.tolist(), imsi_index.tolist()
    start_us = model.start_time_us
    i, n = 0, len(times_l)
    while i < n:
        ms = times_l[i]
        j = i + 1
        while j < n and j - i < MAX_PAGE_REC and times_l[j] == ms:
            j += 1
        if j == i + 1 and keys_l[i] >= 0:
            key = keys_l[i]
            payload = single_payload.get(key)
            if payload is None:
                payload = single_payload[key] = encode_pcch(
                    PagingMessage((PagingRecord(STmsi.from_key(key)),))
                )
        else:
            records = []
            for x in range(i, j):
                key = keys_l[x]
                if key < 0:
                    records.append(imsi_records[imsi_l[x]])
                    continue
                rec = tmsi_records.get(key)
                if rec is None:
                    rec = tmsi_records[key] = PagingRecord(STmsi.from_key(key))
                records.append(rec)
            payload = encode_pcch(PagingMessage(tuple(records)))
        yield _paging_frame(start_us + ms * 1000, ms, payload)
        i = j


def generate_sib_beacon(
    mib: Mib,
    sib1: Sib1,
    period_ms: int,
    duration_ms: int,
    start_time_us: int = DEFAULT_START_US,
    radio_type: RadioType = RadioType.FDD,
) -> list[CaptureFrame]:
    """Alternating MIB / SIB1 frames, one pair per ``period_ms``.

    The MIB goes out in subframe 0 with its SFN MSBs tracking the frame
    counter; SIB1 follows in subframe 5 of the same radio frame.
    """
    if period_ms <= 0:
        raise ValueError("period_ms must be positive")
    sib1_payload = encode_sib1(sib1)
    frames = []
    for t in range(0, int(duration_ms), int(period_ms)):
        sfn = (t // 10) % 1024
        m = Mib(mib.dl_bandwidth, mib.phich_duration, mib.phich_resource, sfn >> 2, mib.spare)
        base = start_time_us + t * 1000
        frames.append(
            CaptureFrame(
                timestamp_us=base,
                payload=encode_mib(m),
                radio_type=radio_type,
                rnti_type=RntiType.NO_RNTI,
                sfn=sfn,
                subframe=0,
            )
        )
        frames.append(
            CaptureFrame(
                timestamp_us=base + 5000,
                payload=sib1_payload,
                radio_type=radio_type,
                rnti_type=RntiType.SI_RNTI,
                rnti=SI_RNTI,
                sfn=sfn,
                subframe=5,
            )
        )
    return frames


def truth_path(capture_path) -> Path:
    p = Path(capture_path)
    return p.with_name(p.name + ".truth.json")


def write_trace(model: SynthModel, path, dlt: int = DEFAULT_DLT, extra_frames=()) -> GroundTruth:
    """Write the capture and its ``<capture>.truth.json`` sidecar.

    ``extra_frames`` are merged in by timestamp; at equal timestamps the
    paging frame comes first.
    """
    frames, truth = _trace(model)
    if extra_frames:
        extra = sorted(extra_frames, key=lambda f: f.timestamp_us)
        frames = heapq.merge(frames, extra, key=lambda f: f.timestamp_us)
    write_capture(frames, path, dlt)
    with open(truth_path(path), "w") as f:
        json.dump(truth.to_json(), f, sort_keys=True)
    return truth


def load_truth(capture_path) -> GroundTruth:
    with open(truth_path(capture_path)) as f:
        return GroundTruth.from_json(json.load(f))
