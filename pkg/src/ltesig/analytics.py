"""Paging statistics: per-TMSI sessions, lifespan histograms, reports.

A TMSI here is the full 40-bit S-TMSI (MMEC and M-TMSI together). Two pages
that share an M-TMSI under different MME codes are different subscribers.
"""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .pcap import Channel, FramingError, classify_channel, read_capture
from .rrc import PagingMessage, STmsi, decode_pcch
from .uper import DecodeError

__all__ = [
    "ImsiPagingReport",
    "PagingStats",
    "Persistence",
    "TmsiSession",
    "analyze_capture",
    "bin_index",
    "bin_width_us",
    "detect_imsi_paging",
    "lifespan_histogram",
    "lifespan_minutes",
    "persistence_compare",
    "render_report",
    "write_histogram_csv",
    "write_sessions_csv",
]

log = logging.getLogger(__name__)

US_PER_MIN = 60_000_000


@dataclass
class TmsiSession:
    key: int
    first_seen_us: int
    last_seen_us: int
    occurrence_count: int = 1

    @property
    def lifespan_us(self) -> int:
        return self.last_seen_us - self.first_seen_us

    def observe(self, timestamp_us: int) -> None:
        if timestamp_us < self.first_seen_us:
            self.first_seen_us = timestamp_us
        if timestamp_us > self.last_seen_us:
            self.last_seen_us = timestamp_us
        self.occurrence_count += 1


def lifespan_minutes(s: TmsiSession) -> float:
    return s.lifespan_us / US_PER_MIN


@dataclass
class PagingStats:
    total_pages: int = 0
    imsi_pages: int = 0
    sessions: dict[int, TmsiSession] = field(default_factory=dict)
    capture_start_us: int | None = None
    capture_end_us: int | None = None
    # masked IMSI -> page count; the raw digits are never stored
    imsi_masked: Counter = field(default_factory=Counter)
    decode_errors: int = 0

    @property
    def unique_tmsis(self) -> int:
        return len(self.sessions)

    @property
    def duration_us(self) -> int:
        if self.capture_start_us is None:
            return 0
        return self.capture_end_us - self.capture_start_us

    @property
    def longest_lifespan_us(self) -> int:
        return max((s.lifespan_us for s in self.sessions.values()), default=0)

    @property
    def longest_lifespan_minutes(self) -> float:
        return self.longest_lifespan_us / US_PER_MIN

    def _extend_bounds(self, timestamp_us: int) -> None:
        if self.capture_start_us is None:
            self.capture_start_us = self.capture_end_us = timestamp_us
        else:
            self.capture_start_us = min(self.capture_start_us, timestamp_us)
            self.capture_end_us = max(self.capture_end_us, timestamp_us)

    def accumulate(self, msg: PagingMessage, timestamp_us: int) -> PagingStats:
        if self.capture_start_us is None:
            self.capture_start_us = self.capture_end_us = timestamp_us
        elif timestamp_us > self.capture_end_us:
            self.capture_end_us = timestamp_us
        elif timestamp_us < self.capture_start_us:
            self.capture_start_us = timestamp_us
        sessions = self.sessions
        for ident, _ in msg.records:
            self.total_pages += 1
            if type(ident) is STmsi:
                key = (ident[0] << 32) | ident[1]
                s = sessions.get(key)
                if s is None:
                    sessions[key] = TmsiSession(key, timestamp_us, timestamp_us)
                else:
                    # captures are nearly always in time order
                    if timestamp_us > s.last_seen_us:
                        s.last_seen_us = timestamp_us
                    elif timestamp_us < s.first_seen_us:
                        s.first_seen_us = timestamp_us
                    s.occurrence_count += 1
            else:
                masked = ident.masked()
                self.imsi_pages += 1
                self.imsi_masked[masked] += 1
                log.warning("IMSI paging observed: %s at %d us", masked, timestamp_us)
        return self

    def merge(self, other: PagingStats) -> PagingStats:
        """Combine two accumulators into a new one; commutative."""
        out = PagingStats(
            total_pages=self.total_pages + other.total_pages,
            imsi_pages=self.imsi_pages + other.imsi_pages,
            imsi_masked=self.imsi_masked + other.imsi_masked,
            decode_errors=self.decode_errors + other.decode_errors,
        )
        for src in (self, other):
            if src.capture_start_us is not None:
                out._extend_bounds(src.capture_start_us)
                out._extend_bounds(src.capture_end_us)
            for key, s in src.sessions.items():
                mine = out.sessions.get(key)
                if mine is None:
                    out.sessions[key] = TmsiSession(
                        key, s.first_seen_us, s.last_seen_us, s.occurrence_count
                    )
                else:
                    mine.first_seen_us = min(mine.first_seen_us, s.first_seen_us)
                    mine.last_seen_us = max(mine.last_seen_us, s.last_seen_us)
                    mine.occurrence_count += s.occurrence_count
        return out

    def keys(self) -> frozenset[int]:
        return frozenset(self.sessions)

    def to_dict(self) -> dict:
        return {
            "total_pages": self.total_pages,
            "unique_tmsis": self.unique_tmsis,
            "imsi_pages": self.imsi_pages,
            "capture_start_us": self.capture_start_us,
            "capture_end_us": self.capture_end_us,
            "sessions": [
                [s.key, s.first_seen_us, s.last_seen_us, s.occurrence_count]
                for s in sorted(self.sessions.values(), key=lambda s: s.key)
            ],
            "imsi_masked": dict(sorted(self.imsi_masked.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> PagingStats:
        stats = cls(
            total_pages=d["total_pages"],
            imsi_pages=d["imsi_pages"],
            capture_start_us=d["capture_start_us"],
            capture_end_us=d["capture_end_us"],
            imsi_masked=Counter(d.get("imsi_masked", {})),
        )
        for key, first, last, n in d["sessions"]:
            stats.sessions[key] = TmsiSession(key, first, last, n)
        return stats


_DECODE_CACHE_LIMIT = 1 << 16


def analyze_capture(path, dlt: int | None = None) -> PagingStats:
    """Decode every paging frame in a capture into a fresh accumulator."""
    stats = PagingStats()
    # repeated pages of the same UE carry byte-identical payloads, and
    # decoded messages are immutable, so decoding once per payload is safe
    cache: dict[bytes, PagingMessage] = {}
    for item in read_capture(path, dlt):
        if type(item) is FramingError or classify_channel(item) is not Channel.PCCH:
            continue
        payload = item.payload
        msg = cache.get(payload)
        if msg is None:
            try:
                msg = decode_pcch(payload)
            except DecodeError:
                stats.decode_errors += 1
                continue
            if len(cache) >= _DECODE_CACHE_LIMIT:
                cache.clear()
            cache[payload] = msg
        stats.accumulate(msg, item.timestamp_us)
    return stats


def bin_width_us(bin_minutes: float) -> int:
    """Histogram bin width, quantized to whole microseconds."""
    if not bin_minutes > 0:
        raise ValueError("bin_minutes must be positive")
    width = round(bin_minutes * US_PER_MIN)
    if width < 1:
        raise ValueError("bin width below one microsecond")
    return width


def bin_index(lifespan_us: int, bin_minutes: float) -> int:
    """Index of the half-open bin ``[k*w, (k+1)*w)`` holding a lifespan."""
    return lifespan_us // bin_width_us(bin_minutes)


def lifespan_histogram(
    stats: PagingStats, bin_minutes: float = 5.0
) -> list[tuple[float, int]]:
    """Bins covering ``[0, capture duration]``; counts sum to ``unique_tmsis``."""
    width = bin_width_us(bin_minutes)
    span = max(stats.duration_us, stats.longest_lifespan_us)
    counts = [0] * (span // width + 1)
    for s in stats.sessions.values():
        counts[s.lifespan_us // width] += 1
    return [(k * bin_minutes, c) for k, c in enumerate(counts)]


class Persistence(NamedTuple):
    overlap: frozenset
    jaccard: float


def persistence_compare(a: PagingStats, b: PagingStats) -> Persistence:
    ka, kb = a.keys(), b.keys()
    union = ka | kb
    overlap = ka & kb
    return Persistence(overlap, len(overlap) / len(union) if union else 0.0)


class ImsiPagingReport(NamedTuple):
    count: int
    fraction: float


def detect_imsi_paging(stats: PagingStats) -> ImsiPagingReport:
    if stats.total_pages == 0:
        return ImsiPagingReport(stats.imsi_pages, 0.0)
    return ImsiPagingReport(stats.imsi_pages, stats.imsi_pages / stats.total_pages)


ROW_LABELS = ("Total Pages", "Unique TMSIs", "Longest active TMSI in minutes")


def render_report(
    stats: PagingStats | Sequence[PagingStats], names: Sequence[str] | None = None
) -> str:
    """Text table with one column per capture."""
    if isinstance(stats, PagingStats):
        stats = [stats]
    stats = list(stats)
    if names is None:
        names = [f"Capture {i + 1}" for i in range(len(stats))]
    if len(names) != len(stats):
        raise ValueError("one name per capture")
    rows = [("Metrics", *names)]
    rows.append((ROW_LABELS[0], *(str(s.total_pages) for s in stats)))
    rows.append((ROW_LABELS[1], *(str(s.unique_tmsis) for s in stats)))
    rows.append((ROW_LABELS[2], *(f"{s.longest_lifespan_minutes:.2f}" for s in stats)))

    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]

    def line(row):
        cells = [row[0].ljust(widths[0])]
        cells += [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        return "| " + " | ".join(cells) + " |"

    sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    out = [sep, line(rows[0]), sep, *(line(r) for r in rows[1:]), sep]
    for name, s in zip(names, stats):
        report = detect_imsi_paging(s)
        if report.count:
            out.append(
                f"WARNING: {name}: {report.count} page(s) identified the UE by IMSI "
                f"({report.fraction:.2%} of pages)"
            )
    return "\n".join(out) + "\n"


def write_sessions_csv(stats: PagingStats, path) -> None:
    with open(Path(path), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["tmsi_hex", "first_seen_us", "last_seen_us", "occurrences"])
        for s in sorted(stats.sessions.values(), key=lambda s: s.key):
            w.writerow([f"{s.key:010x}", s.first_seen_us, s.last_seen_us, s.occurrence_count])


def write_histogram_csv(histogram: Iterable[tuple[float, int]], path) -> None:
    with open(Path(path), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin_start_min", "count"])
        for start, count in histogram:
            w.writerow([f"{start:g}", count])
