"""Discrete-event model of eNB RRC connection slots under a request flood.

The eNB holds a fixed pool of connection slots. Without mitigation a
``ConnectionRequest`` takes a slot at once and the slot is released either by
``SetupComplete`` followed later by a ``Release``, or by the setup-complete
timeout. A flooding UE answers the eNB's ``RRCConnectionSetup`` by releasing
locally, so its slot stays half-open until the timer fires.

With ``deferred_allocation`` the eNB keeps no per-connection state until
``SetupComplete`` arrives, in the manner of TCP SYN cookies.

The event queue is ordered by ``(time, insertion sequence)`` so runs are
reproducible bit for bit.
"""

from __future__ import annotations

import csv
import dataclasses
import heapq
import io
import json
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "ATTACKER_POLICIES",
    "MITIGATIONS",
    "LogEntry",
    "SimConfig",
    "SimResult",
    "attacker_policy_events",
    "blocking_probability",
    "event_log_jsonl",
    "load_config",
    "metrics_csv",
    "parse_config",
    "run_simulation",
]

ATTACKER_POLICIES = ("none", "half_open_once", "release_loop", "throttled")
MITIGATIONS = ("none", "deferred_allocation")

# event kinds
CONNECTION_REQUEST = "ConnectionRequest"
SETUP_SENT = "SetupSent"
SETUP_COMPLETE = "SetupComplete"
SETUP_COMPLETE_TIMEOUT = "SetupCompleteTimeout"
RELEASE = "Release"
LEGIT_ARRIVAL = "LegitArrival"
LEGIT_DEPARTURE = "LegitDeparture"

ATTACKER = "attacker"
LEGIT = "legit"

AWAITING = "awaiting_setup_complete"
CONNECTED = "connected"


@dataclass(frozen=True)
class SimConfig:
    resource_pool_size: int = 100
    setup_complete_timeout_ms: float = 1000.0
    attacker_policy: str = "none"
    attacker_loop_period_ms: float = 10.0
    # period for the throttled policy; None falls back to reconnect_delay_ms
    throttle_period_ms: float | None = None
    reconnect_delay_ms: float = 100.0
    legit_arrival_rate_per_s: float = 0.0
    legit_hold_time_ms: float = 1000.0
    legit_setup_delay_ms: float = 0.0
    mitigation: str = "none"
    crash_on_overflow: bool = False
    duration_ms: float = 10_000.0
    rng_seed: int = 0

    def __post_init__(self):
        # accept ints and numpy scalars for float fields so runs print identically
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.type in ("float", "float | None") and v is not None and type(v) is not float:
                object.__setattr__(self, f.name, float(v))

    def validate(self) -> None:
        if self.resource_pool_size < 1:
            raise ValueError("resource_pool_size must be >= 1")
        for name in (
            "setup_complete_timeout_ms",
            "attacker_loop_period_ms",
            "reconnect_delay_ms",
            "legit_hold_time_ms",
            "duration_ms",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.throttle_period_ms is not None and not self.throttle_period_ms > 0:
            raise ValueError("throttle_period_ms must be positive")
        if self.legit_arrival_rate_per_s < 0:
            raise ValueError("legit_arrival_rate_per_s must be >= 0")
        if self.legit_setup_delay_ms < 0:
            raise ValueError("legit_setup_delay_ms must be >= 0")
        if self.attacker_policy not in ATTACKER_POLICIES:
            raise ValueError(f"unknown attacker_policy {self.attacker_policy!r}")
        if self.mitigation not in MITIGATIONS:
            raise ValueError(f"unknown mitigation {self.mitigation!r}")
        if not 0 <= self.rng_seed < 1 << 64:
            raise ValueError("rng_seed must be a 64-bit unsigned value")

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LogEntry:
    time_ms: float
    seq: int
    event: str
    conn: str
    actor: str
    outcome: str
    free_slots: int
    allocated: int

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


@dataclass
class SimResult:
    config: SimConfig
    time_to_exhaustion_ms: float | None = None
    crashed_at_ms: float | None = None
    legit_attempts: int = 0
    legit_blocked: int = 0
    peak_half_open: int = 0
    event_log: list[LogEntry] = field(default_factory=list)


def attacker_policy_events(policy: str, cfg: SimConfig) -> list[float]:
    """Times (ms) at which the attacking UE sends a ConnectionRequest."""
    if policy == "none":
        return []
    if policy == "half_open_once":
        return [0.0]
    if policy == "release_loop":
        period = cfg.attacker_loop_period_ms
    elif policy == "throttled":
        period = cfg.throttle_period_ms or cfg.reconnect_delay_ms
    else:
        raise ValueError(f"unknown attacker policy {policy!r}")
    n = int(np.ceil(cfg.duration_ms / period))
    times = [i * period for i in range(n)]
    return [t for t in times if t < cfg.duration_ms]


def _legit_arrivals(cfg: SimConfig) -> list[float]:
    if cfg.legit_arrival_rate_per_s == 0:
        return []
    rng = np.random.default_rng(cfg.rng_seed)
    mean_gap = 1000.0 / cfg.legit_arrival_rate_per_s
    times, t = [], 0.0
    while True:
        t += float(rng.exponential(mean_gap))
        if t >= cfg.duration_ms:
            return times
        times.append(t)


class _Crash(Exception):
    pass


class _Enb:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.deferred = cfg.mitigation == "deferred_allocation"
        self.free = cfg.resource_pool_size
        self.slots: dict[str, dict] = {}  # allocated: conn -> {kind, state, deadline_ms}
        self.pending: dict[str, float] = {}  # deferred handshakes: conn -> deadline
        self.queue: list = []
        self.seq = 0
        self.result = SimResult(cfg)
        self.now = 0.0

    def push(self, t: float, event: str, conn: str, actor: str) -> None:
        heapq.heappush(self.queue, (t, self.seq, event, conn, actor))
        self.seq += 1

    def log(self, seq: int, event: str, conn: str, actor: str, outcome: str) -> None:
        self.result.event_log.append(
            LogEntry(self.now, seq, event, conn, actor, outcome, self.free, len(self.slots))
        )

    def half_open(self) -> int:
        return sum(1 for s in self.slots.values() if s["state"] == AWAITING)

    def allocate(self, conn: str, actor: str, state: str) -> None:
        self.free -= 1
        self.slots[conn] = {
            "kind": actor,
            "state": state,
            "deadline_ms": self.now + self.cfg.setup_complete_timeout_ms,
        }
        if self.free == 0 and self.result.time_to_exhaustion_ms is None:
            self.result.time_to_exhaustion_ms = self.now
        self.result.peak_half_open = max(self.result.peak_half_open, self.half_open())

    def free_slot(self, conn: str) -> None:
        del self.slots[conn]
        self.free += 1

    def overflow(self, seq, event, conn, actor) -> None:
        """A request that found no free slot: crash or reject."""
        if self.cfg.crash_on_overflow:
            if actor == LEGIT:
                self.result.legit_blocked += 1
            self.result.crashed_at_ms = self.now
            self.log(seq, event, conn, actor, "crash")
            raise _Crash
        if actor == LEGIT:
            self.result.legit_blocked += 1
        self.log(seq, event, conn, actor, "rejected")

    def handle(self, seq: int, event: str, conn: str, actor: str) -> None:
        cfg = self.cfg
        if event == LEGIT_ARRIVAL:
            self.log(seq, event, conn, actor, "")
            self.push(self.now, CONNECTION_REQUEST, conn, actor)

        elif event == CONNECTION_REQUEST:
            if actor == LEGIT:
                self.result.legit_attempts += 1
            if self.deferred:
                self.pending[conn] = self.now + cfg.setup_complete_timeout_ms
                self.log(seq, event, conn, actor, "stateless")
            elif self.free == 0:
                self.overflow(seq, event, conn, actor)
                return
            else:
                self.allocate(conn, actor, AWAITING)
                self.log(seq, event, conn, actor, "allocated")
            self.push(self.now, SETUP_SENT, conn, actor)
            self.push(self.now + cfg.setup_complete_timeout_ms, SETUP_COMPLETE_TIMEOUT, conn, actor)

        elif event == SETUP_SENT:
            self.log(seq, event, conn, actor, "")
            if actor == LEGIT:
                self.push(self.now + cfg.legit_setup_delay_ms, SETUP_COMPLETE, conn, actor)
            else:
                # the flooding UE releases locally; the eNB never hears of it
                self.push(self.now, RELEASE, conn, actor)

        elif event == SETUP_COMPLETE:
            if self.deferred:
                if self.pending.pop(conn, None) is None:
                    self.result.legit_blocked += 1
                    self.log(seq, event, conn, actor, "expired")
                    return
                if self.free == 0:
                    self.overflow(seq, event, conn, actor)
                    return
                self.allocate(conn, actor, CONNECTED)
            else:
                slot = self.slots.get(conn)
                if slot is None or slot["state"] != AWAITING:
                    self.result.legit_blocked += 1
                    self.log(seq, event, conn, actor, "expired")
                    return
                slot["state"] = CONNECTED
            self.log(seq, event, conn, actor, "connected")
            self.push(self.now + cfg.legit_hold_time_ms, LEGIT_DEPARTURE, conn, actor)

        elif event == SETUP_COMPLETE_TIMEOUT:
            if self.deferred:
                if self.pending.pop(conn, None) is not None:
                    self.log(seq, event, conn, actor, "discarded")
                return
            slot = self.slots.get(conn)
            if slot is not None and slot["state"] == AWAITING:
                self.free_slot(conn)
                self.log(seq, event, conn, actor, "freed")

        elif event == LEGIT_DEPARTURE:
            self.log(seq, event, conn, actor, "")
            self.push(self.now, RELEASE, conn, actor)

        elif event == RELEASE:
            if actor == LEGIT and conn in self.slots:
                self.free_slot(conn)
                self.log(seq, event, conn, actor, "freed")
            else:
                self.log(seq, event, conn, actor, "local")

        else:
            raise AssertionError(event)


def run_simulation(cfg: SimConfig) -> SimResult:
    cfg.validate()
    enb = _Enb(cfg)
    for i, t in enumerate(attacker_policy_events(cfg.attacker_policy, cfg)):
        enb.push(t, CONNECTION_REQUEST, f"a{i}", ATTACKER)
    for i, t in enumerate(_legit_arrivals(cfg)):
        enb.push(t, LEGIT_ARRIVAL, f"u{i}", LEGIT)
    while enb.queue:
        t, seq, event, conn, actor = heapq.heappop(enb.queue)
        if t > cfg.duration_ms:
            break
        enb.now = t
        try:
            enb.handle(seq, event, conn, actor)
        except _Crash:
            break
    return enb.result


def blocking_probability(result: SimResult) -> float:
    if result.legit_attempts == 0:
        return 0.0
    return result.legit_blocked / result.legit_attempts


def event_log_jsonl(result: SimResult) -> str:
    return "".join(e.to_json() + "\n" for e in result.event_log)


METRIC_FIELDS = (
    "time_to_exhaustion_ms",
    "crashed_at_ms",
    "legit_attempts",
    "legit_blocked",
    "blocking_probability",
    "peak_half_open",
    "events",
)


def metrics_csv(results: Iterable[SimResult]) -> str:
    """One CSV row per run: the full configuration, then the outcome."""
    config_fields = [f.name for f in dataclasses.fields(SimConfig)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*config_fields, *METRIC_FIELDS])
    for r in results:
        metrics = (
            r.time_to_exhaustion_ms,
            r.crashed_at_ms,
            r.legit_attempts,
            r.legit_blocked,
            f"{blocking_probability(r):.6f}",
            r.peak_half_open,
            len(r.event_log),
        )
        row = [getattr(r.config, n) for n in config_fields] + list(metrics)
        w.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


_THROTTLED = re.compile(r"throttled\(\s*([0-9.eE+-]+)\s*\)")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_config(text: str, **overrides) -> SimConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    types = {f.name: f.type for f in dataclasses.fields(SimConfig)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep:
            raise ValueError(f"line {lineno}: expected key = value")
        if key not in types:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        kind = types[key]
        try:
            if key == "attacker_policy":
                m = _THROTTLED.fullmatch(value)
                if m:
                    values["throttle_period_ms"] = float(m.group(1))
                    value = "throttled"
                values[key] = value
            elif kind == "str":
                values[key] = value
            elif kind == "bool":
                low = value.lower()
                if low not in _TRUE | _FALSE:
                    raise ValueError(value)
                values[key] = low in _TRUE
            elif kind == "int":
                values[key] = int(value, 0)
            elif value.lower() in ("", "none"):
                values[key] = None
            else:
                values[key] = float(value)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value {value!r} for {key}") from None
    values.update(overrides)
    cfg = SimConfig(**values)
    cfg.validate()
    return cfg


def load_config(path, **overrides) -> SimConfig:
    with open(path) as f:
        return parse_config(f.read(), **overrides)
