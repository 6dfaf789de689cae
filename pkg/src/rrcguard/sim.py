"""Discrete-event model of a gNB's RRC connection procedure.

Benign UEs send connection requests as Poisson arrivals. A request that
finds a free resource gets a Msg4 and reserves the resource for
``reservation_hold_s``; a benign UE answers with Msg5 after
``handshake_delay_s`` and the resource is released at that moment. The
malicious UE requests at a fixed rate and never answers, so each of its
reservations runs the full hold time. Requests that find the pool
exhausted are blocked.

A benign UE that issues a new request while its own handshake is still
pending abandons the old one: no Msg5 follows and that reservation is
only freed by expiry. At benign load this is rare; under high load it
depresses the Msg5/Msg4 ratio and can saturate the pool.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import heapq
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CalibrationError, RejectedInputError
from .rng import RngStream, derive_seed

N_FEATURES = 5
FEATURE_NAMES = (
    "f1_conn_request_rate",
    "f2_msg4_count",
    "f3_msg5_count",
    "f4_r1_ratio",
    "f5_resource_occupancy",
)


class EventKind(enum.Enum):
    CONN_REQUEST = "ConnRequest"  # Msg1/Msg3 collapsed
    SETUP = "Setup"  # Msg4
    SETUP_COMPLETE = "SetupComplete"  # Msg5
    RESOURCE_RESERVED = "ResourceReserved"
    RESOURCE_RELEASED = "ResourceReleased"
    BLOCKED = "Blocked"


class Label(enum.Enum):
    NORMAL = "Normal"
    HIGH_LOAD = "HighLoad"
    ATTACK = "Attack"


@dataclass(frozen=True)
class SimConfig:
    duration_s: float = 10.0
    window_ms: int = 100
    n_resources: int = 16
    reservation_hold_s: float = 2.7
    benign_ue_count: int = 0
    benign_request_rate_hz: float = 0.0
    attacker_present: bool = False
    attack_rate_hz: float = 132.0
    overload_threshold_hz: float = 90.0
    seed: int = 0
    handshake_delay_s: float = 0.05
    attack_start_s: float = 0.0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise RejectedInputError("duration_s must be positive")
        if self.window_ms < 1 or 1000 % self.window_ms:
            raise RejectedInputError("window_ms must be a positive divisor of 1000")
        if self.n_resources < 1:
            raise RejectedInputError("n_resources must be at least 1")
        if not self.reservation_hold_s > 0 or not self.overload_threshold_hz > 0:
            raise RejectedInputError("reservation_hold_s and overload_threshold_hz must be positive")
        if self.benign_ue_count < 0:
            raise RejectedInputError("benign_ue_count must be nonnegative")
        for name in ("benign_request_rate_hz", "attack_rate_hz", "handshake_delay_s", "attack_start_s"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise RejectedInputError(f"{name} must be finite and nonnegative")

    @property
    def window_s(self) -> float:
        return self.window_ms / 1000.0

    @property
    def n_windows(self) -> int:
        return int(round(self.duration_s * 1000)) // self.window_ms

    @property
    def benign_load_hz(self) -> float:
        return self.benign_ue_count * self.benign_request_rate_hz

    @property
    def attacker_id(self) -> int:
        return self.benign_ue_count

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RrcEvent:
    time_s: float
    kind: EventKind
    ue_id: int
    malicious: bool = False


# internal scheduler event types, ordered after arrivals at equal times
_ARRIVAL, _MSG5_DUE, _EXPIRY = 0, 1, 2


def _benign_arrivals(config: SimConfig, rng: RngStream) -> list[tuple[float, int]]:
    """Superposed Poisson arrivals; each request is assigned a uniform UE."""
    rate = config.benign_load_hz
    if rate <= 0 or config.benign_ue_count == 0:
        return []
    out = []
    t = 0.0
    while True:
        t += float(rng.exponential(rate))
        if t >= config.duration_s:
            return out
        out.append((t, int(rng.integers(0, config.benign_ue_count))))


def _attacker_arrivals(config: SimConfig) -> list[float]:
    if not config.attacker_present or config.attack_rate_hz <= 0:
        return []
    period = 1.0 / config.attack_rate_hz
    n = int(np.ceil((config.duration_s - config.attack_start_s) / period))
    times = [config.attack_start_s + k * period for k in range(max(n, 0))]
    return [t for t in times if t < config.duration_s]


def simulate(config: SimConfig) -> list[RrcEvent]:
    """Run the event loop and return the time-ordered trace."""
    rng = RngStream(derive_seed(config.seed, "sim"))
    queue: list[tuple[float, int, int, int, int]] = []  # time, type, seq, ue, handshake
    seq = 0

    def push(t, kind, ue, hs=-1):
        nonlocal seq
        heapq.heappush(queue, (t, kind, seq, ue, hs))
        seq += 1

    for t, ue in _benign_arrivals(config, rng):
        push(t, _ARRIVAL, ue)
    for t in _attacker_arrivals(config):
        push(t, _ARRIVAL, config.attacker_id)

    trace: list[RrcEvent] = []
    free = config.n_resources
    holding: set[int] = set()  # handshake ids currently holding a resource
    pending: dict[int, int] = {}  # benign ue -> handshake awaiting Msg5
    next_hs = 0
    attacker = config.attacker_id

    while queue:
        t, kind, _, ue, hs = heapq.heappop(queue)
        evil = config.attacker_present and ue == attacker
        if kind == _ARRIVAL:
            trace.append(RrcEvent(t, EventKind.CONN_REQUEST, ue, evil))
            if not evil:
                pending.pop(ue, None)  # an outstanding handshake is abandoned
            if free == 0:
                trace.append(RrcEvent(t, EventKind.BLOCKED, ue, evil))
                continue
            free -= 1
            hs = next_hs
            next_hs += 1
            holding.add(hs)
            trace.append(RrcEvent(t, EventKind.RESOURCE_RESERVED, ue, evil))
            trace.append(RrcEvent(t, EventKind.SETUP, ue, evil))
            push(t + config.reservation_hold_s, _EXPIRY, ue, hs)
            if not evil:
                pending[ue] = hs
                push(t + config.handshake_delay_s, _MSG5_DUE, ue, hs)
        elif kind == _MSG5_DUE:
            if pending.get(ue) != hs:
                continue
            del pending[ue]
            trace.append(RrcEvent(t, EventKind.SETUP_COMPLETE, ue, False))
            if hs in holding:
                holding.discard(hs)
                free += 1
                trace.append(RrcEvent(t, EventKind.RESOURCE_RELEASED, ue, False))
        else:  # reservation expiry
            if hs in holding:
                holding.discard(hs)
                free += 1
                if pending.get(ue) == hs:
                    del pending[ue]
                trace.append(RrcEvent(t, EventKind.RESOURCE_RELEASED, ue, evil))
    return trace


@dataclass(frozen=True)
class WindowFeatures:
    window_start_s: float
    f1_conn_request_rate: float
    f2_msg4_count: float
    f3_msg5_count: float
    f4_r1_ratio: float
    f5_resource_occupancy: float
    label: Label = Label.NORMAL

    def vector(self) -> np.ndarray:
        return np.array(
            [
                self.f1_conn_request_rate,
                self.f2_msg4_count,
                self.f3_msg5_count,
                self.f4_r1_ratio,
                self.f5_resource_occupancy,
            ]
        )


def window_label(config: SimConfig, window_end_s: float) -> Label:
    if config.attacker_present and config.attack_rate_hz > 0 and window_end_s > config.attack_start_s:
        return Label.ATTACK
    if config.benign_load_hz > config.overload_threshold_hz:
        return Label.HIGH_LOAD
    return Label.NORMAL


def extract_features(trace: Sequence[RrcEvent], config: SimConfig) -> list[WindowFeatures]:
    """Summarize a trace into one feature vector per window.

    A Msg5 is credited to the window of the Msg4 it answers, so f3 <= f2
    and R1 = f3/f2 stays in [0, 1]. Windows without any Msg4 get R1 = 1.0
    when no request was seen (idle) and 0.0 otherwise. Occupancy is the
    time-weighted mean fraction of reserved resources.
    """
    for a, b in zip(trace, trace[1:]):
        if b.time_s < a.time_s:
            raise RejectedInputError("trace is not time-ordered")
    w = config.window_s
    n_win = config.n_windows
    requests = np.zeros(n_win)
    msg4 = np.zeros(n_win)
    msg5 = np.zeros(n_win)
    busy = np.zeros(n_win)  # integral of reserved count over each window

    def win(t):
        return min(int(t / w), n_win - 1) if n_win else 0

    last_msg4: dict[int, int] = {}
    reserved = 0
    t_prev = 0.0

    def accrue(t_to):
        nonlocal t_prev
        t = t_prev
        k = win(t)
        while t < t_to and reserved:
            edge = t_to if k >= n_win - 1 else min((k + 1) * w, t_to)
            if edge > t:
                busy[k] += reserved * (edge - t)
                t = edge
            k += 1
        t_prev = t_to

    for ev in trace:
        if ev.time_s >= n_win * w:
            break
        accrue(ev.time_s)
        k = win(ev.time_s)
        if ev.kind is EventKind.CONN_REQUEST:
            requests[k] += 1
        elif ev.kind is EventKind.SETUP:
            msg4[k] += 1
            last_msg4[ev.ue_id] = k
        elif ev.kind is EventKind.SETUP_COMPLETE:
            origin = last_msg4.get(ev.ue_id)
            if origin is not None:
                msg5[origin] += 1
        elif ev.kind is EventKind.RESOURCE_RESERVED:
            reserved += 1
        elif ev.kind is EventKind.RESOURCE_RELEASED:
            reserved -= 1
    accrue(n_win * w)

    rows = []
    for k in range(n_win):
        if msg4[k] > 0:
            r1 = msg5[k] / msg4[k]
        else:
            r1 = 0.0 if requests[k] > 0 else 1.0
        rows.append(
            WindowFeatures(
                window_start_s=round(k * w, 9),
                f1_conn_request_rate=requests[k] / w,
                f2_msg4_count=msg4[k],
                f3_msg5_count=msg5[k],
                f4_r1_ratio=float(r1),
                f5_resource_occupancy=busy[k] / (w * config.n_resources),
                label=window_label(config, (k + 1) * w),
            )
        )
    return rows


@dataclass
class Scaler:
    """Per-feature min-max map into [0, 1].

    Values outside the fitted range saturate at the bounds, so every scaled
    vector lies in the unit box. Constant features map to 0.5.
    """

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        self.min = np.asarray(self.min, dtype=np.float64)
        self.max = np.asarray(self.max, dtype=np.float64)
        if self.min.shape != self.max.shape or np.any(self.min > self.max):
            raise RejectedInputError("scaler needs min <= max per feature")

    @classmethod
    def fit(cls, X) -> "Scaler":
        X = np.asarray(X, dtype=np.float64)
        return cls(X.min(axis=0), X.max(axis=0))

    @property
    def constant(self) -> np.ndarray:
        return self.max == self.min

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        span = np.where(self.constant, 1.0, self.max - self.min)
        with np.errstate(over="ignore"):  # subnormal spans overflow, then clip
            out = np.clip((X - self.min) / span, 0.0, 1.0)
        return np.where(self.constant, 0.5, out)

    def to_dict(self) -> dict:
        return {"min": self.min.tolist(), "max": self.max.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Scaler":
        return cls(doc["min"], doc["max"])


@dataclass
class LabeledDataset:
    rows: list[WindowFeatures]
    scaler_stats: Scaler
    provenance: str = ""

    def __post_init__(self):
        if not self.rows:
            raise RejectedInputError("dataset is empty")

    def __len__(self):
        return len(self.rows)

    def matrix(self) -> np.ndarray:
        return np.array([r.vector() for r in self.rows])

    def labels(self) -> list[Label]:
        return [r.label for r in self.rows]

    def subset(self, label: Label) -> list[WindowFeatures]:
        return [r for r in self.rows if r.label is label]

    def write_csv(self, path) -> Path:
        """Write rows as CSV and scaler/provenance as a ``.json`` sidecar."""
        path = Path(path)
        write_rows_csv(self.rows, path)
        sidecar = path.with_suffix(".json")
        sidecar.write_text(
            json.dumps({"scaler": self.scaler_stats.to_dict(), "provenance": self.provenance}, indent=2)
        )
        return path

    @classmethod
    def read_csv(cls, path) -> "LabeledDataset":
        path = Path(path)
        rows = read_rows_csv(path)
        sidecar = path.with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
            scaler = Scaler.from_dict(meta["scaler"])
            provenance = meta.get("provenance", "")
        else:
            scaler = _normal_scaler(rows)
            provenance = ""
        return cls(rows, scaler, provenance)


CSV_HEADER = ["window_start_s", "f1", "f2", "f3", "f4", "f5", "label"]


def write_rows_csv(rows: Iterable[WindowFeatures], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([repr(r.window_start_s), *map(repr, r.vector().tolist()), r.label.value])


def read_rows_csv(path) -> list[WindowFeatures]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise RejectedInputError(f"unexpected dataset header {header}")
        return [
            WindowFeatures(float(r[0]), *(float(v) for v in r[1:6]), label=Label(r[6]))
            for r in reader
        ]


def _normal_scaler(rows: Sequence[WindowFeatures]) -> Scaler:
    normal = [r.vector() for r in rows if r.label is Label.NORMAL]
    if not normal:
        raise CalibrationError("no Normal rows to fit the feature scaler on")
    return Scaler.fit(normal)


def generate_dataset(
    profiles: Sequence[SimConfig],
    windows_per_profile: int,
    seed: int = 0,
    warmup_s: float = 0.0,
) -> LabeledDataset:
    """Simulate each profile for ``windows_per_profile`` windows and pool them.

    ``warmup_s`` of simulated time is run and discarded before the kept
    windows so reservation backlogs reach steady state. Rows are shuffled
    with a stream derived from ``seed``; scaler stats come from Normal rows.
    """
    if windows_per_profile < 1:
        raise RejectedInputError("windows_per_profile must be at least 1")
    rows: list[WindowFeatures] = []
    for cfg in profiles:
        skip = int(round(warmup_s * 1000)) // cfg.window_ms
        run = replace(cfg, duration_s=(windows_per_profile + skip) * cfg.window_s)
        windows = extract_features(simulate(run), run)[skip:]
        rows.extend(replace(r, window_start_s=round(r.window_start_s - skip * cfg.window_s, 9)) for r in windows)
    scaler = _normal_scaler(rows)
    order = RngStream(derive_seed(seed, "dataset-shuffle")).permutation(len(rows))
    digest = hashlib.sha256("|".join(p.digest() for p in profiles).encode()).hexdigest()[:16]
    return LabeledDataset([rows[i] for i in order], scaler, digest)
