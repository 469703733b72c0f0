"""Seeded simulation of the probabilistic parking protocol.

Each car performs a +1/-1 walk (right with probability p) from its preferred
spot and parks at the first free spot it visits.  Two boundary rules:

* ``OPEN``: positions 0 and n+1 absorb; the car leaves and later cars still enter.
* ``UNBOUNDED``: the car roams the integers.  A car that never parks holds the
  street forever, so the run halts and later cars never enter.

Randomness is a counter-based stream keyed by (seed, trial, car), so a trial's
result does not depend on which other trials ran or in what order.
"""

from __future__ import annotations

import enum
import logging
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernel_py
from ._rng import stream_key
from .core import EMPTY, DomainError, as_prefs

log = logging.getLogger(__name__)

if os.environ.get("PARKWALK_PURE_PYTHON"):
    _simulate_block = _kernel_py.simulate_block
    KERNEL = "python"
else:
    try:
        from ._kernel import simulate_block as _simulate_block

        KERNEL = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _simulate_block = _kernel_py.simulate_block
        KERNEL = "python"

DEFAULT_STEP_CAP = 10**6
CHUNK = 1 << 16


class Boundary(str, enum.Enum):
    UNBOUNDED = "unbounded"
    OPEN = "open"


class Terminal(enum.IntEnum):
    PARKED = _kernel_py.PARKED
    ESCAPED = _kernel_py.ESCAPED
    CAP_EXCEEDED = _kernel_py.CAP_EXCEEDED
    NOT_STARTED = _kernel_py.NOT_STARTED


def default_escape_margin(p: float) -> int:
    """Distance past the free spots at which a drifting walk is written off.

    A walk that far beyond the reachable free spots returns with probability
    at most 1e-9.
    """
    p = float(p)
    q = 1.0 - p
    if p == 0.5:
        return 1
    lo, hi = min(p, q), max(p, q)
    if lo == 0.0:
        return 1
    return max(1, math.ceil(math.log(1e9) / math.log(hi / lo)))


@dataclass(frozen=True)
class WalkParameters:
    p: float | Fraction
    boundary: Boundary = Boundary.OPEN
    step_cap: int = DEFAULT_STEP_CAP
    escape_margin: int | None = None

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise DomainError(f"p must lie in [0, 1], got {self.p}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.step_cap < 1:
            raise DomainError("step_cap must be >= 1")
        if self.escape_margin is None:
            object.__setattr__(self, "escape_margin", default_escape_margin(self.p))
        elif self.escape_margin < 1:
            raise DomainError("escape_margin must be >= 1")

    @property
    def q(self):
        return 1 - self.p

    @property
    def unbounded(self) -> bool:
        return self.boundary is Boundary.UNBOUNDED


@dataclass(frozen=True)
class TrajectoryRecord:
    car: int
    start: int
    steps_taken: int
    terminal: Terminal
    spot: int = EMPTY
    positions: tuple[int, ...] | None = None


@dataclass(frozen=True)
class ProtocolOutcome:
    occupancy: tuple[int, ...]
    outcome: tuple[int, ...]
    parked_flags: tuple[int, ...]
    total_steps: int
    trajectories: tuple[TrajectoryRecord, ...]

    @property
    def all_parked(self) -> int:
        return int(all(self.parked_flags))

    @property
    def n_parked(self) -> int:
        return sum(self.parked_flags)

    @property
    def lucky(self) -> tuple[int, ...]:
        return tuple(t.car for t in self.trajectories if t.terminal is Terminal.PARKED and t.steps_taken == 0)


def walk_one_car(start: int, occupied, params: WalkParameters, key: int, trace: bool = False) -> TrajectoryRecord:
    """Walk a single car over a fixed occupancy vector (sequence of 0/1, spot s at index s-1)."""
    n = len(occupied)
    if not 1 <= start <= n:
        raise DomainError(f"start {start} outside [1, {n}]")
    occ = [0, *(int(b) for b in occupied), 0]
    path = [] if trace else None
    status, spot, steps = _kernel_py.walk_car(
        key, start, occ, n, float(params.p), params.unbounded, params.step_cap, params.escape_margin, path
    )
    return TrajectoryRecord(
        car=0, start=start, steps_taken=steps, terminal=Terminal(status), spot=spot,
        positions=tuple(path) if trace else None,
    )


def run_protocol(alpha, params: WalkParameters, seed: int = 0, trial_index: int = 0, trace: bool = False) -> ProtocolOutcome:
    """One full run, cars in label order."""
    alpha = as_prefs(alpha)
    n = alpha.n
    occ = [0] * n
    outcome = [EMPTY] * n
    flags = [0] * n
    records = []
    total = 0
    for car, a in enumerate(alpha, start=1):
        rec = walk_one_car(a, occ, params, stream_key(seed, trial_index, car), trace=trace)
        rec = TrajectoryRecord(car, rec.start, rec.steps_taken, rec.terminal, rec.spot, rec.positions)
        records.append(rec)
        total += rec.steps_taken
        if rec.terminal is Terminal.PARKED:
            occ[rec.spot - 1] = 1
            outcome[rec.spot - 1] = car
            flags[car - 1] = 1
        elif rec.terminal is Terminal.CAP_EXCEEDED or params.unbounded:
            for later in range(car + 1, n + 1):
                records.append(TrajectoryRecord(later, alpha[later - 1], 0, Terminal.NOT_STARTED))
            break
    return ProtocolOutcome(tuple(occ), tuple(outcome), tuple(flags), total, tuple(records))


def simulate_block(alpha, params: WalkParameters, seed: int, trial_start: int, count: int):
    """Raw per-trial arrays (spots, status, total_steps) from the active kernel."""
    alpha = as_prefs(alpha)
    return _simulate_block(
        np.asarray(alpha.prefs, dtype=np.int64), alpha.n, float(params.p), int(params.unbounded),
        int(params.step_cap), int(params.escape_margin), int(seed), int(trial_start), int(count),
    )


@dataclass
class BatchStats:
    """Mergeable sufficient statistics of a batch of independent trials."""

    n: int
    trials: int = 0
    park_counts: np.ndarray = None  # per car
    pair_counts: np.ndarray = None  # n x n co-parking counts
    all_parked: int = 0
    cap_exceeded: int = 0
    steps_hist: Counter = field(default_factory=Counter)  # total_steps | all parked
    parked_hist: Counter = field(default_factory=Counter)  # number of parked cars
    subsets: tuple[tuple[int, ...], ...] = ()
    subset_counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.park_counts is None:
            self.park_counts = np.zeros(self.n, dtype=np.int64)
        if self.pair_counts is None:
            self.pair_counts = np.zeros((self.n, self.n), dtype=np.int64)
        for s in self.subsets:
            self.subset_counts.setdefault(tuple(s), 0)

    def add_block(self, status: np.ndarray, steps: np.ndarray):
        flags = (status == Terminal.PARKED).astype(np.int64)
        self.trials += len(steps)
        self.park_counts += flags.sum(axis=0)
        self.pair_counts += flags.T @ flags
        allp = flags.all(axis=1)
        self.all_parked += int(allp.sum())
        self.cap_exceeded += int((status == Terminal.CAP_EXCEEDED).any(axis=1).sum())
        vals, cnts = np.unique(steps[allp], return_counts=True)
        self.steps_hist.update(dict(zip(vals.tolist(), cnts.tolist())))
        vals, cnts = np.unique(flags.sum(axis=1), return_counts=True)
        self.parked_hist.update(dict(zip(vals.tolist(), cnts.tolist())))
        for s in self.subsets:
            idx = [c - 1 for c in s]
            self.subset_counts[s] += int(flags[:, idx].all(axis=1).sum())

    def merge(self, other: "BatchStats") -> "BatchStats":
        out = BatchStats(self.n, subsets=self.subsets)
        out.trials = self.trials + other.trials
        out.park_counts = self.park_counts + other.park_counts
        out.pair_counts = self.pair_counts + other.pair_counts
        out.all_parked = self.all_parked + other.all_parked
        out.cap_exceeded = self.cap_exceeded + other.cap_exceeded
        out.steps_hist = self.steps_hist + other.steps_hist
        out.parked_hist = self.parked_hist + other.parked_hist
        out.subset_counts = {s: self.subset_counts.get(s, 0) + other.subset_counts.get(s, 0) for s in self.subsets}
        return out

    # -- derived quantities

    @property
    def park_freq(self) -> np.ndarray:
        return self.park_counts / self.trials

    @property
    def pair_freq(self) -> np.ndarray:
        return self.pair_counts / self.trials

    @property
    def all_park_freq(self) -> float:
        return self.all_parked / self.trials

    def steps_moments(self):
        """(count, mean, variance, fourth central moment) of total steps given all parked.

        Exact rationals from the histogram; variance is the unbiased sample variance.
        """
        m = sum(self.steps_hist.values())
        if m == 0:
            return 0, None, None, None
        s1 = sum(k * c for k, c in self.steps_hist.items())
        mean = Fraction(s1, m)
        c2 = sum(c * (k - mean) ** 2 for k, c in self.steps_hist.items())
        c4 = sum(c * (k - mean) ** 4 for k, c in self.steps_hist.items())
        var = c2 / (m - 1) if m > 1 else Fraction(0)
        return m, mean, var, c4 / m

    @property
    def mean_steps(self):
        m, mean, _, _ = self.steps_moments()
        return None if mean is None else float(mean)

    @property
    def var_steps(self):
        m, _, var, _ = self.steps_moments()
        return None if var is None else float(var)

    def as_dict(self) -> dict:
        m, mean, var, _ = self.steps_moments()
        return {
            "trials": self.trials,
            "park_freq": self.park_freq.tolist(),
            "all_park_freq": self.all_park_freq,
            "pair_freq": self.pair_freq.tolist(),
            "cap_exceeded": self.cap_exceeded,
            "conditional_trials": m,
            "mean_total_steps": None if mean is None else float(mean),
            "var_total_steps": None if var is None else float(var),
            "parked_count_hist": {str(k): v for k, v in sorted(self.parked_hist.items())},
        }


def batch_simulate(alpha, params: WalkParameters, seed: int, trials: int, subsets=(), chunk: int = CHUNK) -> BatchStats:
    """Run `trials` independent trials and aggregate them.

    Trial t uses the stream keyed by (seed, t); the result is the same for any
    chunking.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    alpha = as_prefs(alpha)
    stats = BatchStats(alpha.n, subsets=tuple(tuple(s) for s in subsets))
    start = 0
    while start < trials:
        count = min(chunk, trials - start)
        _, status, steps = simulate_block(alpha, params, seed, start, count)
        stats.add_block(status, steps)
        start += count
    if stats.cap_exceeded:
        log.warning("%d of %d trials hit the step cap", stats.cap_exceeded, trials)
    return stats
