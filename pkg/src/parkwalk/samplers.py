"""Indexed uniform samplers for parking functions, WIPFs and identity-outcome lists.

A draw is a pure function of (family, n, seed, draw_index); there is no
sampler state to carry around.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .catalan import catalan, expected_lucky, last_entry_distribution
from .core import DomainError, PreferenceList, classical_park, dyck_to_wipf


class Family(str, enum.Enum):
    PF = "PF"
    WIPF = "WIPF"
    PF_ID = "PF_ID"


_FAMILY_CODE = {Family.PF: 1, Family.WIPF: 2, Family.PF_ID: 3}


@dataclass(frozen=True)
class SamplerConfig:
    family: Family
    n: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not isinstance(self.n, int) or self.n < 1:
            raise DomainError("n must be a positive integer")
        if self.seed < 0:
            raise DomainError("seed must be >= 0")


def _rng(sampler: SamplerConfig, draw_index: int) -> np.random.Generator:
    if draw_index < 0:
        raise DomainError("draw_index must be >= 0")
    return np.random.default_rng([sampler.seed, _FAMILY_CODE[sampler.family], draw_index])


def _sample_pf(n: int, rng) -> tuple[int, ...]:
    # Park beta circularly on n+1 spots; exactly one stays empty.  Rotating so
    # that spot is n+1 turns beta into a parking function, and each parking
    # function arises from exactly n+1 choices of beta.
    m = n + 1
    beta = rng.integers(1, m + 1, size=n)
    taken = [False] * (m + 1)
    for b in beta:
        s = int(b)
        while taken[s]:
            s = s % m + 1
        taken[s] = True
    empty = taken.index(False, 1)
    shift = m - empty
    return tuple((int(b) - 1 + shift) % m + 1 for b in beta)


def _sample_wipf(n: int, rng) -> tuple[int, ...]:
    # n ups and n+1 downs; the rotation starting just after the first minimum
    # of the prefix sums stays non-negative until its final down step.
    seq = np.array([1] * n + [-1] * (n + 1))
    rng.shuffle(seq)
    prefix = np.cumsum(seq)
    cut = int(np.argmin(prefix)) + 1
    rot = np.concatenate([seq[cut:], seq[:cut]])[:-1]
    path = "".join("U" if s > 0 else "D" for s in rot)
    return dyck_to_wipf(path).prefs


def _sample_pf_id(n: int, rng) -> tuple[int, ...]:
    return tuple(int(rng.integers(1, i + 1)) for i in range(1, n + 1))


_SAMPLERS = {Family.PF: _sample_pf, Family.WIPF: _sample_wipf, Family.PF_ID: _sample_pf_id}


def sample(sampler: SamplerConfig, draw_index: int) -> PreferenceList:
    return PreferenceList(_SAMPLERS[sampler.family](sampler.n, _rng(sampler, draw_index)))


def sample_many(sampler: SamplerConfig, count: int, start: int = 0) -> list[PreferenceList]:
    return [sample(sampler, start + k) for k in range(count)]


@dataclass(frozen=True)
class EstimateCheck:
    name: str
    estimate: float
    exact: Fraction
    stderr: float
    passed: bool


@dataclass(frozen=True)
class WipfCheckReport:
    n: int
    draws: int
    checks: tuple[EstimateCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def _check(name, values, exact, z):
    arr = np.asarray(values, dtype=float)
    est = float(arr.mean())
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    se = sd / math.sqrt(len(arr))
    return EstimateCheck(name, est, exact, se, abs(est - float(exact)) <= z * se + 1e-12)


def empirical_wipf_checks(n: int, draws: int, seed: int = 0, z: float = 3.0) -> WipfCheckReport:
    """Compare sampled WIPF statistics with their exact values at z standard errors."""
    if draws < 1:
        raise DomainError("draws must be >= 1")
    sampler = SamplerConfig(Family.WIPF, n, seed)
    lasts = np.empty(draws, dtype=np.int64)
    luckies = np.empty(draws, dtype=np.int64)
    for k in range(draws):
        a = sample(sampler, k)
        lasts[k] = a[n - 1]
        luckies[k] = len(classical_park(a).lucky)
    dist = last_entry_distribution(n)
    checks = [
        _check("mean_last_entry", lasts, Fraction(sum(j * c for j, c in enumerate(dist.counts, 1)), catalan(n)), z),
        _check("mean_lucky", luckies, expected_lucky(n), z),
    ]
    for j, c in enumerate(dist.counts, start=1):
        checks.append(_check(f"P(last={j})", lasts == j, Fraction(c, catalan(n)), z))
    return WipfCheckReport(n, draws, tuple(checks))
