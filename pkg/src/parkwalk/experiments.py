"""Monte Carlo checks against the exact analytics: correlation, tails, heatmap, panels."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from . import analytics as an
from .core import DomainError, as_prefs, is_identity_outcome
from .engine import Boundary, WalkParameters, batch_simulate

Z = 3.0
MIN_SAMPLES = 30


class Verdict(str, enum.Enum):
    CONSISTENT_NEGATIVE = "CONSISTENT_NEGATIVE"
    VIOLATION = "VIOLATION"
    INCONCLUSIVE = "INCONCLUSIVE"


# -- correlation ----------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationEntry:
    subset: tuple[int, ...]
    joint: float  # estimate of Pr[prod X_i = 1]
    product: float  # product of the marginal estimates
    diff: float
    stderr: float
    verdict: Verdict
    exact_diff: float | None = None


@dataclass(frozen=True)
class CorrelationReport:
    alpha: tuple[int, ...]
    p: float
    boundary: str
    trials: int
    z: float
    pairs: tuple[CorrelationEntry, ...]
    subsets: tuple[CorrelationEntry, ...]

    def entries(self):
        return self.pairs + self.subsets

    @property
    def violations(self) -> list[CorrelationEntry]:
        return [e for e in self.entries() if e.verdict is Verdict.VIOLATION]

    def as_dict(self) -> dict:
        def row(e):
            return {
                "subset": list(e.subset), "joint": e.joint, "product": e.product, "diff": e.diff,
                "stderr": e.stderr, "verdict": e.verdict.value, "exact_diff": e.exact_diff,
            }

        return {
            "alpha": list(self.alpha), "p": self.p, "boundary": self.boundary, "trials": self.trials,
            "z": self.z, "pairs": [row(e) for e in self.pairs], "subsets": [row(e) for e in self.subsets],
        }


def _verdict(diff, se, z, enough) -> Verdict:
    if not enough:
        return Verdict.INCONCLUSIVE
    if se == 0:
        return Verdict.CONSISTENT_NEGATIVE if diff <= 0 else Verdict.VIOLATION
    if diff - z * se > 0:
        return Verdict.VIOLATION
    if diff + z * se <= 0:
        return Verdict.CONSISTENT_NEGATIVE
    return Verdict.INCONCLUSIVE


def _entry(subset, stats, z, min_samples, exact_law) -> CorrelationEntry:
    t = stats.trials
    idx = [c - 1 for c in subset]
    P = stats.park_freq
    C = stats.pair_freq
    if len(subset) == 2:
        joint = C[idx[0], idx[1]]
    else:
        joint = stats.subset_counts[tuple(subset)] / t
    prod = float(np.prod(P[idx]))
    diff = joint - prod
    counts = stats.park_counts[idx]
    # cars that always park factor out exactly; one that never parks pins both sides to 0
    live = [i for i, k in zip(idx, counts.tolist()) if k != t]
    if len(live) < 2 or (counts == 0).any():
        se = 0.0
    else:
        # delta method: influence Y - sum_i c_i X_i with Y = prod X_S, c_i = prod_{k != i} P_k
        c = np.array([np.prod(np.delete(P[live], m)) for m in range(len(live))])
        cov_yx = joint - joint * P[live]
        cov_xx = C[np.ix_(live, live)] - np.outer(P[live], P[live])
        var = joint * (1 - joint) - 2 * c @ cov_yx + c @ cov_xx @ c
        se = math.sqrt(max(var, 0.0) / t)
    enough = all(k in (0, t) or (k >= min_samples and t - k >= min_samples) for k in counts.tolist())
    exact = None
    if exact_law is not None:
        marg = an.law_marginals(exact_law)
        exact = float(an.law_subset_prob(exact_law, subset) - math.prod(marg[i] for i in idx))
    return CorrelationEntry(tuple(subset), float(joint), prod, float(diff), se, _verdict(diff, se, z, enough), exact)


def correlation_test(alpha, params: WalkParameters, seed: int, trials: int, subsets=None,
                     z: float = Z, min_samples: int = MIN_SAMPLES, exact: bool = True) -> CorrelationReport:
    """Estimate Pr[prod X_i] - prod Pr[X_i] for every pair and the requested subsets.

    ``subsets=None`` checks every subset of size >= 3 when n <= 6 and only the
    full set otherwise.  With ``exact`` the exact difference is attached for n <= 10.
    """
    alpha = as_prefs(alpha)
    n = alpha.n
    if subsets is None:
        if n <= 6:
            subsets = [s for r in range(3, n + 1) for s in combinations(range(1, n + 1), r)]
        else:
            subsets = [tuple(range(1, n + 1))] if n >= 3 else []
    subsets = [tuple(sorted(s)) for s in subsets]
    for s in subsets:
        if len(s) < 2 or len(set(s)) != len(s) or s[0] < 1 or s[-1] > n:
            raise DomainError(f"bad subset {s}")
    stats = batch_simulate(alpha, params, seed, trials, subsets=[s for s in subsets if len(s) > 2])
    law = an.exact_joint_law(alpha, params.p, params.boundary) if exact and n <= 10 else None
    pairs = tuple(_entry(s, stats, z, min_samples, law) for s in combinations(range(1, n + 1), 2))
    subs = tuple(_entry(s, stats, z, min_samples, law) for s in subsets if len(s) > 2)
    return CorrelationReport(alpha.prefs, float(params.p), params.boundary.value, trials, z, pairs, subs)


# -- Chernoff -------------------------------------------------------------------


def upper_bound(mu, delta) -> float:
    return math.exp(mu * (delta - (1 + delta) * math.log1p(delta)))


def lower_bound_as_stated(mu, delta) -> float:
    # (e^d / (1-d)^(1-d))^mu; it is >= 1 for every d in [0, 1]
    t = 0.0 if delta == 1 else (1 - delta) * math.log1p(-delta)
    return math.exp(mu * (delta - t))


def lower_bound_standard(mu, delta) -> float:
    t = 0.0 if delta == 1 else (1 - delta) * math.log1p(-delta)
    return math.exp(mu * (-delta - t))


@dataclass(frozen=True)
class TailCheck:
    delta: float
    side: str  # "upper" or "lower"
    threshold: float
    empirical: float
    stderr: float
    exact: float
    bound: float
    standard_bound: float | None
    passed: bool


@dataclass(frozen=True)
class ChernoffReport:
    alpha: tuple[int, ...]
    p: float
    trials: int
    mu: float
    checks: tuple[TailCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "alpha": list(self.alpha), "p": self.p, "trials": self.trials, "mu": self.mu, "ok": self.ok,
            "checks": [asdict(c) for c in self.checks],
        }


def parked_count_law(law) -> dict[int, object]:
    out: dict[int, object] = {}
    for k, pr in law.items():
        out[sum(k)] = out.get(sum(k), 0) + pr
    return out


def chernoff_check(alpha, params: WalkParameters, seed: int, trials: int,
                   deltas: Sequence[float] = (0.25, 0.5, 0.75, 1.0), z: float = Z) -> ChernoffReport:
    """Empirical tails of the parked count N against the multiplicative bounds, mu taken exactly."""
    if params.boundary is not Boundary.OPEN:
        raise DomainError("the tail check is stated for the open boundary")
    for d in deltas:
        if not 0 <= d <= 1:
            raise DomainError("delta must lie in [0, 1]")
    alpha = as_prefs(alpha)
    law = an.exact_joint_law(alpha, params.p, "open")
    mu = float(sum(an.law_marginals(law)))
    nlaw = {k: float(v) for k, v in parked_count_law(law).items()}
    stats = batch_simulate(alpha, params, seed, trials)
    hist = stats.parked_hist
    checks = []
    for d in deltas:
        for side in ("upper", "lower"):
            if side == "upper":
                thr = (1 + d) * mu
                hit = lambda k: k >= thr - 1e-12  # noqa: E731
                bound, std = upper_bound(mu, d), None
            else:
                thr = (1 - d) * mu
                hit = lambda k: k <= thr + 1e-12  # noqa: E731
                bound, std = lower_bound_as_stated(mu, d), lower_bound_standard(mu, d)
            f = sum(c for k, c in hist.items() if hit(k)) / trials
            se = math.sqrt(f * (1 - f) / trials)
            exact = sum(v for k, v in nlaw.items() if hit(k))
            checks.append(TailCheck(d, side, thr, f, se, exact, bound, std, f <= bound + z * se))
    return ChernoffReport(alpha.prefs, float(params.p), trials, mu, tuple(checks))


# -- heatmap --------------------------------------------------------------------

HEATMAP_EXACT_MAX = 7
HEATMAP_MAX = 10


@dataclass(frozen=True)
class HeatmapGrid:
    n: int
    p_grid: tuple
    y_grid: tuple
    cells: tuple[tuple[int, ...], ...]  # cells[a][b]: count at p_grid[a], y_grid[b]
    total: int
    exact: bool

    def column(self, p_index: int) -> tuple[int, ...]:
        return self.cells[p_index]


def _probabilities(n: int, p) -> list:
    """Park probabilities of all n! identity-outcome lists, in lexicographic order."""
    w = [[an._hit_top(s, i, p) for s in range(1, i + 1)] for i in range(1, n + 1)]
    if isinstance(p, Fraction):
        probs = [Fraction(1)]
        for row in w:
            probs = [x * y for x in probs for y in row]
        return probs
    probs = np.ones(1)
    for row in w:
        probs = np.outer(probs, np.asarray(row, dtype=float)).ravel()
    return probs


def heatmap(n: int, p_resolution: int = 20, y_resolution: int = 20) -> HeatmapGrid:
    """Count identity-outcome lists whose park probability is at most y, for each grid (p, y).

    Exact rationals for n <= 7; floats with a 1e-12 slack for 8 <= n <= 10.
    """
    if not 1 <= n <= HEATMAP_MAX:
        raise DomainError(f"heatmap enumerates n! lists; n must be in [1, {HEATMAP_MAX}]")
    if p_resolution < 1 or y_resolution < 1:
        raise DomainError("resolutions must be >= 1")
    exact = n <= HEATMAP_EXACT_MAX
    ps = tuple(Fraction(k, p_resolution) for k in range(p_resolution + 1))
    ys = tuple(Fraction(k, y_resolution) for k in range(y_resolution + 1))
    total = math.factorial(n)
    cells = []
    for p in ps:
        if exact:
            probs = sorted(_probabilities(n, p))
            col = [_count_le(probs, y) for y in ys]
        else:
            probs = np.sort(_probabilities(n, float(p)))
            col = [int(np.searchsorted(probs, float(y) + 1e-12, side="right")) for y in ys]
        cells.append(tuple(col))
    if not exact:
        ps = tuple(float(p) for p in ps)
        ys = tuple(float(y) for y in ys)
    return HeatmapGrid(n, ps, ys, tuple(cells), total, exact)


def _count_le(sorted_vals, y) -> int:
    lo, hi = 0, len(sorted_vals)
    while lo < hi:
        mid = (lo + hi) // 2
        if sorted_vals[mid] <= y:
            lo = mid + 1
        else:
            hi = mid
    return lo


def heatmap_properties(grid: HeatmapGrid) -> dict[str, bool]:
    """The qualitative shape of the grid: monotone columns and the two degenerate edges."""
    t = grid.total
    cols = grid.cells
    monotone = all(all(a <= b for a, b in zip(c, c[1:])) for c in cols)
    bounded = all(0 <= v <= t for c in cols for v in c)
    full_at_one = all(c[-1] == t for c in cols)
    out = {"columns_monotone": monotone, "counts_bounded": bounded, "y1_row_full": full_at_one}
    if grid.p_grid[0] == 0:
        # only (1, 2, ..., n) parks at p = 0
        out["p0_saturated"] = all(v >= t - 1 for v in cols[0]) and all(
            v == t - 1 for v, y in zip(cols[0], grid.y_grid) if y < 1)
    if grid.p_grid[-1] == 1:
        out["p1_empty_below_1"] = all(v == 0 for v, y in zip(cols[-1], grid.y_grid) if y < 1)
    return out


def _fmt(x) -> str:
    return f"{float(x):.10g}"


def write_heatmap_csv(grid: HeatmapGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("p,y,count,total\n")
        for p, col in zip(grid.p_grid, grid.cells):
            for y, v in zip(grid.y_grid, col):
                fh.write(f"{_fmt(p)},{_fmt(y)},{v},{grid.total}\n")


def write_heatmap_pgm(grid: HeatmapGrid, path) -> None:
    """Binary 8-bit PGM: one column per p, one row per y with the largest y on top."""
    w, h = len(grid.p_grid), len(grid.y_grid)
    img = bytearray()
    for b in reversed(range(h)):
        for a in range(w):
            img.append(round(255 * grid.cells[a][b] / grid.total))
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(bytes(img))


# -- cross-validation panel -------------------------------------------------------

PANEL: tuple[tuple[int, ...], ...] = (
    (1, 1),
    (1, 1, 1), (1, 1, 2), (1, 1, 3),
    (1, 1, 1, 4), (1, 1, 3, 3), (1, 2, 2, 2),
    (1, 1, 1, 4, 5), (1, 2, 1, 3, 5), (1, 2, 2, 4, 5),
    (1, 1, 1, 4, 5, 6), (1, 2, 1, 4, 5, 4), (1, 2, 3, 2, 5, 4),
    (1, 1, 1, 4, 5, 6, 7), (1, 2, 1, 4, 5, 6, 6), (1, 2, 3, 3, 3, 6, 6),
    (1, 1, 1, 4, 5, 6, 7, 8), (1, 2, 2, 2, 5, 6, 7, 8), (1, 2, 3, 3, 5, 4, 7, 8), (1, 2, 3, 4, 5, 6, 7, 7),
)


@dataclass(frozen=True)
class CellCheck:
    alpha: tuple[int, ...]
    p: float
    quantity: str  # park_freq, mean_steps or var_steps
    estimate: float | None
    exact: float
    stderr: float | None
    passed: bool | None  # None: not enough data to test


@dataclass
class CrossValidationReport:
    boundary: str
    trials: int
    seed: int
    z: float
    cells: list[CellCheck] = field(default_factory=list)

    @property
    def failures(self) -> list[CellCheck]:
        return [c for c in self.cells if c.passed is False]

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "boundary": self.boundary, "trials": self.trials, "seed": self.seed, "z": self.z,
            "ok": self.ok, "cells": [asdict(c) for c in self.cells],
        }


def _close(est, exact, se, z) -> bool:
    return abs(est - exact) <= z * se + 1e-9 * max(1.0, abs(exact))


def formula_cross_validation(n_max: int, p_set, trials: int, seed: int, boundary=Boundary.OPEN,
                             panel=PANEL, z: float = Z, min_conditional: int = MIN_SAMPLES) -> CrossValidationReport:
    """Simulated park frequency and conditional time of each panel cell against the closed forms.

    The variance of the conditional time is checked only on the unbounded line
    with p > 1/2, the one case with a closed form; its standard error uses the
    sample fourth moment.  Time checks on the unbounded line at p <= 1/2 are
    skipped: the conditional time there has no finite closed form.
    """
    boundary = Boundary(boundary)
    report = CrossValidationReport(boundary.value, trials, seed, z)
    for alpha in panel:
        alpha = as_prefs(alpha)
        if alpha.n > n_max:
            continue
        if not is_identity_outcome(alpha):
            raise DomainError(f"panel entry {alpha.prefs} is not identity-outcome")
        for p in p_set:
            pv = an.parse_p(p)
            params = WalkParameters(pv, boundary)
            stats = batch_simulate(alpha, params, seed, trials)
            if boundary is Boundary.OPEN:
                prob = float(an.open_prob_all(alpha, pv).value)
            else:
                prob = float(an.unbounded_prob_all(alpha, pv).value)
            f = stats.all_park_freq
            se = math.sqrt(prob * (1 - prob) / trials)
            report.cells.append(CellCheck(alpha.prefs, float(pv), "park_freq", f, prob, se, _close(f, prob, se, z)))
            m, mean, var, m4 = stats.steps_moments()
            if boundary is Boundary.OPEN:
                if prob == 0:
                    continue
                t_exact = float(an.open_expected_time_all(alpha, pv))
                v_exact = None
            elif pv > Fraction(1, 2):
                t_exact = float(an.unbounded_expected_time_all(alpha, pv))
                v_exact = float(an.unbounded_variance_all(alpha, pv))
            else:
                continue
            if m < min_conditional:
                report.cells.append(CellCheck(alpha.prefs, float(pv), "mean_steps", None, t_exact, None, None))
                continue
            se_m = math.sqrt(float(var) / m)
            report.cells.append(CellCheck(alpha.prefs, float(pv), "mean_steps", float(mean), t_exact, se_m,
                                          _close(float(mean), t_exact, se_m, z)))
            if v_exact is not None:
                se_v = math.sqrt(max(float(m4) - float(var) ** 2, 0.0) / m)
                report.cells.append(CellCheck(alpha.prefs, float(pv), "var_steps", float(var), v_exact, se_v,
                                              _close(float(var), v_exact, se_v, z)))
    return report

