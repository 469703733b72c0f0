"""Closed forms for parking probabilities and times, plus the path-counting route.

Probabilities are exact rationals when p is given as a Fraction (or int) and
floats when p is a float.  Infinite series are always evaluated in floating
point and reported with their truncation bound.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .core import DomainError, as_prefs, displacement, is_identity_outcome

HALF_WINDOW = 1e-9
DEFAULT_TOL = 1e-12
DEFAULT_BUDGET = 10**6


class Mode(str, enum.Enum):
    EXACT_RATIONAL = "EXACT_RATIONAL"
    FLOAT = "FLOAT"


@dataclass(frozen=True)
class ProbabilityValue:
    value: Fraction | float
    mode: Mode

    def __float__(self):
        return float(self.value)

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    terms_used: int
    tail_bound: float
    converged: bool
    method: str = "series"


def parse_p(p):
    """Fractions, ints and 'a/b' strings are exact; floats and decimal strings are not."""
    if isinstance(p, str):
        p = p.strip()
        p = Fraction(p) if "/" in p else float(p)
    if isinstance(p, bool):
        raise DomainError("p must be numeric")
    if isinstance(p, int):
        p = Fraction(p)
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return p


def mode_of(p) -> Mode:
    return Mode.EXACT_RATIONAL if isinstance(p, Fraction) else Mode.FLOAT


def is_half(p) -> bool:
    if isinstance(p, Fraction):
        return p == Fraction(1, 2)
    return abs(p - 0.5) < HALF_WINDOW


def _unit(p):
    return Fraction(1) if isinstance(p, Fraction) else 1.0


# -- open boundary -----------------------------------------------------------


def _check_start(i, s):
    if not (isinstance(i, int) and isinstance(s, int)) or not 1 <= s <= i:
        raise DomainError(f"need 1 <= s <= i, got i={i}, s={s}")


def _hit_top(x, m, p):
    """Probability a walk from x in (0, m) reaches m before 0."""
    if x == m:
        return _unit(p)
    if x == 0:
        return 0 * _unit(p)
    if is_half(p):
        return Fraction(x, m) if isinstance(p, Fraction) else x / m
    q = 1 - p
    return p ** (m - x) * (p**x - q**x) / (p**m - q**m)


def open_prob_single(i: int, s: int, p) -> ProbabilityValue:
    """Chance that car i, starting at spot s with 1..i-1 full, reaches spot i before spot 0."""
    p = parse_p(p)
    _check_start(i, s)
    return ProbabilityValue(_hit_top(s, i, p), mode_of(p))


def open_prob_all(alpha, p) -> ProbabilityValue:
    alpha = as_prefs(alpha)
    p = parse_p(p)
    if not is_identity_outcome(alpha):
        raise DomainError(f"{alpha.prefs} does not have identity outcome (need alpha_i <= i)")
    out = _unit(p)
    for i, a in enumerate(alpha, start=1):
        out *= _hit_top(a, i, p)
    return ProbabilityValue(out, mode_of(p))


def _open_time(i, s, p):
    if s == i:
        return 0 * _unit(p)
    if is_half(p):
        v = i * i - s * s
        return Fraction(v, 3) if isinstance(p, Fraction) else v / 3
    if p == 0:
        raise DomainError("parking from below spot i has probability 0 at p = 0")
    q = 1 - p
    r = q / p

    def h(k):
        return k * (1 + r**k) / (1 - r**k)

    return (h(i) - h(s)) / (p - q)


def open_expected_time_single(i: int, s: int, p):
    """Expected steps for car i to park from spot s, given that it parks."""
    p = parse_p(p)
    _check_start(i, s)
    return _open_time(i, s, p)


def open_expected_time_all(alpha, p):
    alpha = as_prefs(alpha)
    p = parse_p(p)
    if not is_identity_outcome(alpha):
        raise DomainError(f"{alpha.prefs} does not have identity outcome (need alpha_i <= i)")
    return sum((_open_time(i, a, p) for i, a in enumerate(alpha, start=1)), 0 * _unit(p))


def open_expected_time_all_half(alpha) -> Fraction:
    """(2n^3 + 3n^2 + n)/18 - (1/3) sum alpha_i^2, the p = 1/2 total."""
    alpha = as_prefs(alpha)
    n = alpha.n
    return Fraction(2 * n**3 + 3 * n**2 + n, 18) - Fraction(sum(a * a for a in alpha), 3)


# -- unbounded line ----------------------------------------------------------


class RuinPathTable:
    """c(b, k): paths of length b from k that stay positive until they end at 0."""

    def __init__(self):
        self._rows = [[1]]
        self._lock = threading.Lock()

    def _extend(self, b):
        with self._lock:
            while len(self._rows) <= b:
                prev = self._rows[-1]
                m = len(self._rows)
                row = [0] * (m + 1)
                for k in range(1, m + 1):
                    left = prev[k - 1] if k - 1 < len(prev) else 0
                    right = prev[k + 1] if k + 1 < len(prev) else 0
                    row[k] = left + right
                self._rows.append(row)

    def __call__(self, b: int, k: int) -> int:
        if b < 0 or k < 0:
            raise DomainError("ruin path counts need b, k >= 0")
        if k > b:
            return 0
        self._extend(b)
        return self._rows[b][k]


_RUIN = RuinPathTable()


def ruin_path_count(b: int, k: int) -> int:
    return _RUIN(b, k)


def catalan_convolution(d: int, ell: int) -> int:
    """d/(ell+d) * C(2 ell + d - 1, ell): first-passage paths of drop d with ell up-steps."""
    if d < 1 or ell < 0:
        raise DomainError("need d >= 1 and ell >= 0")
    num = d * comb(2 * ell + d - 1, ell)
    val, rem = divmod(num, ell + d)
    assert rem == 0
    return val


def unbounded_prob_series(d: int, p, tol: float = DEFAULT_TOL, max_terms: int = DEFAULT_BUDGET) -> SeriesResult:
    """Sum over ell of catalan_convolution(d, ell) p^(d+ell) q^ell, truncated with a certified tail.

    The ratio of consecutive terms increases towards 4pq once it is below it,
    so from then on the rest of the sum is at most T r/(1-r), T the current
    term and r = 4pq(1+1e-6).
    """
    if d < 0:
        raise DomainError("displacement must be >= 0")
    if tol <= 0:
        raise DomainError("tol must be > 0")
    p = float(parse_p(p))
    q = 1.0 - p
    if d == 0:
        return SeriesResult(1.0, 0, 0.0, True, "closed-form")
    if abs(p - 0.5) < HALF_WINDOW:
        # sub-geometric convergence; the sum is 1
        return SeriesResult(1.0, 0, 0.0, True, "closed-form")
    r = 4.0 * p * q * (1 + 1e-6)
    term = p**d
    total = 0.0
    ell = 0
    while True:
        total += term
        if term == 0.0:
            return SeriesResult(total, ell + 1, 0.0, True)
        # term ratio, ell -> ell + 1; once it is below 4pq it stays below
        ratio = (2 * ell + d + 1) * (2 * ell + d) / ((ell + 1) * (ell + d + 1)) * p * q
        if ratio <= r:
            tail = term * r / (1 - r)
            if tail <= tol:
                return SeriesResult(total, ell + 1, tail, True)
        else:
            tail = float("inf")
        if ell + 1 >= max_terms:
            return SeriesResult(total, ell + 1, tail, False)
        term *= ratio
        ell += 1


def unbounded_prob_single(d: int, p, tol: float = DEFAULT_TOL) -> ProbabilityValue:
    """Chance a car displaced d spots reaches its spot on the line: 1 for p >= 1/2, else (p/q)^d."""
    if d < 0:
        raise DomainError("displacement must be >= 0")
    p = parse_p(p)
    if d == 0 or p >= Fraction(1, 2):
        return ProbabilityValue(_unit(p), mode_of(p))
    closed = (p / (1 - p)) ** d
    series = unbounded_prob_series(d, p, tol)
    if not series.converged:
        raise ArithmeticError(f"series for d={d}, p={p} did not converge")
    gap = abs(series.value - float(closed))
    if gap > tol + 1e-13:
        raise ArithmeticError(f"series {series.value} and closed form {float(closed)} differ by {gap}")
    return ProbabilityValue(closed, mode_of(p))


def unbounded_prob_all(alpha, p) -> ProbabilityValue:
    p = parse_p(p)
    total = sum(displacement(alpha))
    if p >= Fraction(1, 2) or total == 0:
        return ProbabilityValue(_unit(p), mode_of(p))
    return ProbabilityValue((p / (1 - p)) ** total, mode_of(p))


def _check_drift(p):
    if not p > Fraction(1, 2):
        raise DomainError(f"mean and variance of the parking time need 1/2 < p <= 1 (got p={p}); "
                          "below that the conditional time is infinite or undefined")


def unbounded_expected_time(d: int, p):
    p = parse_p(p)
    _check_drift(p)
    if d < 0:
        raise DomainError("displacement must be >= 0")
    return d / (p - (1 - p))


def unbounded_variance(d: int, p):
    p = parse_p(p)
    _check_drift(p)
    if d < 0:
        raise DomainError("displacement must be >= 0")
    q = 1 - p
    return 4 * d * p * q / (p - q) ** 3


def unbounded_expected_time_all(alpha, p):
    return unbounded_expected_time(sum(displacement(alpha)), p)


def unbounded_variance_all(alpha, p):
    return unbounded_variance(sum(displacement(alpha)), p)


# -- bounded paths on the open segment ---------------------------------------


class BoundedPathTable:
    """a(j, k) for a segment whose target is spot i.

    a(j, k) counts walks from spot 1 with j left steps and k net right steps
    (so they end at spot k+1) that stay inside [1, i-1] except possibly at the
    final step.  0 <= k <= i-1; k = i-1 is a first arrival at spot i.
    """

    def __init__(self, i: int):
        if i < 2:
            raise DomainError("segment height i must be >= 2")
        self.i = i
        self._rows = [[1] * i]
        self._lock = threading.Lock()

    def row(self, j: int) -> list[int]:
        with self._lock:
            while len(self._rows) <= j:
                prev = self._rows[-1]
                row = [0] * self.i
                for k in range(self.i):
                    v = row[k - 1] if k >= 1 else 0
                    if k <= self.i - 3:
                        v += prev[k + 1]
                    row[k] = v
                self._rows.append(row)
        return self._rows[j]

    def __call__(self, j: int, k: int) -> int:
        if j < 0 or not 0 <= k <= self.i - 1:
            raise DomainError(f"need j >= 0 and 0 <= k <= {self.i - 1}")
        return self.row(j)[k]


_BOUNDED: dict[int, BoundedPathTable] = {}
_BOUNDED_LOCK = threading.Lock()


def bounded_table(i: int) -> BoundedPathTable:
    with _BOUNDED_LOCK:
        if i not in _BOUNDED:
            _BOUNDED[i] = BoundedPathTable(i)
        return _BOUNDED[i]


def bounded_path_count(i: int, j: int, k: int) -> int:
    return bounded_table(i)(j, k)


def expected_time_via_paths(i: int, s: int, p, tol: float = DEFAULT_TOL, max_terms: int = 100_000) -> SeriesResult:
    """Conditional parking time from s in {1, i-1}, summed over first-arrival paths.

    From s = 1 the paths with j left steps number a(j, i-1) and have 2j+i-1
    steps.  From s = i-1 they are, after reflecting the segment, a(j, 0)
    excursions followed by one step, 2j+1 steps in all.  Each path has weight
    p^(rights) q^(lefts); dividing by the parking probability conditions on parking.

    The tail estimate assumes the term ratio has settled: it uses the largest
    ratio over the last few terms as a geometric rate.
    """
    if i < 2 or s not in (1, i - 1):
        raise DomainError("expected_time_via_paths covers s = 1 and s = i - 1 with i >= 2")
    p = float(parse_p(p))
    q = 1.0 - p
    w = float(_hit_top(s, i, p))
    if w == 0.0:
        raise DomainError("car cannot park at p = 0")
    table = bounded_table(i)
    if s == 1:
        k_idx, net = i - 1, i - 1
    else:
        k_idx, net = 0, 1
    log_p = math.log(p)
    log_q = math.log(q) if q > 0 else None
    total = 0.0
    ratios: list[float] = []
    prev = None
    window = 8
    for j in range(max_terms):
        row = table.row(j)
        if not any(row):
            return SeriesResult(total / w, j, 0.0, True)
        c = row[k_idx]
        if j > 0 and log_q is None:
            return SeriesResult(total / w, j, 0.0, True)
        if c == 0:
            term = 0.0
        else:
            lt = math.log(c) + (j + net) * log_p + (j * log_q if j else 0.0) + math.log(2 * j + net)
            term = math.exp(lt)
        total += term
        if prev:
            ratios.append(term / prev)
        prev = term if term > 0 else prev
        if len(ratios) >= window:
            r = max(ratios[-window:])
            if r < 1:
                tail = term * r / (1 - r)
                if tail / w <= tol:
                    return SeriesResult(total / w, j + 1, tail / w, True)
    return SeriesResult(total / w, max_terms, float("inf"), False)


@dataclass(frozen=True)
class ResidualReport:
    i: int
    residuals: tuple
    max_residual: Fraction | float
    mode: Mode


def verify_open_time_solution(i: int, p) -> ResidualReport:
    """Plug the closed-form times into g_s w_s = p w_{s+1} g_{s+1} + q w_{s-1} g_{s-1} + w_s."""
    if i < 2:
        raise DomainError("need i >= 2")
    p = parse_p(p)
    if p == 0:
        raise DomainError("the linear system is degenerate at p = 0")
    q = 1 - p
    w = [_hit_top(s, i, p) for s in range(i + 1)]
    g = [0 * _unit(p)] + [_open_time(i, s, p) for s in range(1, i)] + [0 * _unit(p)]
    res = []
    for s in range(1, i):
        res.append(g[s] * w[s] - (p * w[s + 1] * g[s + 1] + q * w[s - 1] * g[s - 1] + w[s]))
    worst = max(abs(r) for r in res)
    return ResidualReport(i, tuple(res), worst, mode_of(p))


# -- exact joint law of the parking indicators --------------------------------


def _hit_right(x, m, p):
    """Walk at x in an interval (0, m); chance of reaching m first."""
    return _hit_top(x, m, p)


def exact_joint_law(alpha, p, boundary="open") -> dict[tuple[int, ...], Fraction | float]:
    """Distribution of the parked-flag vector (X_1, ..., X_n) for any alpha.

    A car that finds its spot taken is trapped in the maximal occupied run
    around it and leaves that run at one of its two ends; the hitting
    probabilities are gambler's-ruin values.  On the unbounded line an end may
    be missing (no free spot on that side); a car that drifts away halts the run.
    """
    alpha = as_prefs(alpha)
    p = parse_p(p)
    unbounded = str(getattr(boundary, "value", boundary)).lower() == "unbounded"
    n = alpha.n
    one = _unit(p)
    q = 1 - p
    states = {(0, 0, False): one}  # (occupancy mask, flags mask, halted)
    for car, a in enumerate(alpha, start=1):
        nxt: dict = {}

        def put(key, pr):
            if pr:
                nxt[key] = nxt.get(key, 0 * one) + pr

        for (occ, flags, halted), pr in states.items():
            if halted:
                put((occ, flags, True), pr)
                continue
            bit = 1 << (a - 1)
            if not occ & bit:
                put((occ | bit, flags | (1 << (car - 1)), False), pr)
                continue
            lo = a
            while lo >= 1 and occ & (1 << (lo - 1)):
                lo -= 1
            hi = a
            while hi <= n and occ & (1 << (hi - 1)):
                hi += 1
            left_free = lo >= 1
            right_free = hi <= n
            park = flags | (1 << (car - 1))
            if not unbounded or (left_free and right_free):
                up = _hit_right(a - lo, hi - lo, p)
                down = one - up
                if right_free:
                    put((occ | (1 << (hi - 1)), park, False), pr * up)
                else:
                    put((occ, flags, False), pr * up)
                if left_free:
                    put((occ | (1 << (lo - 1)), park, False), pr * down)
                else:
                    put((occ, flags, False), pr * down)
            elif right_free:
                reach = one if p >= Fraction(1, 2) else (p / q) ** (hi - a)
                put((occ | (1 << (hi - 1)), park, False), pr * reach)
                put((occ, flags, True), pr * (one - reach))
            else:
                reach = one if p <= Fraction(1, 2) else (q / p) ** (a - lo)
                put((occ | (1 << (lo - 1)), park, False), pr * reach)
                put((occ, flags, True), pr * (one - reach))
        states = nxt
    law: dict = {}
    for (occ, flags, _), pr in states.items():
        key = tuple((flags >> c) & 1 for c in range(n))
        law[key] = law.get(key, 0 * one) + pr
    return law


def law_marginals(law) -> list:
    n = len(next(iter(law)))
    return [sum(pr for k, pr in law.items() if k[c]) for c in range(n)]


def law_subset_prob(law, subset) -> Fraction | float:
    return sum(pr for k, pr in law.items() if all(k[c - 1] for c in subset))
