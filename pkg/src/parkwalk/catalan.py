"""Counting and distributions for weakly increasing parking functions (WIPFs).

All counts are Python ints and all probabilities are Fractions.  Floats
appear only in the asymptotic evaluators.  Where a printed closed form
disagrees with exhaustive enumeration, the enumeration-true form is the
main function and the printed one is kept as ``*_printed`` for comparison.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

from .core import DomainError, classical_park, weakly_increasing_pfs


class CatalanTable:
    """Memoised Catalan numbers C_n and Catalan-triangle entries C(n, k)."""

    def __init__(self):
        self._cat = [1]
        self._lock = threading.Lock()

    def catalan(self, n: int) -> int:
        if n < 0:
            raise DomainError("n must be >= 0")
        with self._lock:
            while len(self._cat) <= n:
                m = len(self._cat)
                # C_m = C_{m-1} * 2(2m-1)/(m+1)
                self._cat.append(self._cat[-1] * 2 * (2 * m - 1) // (m + 1))
        return self._cat[n]

    @staticmethod
    def triangle(n: int, k: int) -> int:
        """((n-k+1)/(n+1)) binom(n+k, k), zero outside 0 <= k <= n."""
        if n < 0 or k < 0 or k > n:
            return 0
        num = (n - k + 1) * comb(n + k, k)
        val, rem = divmod(num, n + 1)
        assert rem == 0
        return val


TABLE = CatalanTable()
catalan = TABLE.catalan
catalan_triangle = CatalanTable.triangle


def count_wipf_entry(n: int, i: int, j: int) -> int:
    """Number of WIPFs of length n with alpha_i = j."""
    if not 1 <= j <= i <= n:
        raise DomainError(f"need 1 <= j <= i <= n, got n={n}, i={i}, j={j}")
    val = Fraction((i - j + 1) * (i - j + 2), i * (n - j + 2)) * comb(i + j - 2, j - 1) * comb(2 * n - i - j + 1, n - i)
    if val.denominator != 1:
        raise ArithmeticError(f"non-integral count at n={n}, i={i}, j={j}: {val}")
    return val.numerator


@dataclass(frozen=True)
class LastEntryDistribution:
    n: int
    counts: tuple[int, ...]  # counts[j-1] = f_n(j)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def probabilities(self) -> tuple[Fraction, ...]:
        t = self.total
        return tuple(Fraction(c, t) for c in self.counts)


_LAST: dict[int, tuple[int, ...]] = {1: (1,)}
_LAST_LOCK = threading.Lock()


def last_entry_distribution(n: int) -> LastEntryDistribution:
    """f_n(j) by the recurrence f_n(j) = f_n(j-1) + f_{n-1}(j), f_n(n) = f_n(n-1)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    with _LAST_LOCK:
        m = max(_LAST)
        while m < n:
            prev = _LAST[m]
            m += 1
            row = [1]
            for j in range(2, m):
                row.append(row[-1] + prev[j - 1])
            row.append(row[-1])
            _LAST[m] = tuple(row)
    return LastEntryDistribution(n, _LAST[n])


def expected_last_entry(n: int) -> Fraction:
    """E[alpha_n] for a uniform WIPF; equals (n^2 + 2)/(n + 2)."""
    dist = last_entry_distribution(n)
    return Fraction(sum(j * c for j, c in enumerate(dist.counts, start=1)), dist.total)


def expected_last_entry_printed(n: int) -> Fraction:
    """The published value n(n-1)/(n+2); enumeration shows it is E[alpha_n] - 1."""
    return Fraction(n * (n - 1), n + 2)


def lucky_gaps(n: int, lucky) -> list[int]:
    ls = sorted(lucky)
    gaps = [b - a - 1 for a, b in zip(ls, ls[1:])]
    gaps.append(n - ls[-1])
    return gaps


def lucky_set_probability(n: int, lucky) -> Fraction:
    """Pr[the lucky set of a uniform WIPF equals `lucky`]."""
    lucky = set(lucky)
    if not lucky <= set(range(1, n + 1)):
        raise DomainError(f"lucky set must lie in [1, {n}]")
    if 1 not in lucky:
        return Fraction(0)
    num = 1
    for x in lucky_gaps(n, lucky):
        num *= catalan(x)
    return Fraction(num, catalan(n))


def _returns_count(n: int, k: int, factor) -> Fraction:
    return comb(2 * n - k - 1, n - k) * factor


def lucky_count_distribution(n: int) -> tuple[Fraction, ...]:
    """Pr[exactly k lucky cars], k = 1..n, via binom(2n-k-1, n-k) k/n / C_n."""
    if n < 1:
        raise DomainError("n must be >= 1")
    cn = catalan(n)
    return tuple(_returns_count(n, k, Fraction(k, n)) / cn for k in range(1, n + 1))


def lucky_count_distribution_printed(n: int) -> tuple[Fraction, ...]:
    """Same with the published factor n/k, which does not sum to 1."""
    cn = catalan(n)
    return tuple(_returns_count(n, k, Fraction(n, k)) / cn for k in range(1, n + 1))


def expected_lucky(n: int) -> Fraction:
    return sum((k * pk for k, pk in enumerate(lucky_count_distribution(n), start=1)), Fraction(0))


# -- asymptotics --------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticEstimate:
    formula_id: str
    n: int
    j: int | None
    value: float
    exact: Fraction | None

    @property
    def ratio(self) -> float | None:
        """exact / asymptotic, when both are available and the estimate is non-zero."""
        if self.exact is None or self.value == 0:
            return None
        return float(self.exact) / self.value


def _poisson(lam: float, k: int) -> float:
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1)) if lam > 0 else float(k == 0)


def last_entry_backwards_count_printed(n: int, j: int) -> Fraction:
    """Published count ((n+1)(j-1)/n) binom(2n-j-2, n-j-1), normalised by binom(2n, n)."""
    return Fraction((n + 1) * (j - 1), n) * comb(2 * n - j - 2, n - j - 1) / comb(2 * n, n)


FORMULAS = ("wipf-fraction", "last-entry-fixed", "last-entry-backwards", "last-entry-growing")


def asymptotic_estimate(formula_id: str, n: int, j: int | None = None) -> AsymptoticEstimate:
    """Evaluate one of the stated asymptotic expressions next to the exact ratio.

    wipf-fraction        Pr[uniform PF is weakly increasing] ~ (4/n)^n / (e sqrt(pi n))
    last-entry-fixed     Pr[alpha_n = j] ~ sqrt(pi n)(n-j+1) e^(n+j-2) 4^-n Pois(n+j-2; j-1)
    last-entry-backwards Pr[alpha_n = n-j] ~ (j-1) / (sqrt(2) 4^n)
    last-entry-growing   Pr[alpha_n = j] ~ (n+1) e^(n+j-1) (n-j+1) sqrt(2 pi n) / ((n+j-2) 4^n) Pois(n+j-2; j-1)
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if formula_id == "wipf-fraction":
        value = math.exp(n * math.log(4 / n) - 1 - 0.5 * math.log(math.pi * n))
        exact = Fraction(catalan(n), (n + 1) ** (n - 1))
        return AsymptoticEstimate(formula_id, n, None, value, exact)
    if j is None:
        raise DomainError(f"{formula_id} needs j")
    dist = last_entry_distribution(n).probabilities()
    if formula_id == "last-entry-fixed":
        if not 1 <= j <= n:
            raise DomainError("need 1 <= j <= n")
        lam = n + j - 2
        value = math.sqrt(math.pi * n) * (n - j + 1) * math.exp(lam - n * math.log(4)) * _poisson(lam, j - 1)
        return AsymptoticEstimate(formula_id, n, j, value, dist[j - 1])
    if formula_id == "last-entry-backwards":
        if not 1 <= j <= n - 1:
            raise DomainError("need 1 <= j <= n - 1")
        value = (j - 1) / (math.sqrt(2) * 4.0**n)
        return AsymptoticEstimate(formula_id, n, j, value, dist[n - j - 1])
    if formula_id == "last-entry-growing":
        if not 1 <= j <= n or n + j - 2 <= 0:
            raise DomainError("need 1 <= j <= n and n + j > 2")
        lam = n + j - 2
        value = (
            (n + 1) * math.exp(n + j - 1 - n * math.log(4)) * (n - j + 1) * math.sqrt(2 * math.pi * n) / lam
        ) * _poisson(lam, j - 1)
        return AsymptoticEstimate(formula_id, n, j, value, dist[j - 1])
    raise DomainError(f"unknown formula {formula_id!r}; choose from {FORMULAS}")


# -- identities and enumeration checks -----------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    n_max: int
    failures: tuple[tuple[str, int], ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def identity_checks(n_max: int) -> IdentityReport:
    """Exact check of the two binomial sums used for E[alpha_n], n = 1..n_max."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    failures = []
    for n in range(1, n_max + 1):
        base = comb(2 * n - 1, n - 1)
        lhs1 = sum(j * comb(j + n - 1, j) for j in range(n))
        if Fraction(lhs1) != Fraction((n - 1) * n * base, n + 1):
            failures.append(("first-moment", n))
        lhs2 = sum(j * j * comb(j + n - 1, j) for j in range(n))
        if Fraction(lhs2) != Fraction((n - 1) * n**3 * base, (n + 1) * (n + 2)):
            failures.append(("second-moment", n))
    return IdentityReport(n_max, tuple(failures))


def conditional_monotonicity_check(n: int, m: int, indices) -> bool:
    """Over all WIPFs of length n, {alpha_i <= m for all i in indices} == {alpha_{max index} <= m}."""
    idx = sorted(indices)
    if not idx or not 1 <= idx[0] <= m <= n or idx[-1] > n:
        raise DomainError("need sorted indices in [1, n] with i_1 <= m <= n")
    for alpha in weakly_increasing_pfs(n):
        joint = all(alpha[i - 1] <= m for i in idx)
        last = alpha[idx[-1] - 1] <= m
        if joint != last:
            return False
    return True


def enumerate_wipf_stats(n: int) -> dict:
    """Brute-force oracle: entry counts, lucky-set and lucky-count frequencies over all WIPFs."""
    entry = {}
    lucky_sets: dict[tuple[int, ...], int] = {}
    lucky_counts = [0] * (n + 1)
    last_sum = 0
    total = 0
    for alpha in weakly_increasing_pfs(n):
        total += 1
        for i, a in enumerate(alpha, start=1):
            entry[(i, a)] = entry.get((i, a), 0) + 1
        lk = classical_park(alpha).lucky
        lucky_sets[lk] = lucky_sets.get(lk, 0) + 1
        lucky_counts[len(lk)] += 1
        last_sum += alpha[n - 1]
    return {
        "total": total,
        "entry": entry,
        "lucky_sets": lucky_sets,
        "lucky_counts": lucky_counts[1:],
        "mean_last": Fraction(last_sum, total),
    }


def all_subsets_containing_one(n: int):
    rest = range(2, n + 1)
    for r in range(n):
        for c in combinations(rest, r):
            yield (1, *c)
