import math
from fractions import Fraction as F
from itertools import combinations

import pytest

from parkwalk import analytics as an
from parkwalk.core import DomainError, identity_outcome_pfs
from parkwalk.engine import Boundary, WalkParameters, batch_simulate

PS = [F(1, 5), F(1, 3), F(1, 2), F(2, 3), F(9, 10)]


# -- independent oracles --------------------------------------------------------


def gauss_solve(a, b):
    """Exact Gauss-Jordan elimination over Fractions."""
    n = len(b)
    m = [row[:] + [b[r]] for r, row in enumerate(a)]
    for c in range(n):
        piv = next(r for r in range(c, n) if m[r][c] != 0)
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [x * inv for x in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [m[r][n] for r in range(n)]


def chain_hit_and_time(i, p):
    """Absorbing walk on {0..i}: Pr[hit i first] and E[steps | hit i first] from each interior state."""
    q = 1 - p
    interior = list(range(1, i))
    idx = {s: k for k, s in enumerate(interior)}
    size = len(interior)

    def system(rhs_of):
        a = [[F(0)] * size for _ in range(size)]
        b = [F(0)] * size
        for s in interior:
            r = idx[s]
            a[r][r] = F(1)
            for nb, pr in ((s + 1, p), (s - 1, q)):
                if nb in idx:
                    a[r][idx[nb]] -= pr
            b[r] = rhs_of(s)
        return gauss_solve(a, b)

    w = system(lambda s: p if s + 1 == i else F(0))
    wf = {0: F(0), i: F(1), **{s: w[idx[s]] for s in interior}}
    # u_s = E[steps * 1{hit i}] satisfies u_s = p u_{s+1} + q u_{s-1} + w_s
    u = system(lambda s: wf[s])
    return wf, {s: u[idx[s]] / wf[s] for s in interior if wf[s] != 0}


def brute_bounded(i, j, k):
    count = 0
    length = 2 * j + k
    for lefts in combinations(range(length), j):
        pos = 1
        ok = True
        for t in range(length):
            pos += -1 if t in lefts else 1
            if t < length - 1 and not 1 <= pos <= i - 1:
                ok = False
                break
        count += ok and pos == k + 1
    return count


def brute_ruin(b, k):
    if k == 0:
        return int(b == 0)  # already absorbed
    count = 0
    for lefts in combinations(range(b), (b + k) // 2) if (b + k) % 2 == 0 else []:
        pos = k
        ok = True
        for t in range(b):
            pos += -1 if t in lefts else 1
            if pos <= 0 and t < b - 1:
                ok = False
                break
        count += ok and pos == 0
    return count


# -- open boundary ---------------------------------------------------------------


def test_open_prob_examples():
    assert an.open_prob_single(4, 2, "1/2").value == F(1, 2)
    assert an.open_prob_single(2, 1, F(2, 3)).value == F(2, 3)
    for p in PS:
        assert an.open_prob_single(5, 5, p).value == 1
    assert an.open_prob_all((1, 1), "1/2").value == F(1, 2)
    assert an.open_prob_all((1, 1, 1), "1/2").value == F(1, 6)
    assert an.open_prob_all((1, 2, 3, 4), 0.1).value == 1
    with pytest.raises(DomainError):
        an.open_prob_all((2, 1), "1/2")
    with pytest.raises(DomainError):
        an.open_prob_single(3, 4, "1/2")


def test_mode_follows_input_syntax():
    assert an.open_prob_single(3, 1, "1/3").mode is an.Mode.EXACT_RATIONAL
    assert an.open_prob_single(3, 1, "0.3").mode is an.Mode.FLOAT
    assert an.open_prob_single(3, 1, 0.3).mode is an.Mode.FLOAT


@pytest.mark.parametrize("i", range(2, 8))
@pytest.mark.parametrize("p", PS)
def test_open_formulas_against_absorbing_chain(i, p):
    w, g = chain_hit_and_time(i, p)
    for s in range(1, i):
        assert an.open_prob_single(i, s, p).value == w[s]
        assert an.open_expected_time_single(i, s, p) == g[s]


def test_open_time_examples():
    assert an.open_expected_time_single(2, 1, "1/2") == 1
    assert an.open_expected_time_single(2, 1, F(2, 3)) == 1
    assert an.open_expected_time_single(6, 6, "0.3") == 0
    assert an.open_expected_time_all((1, 1), "1/2") == 1 == an.open_expected_time_all_half((1, 1))
    assert an.open_expected_time_all((1, 1, 1), "1/2") == F(11, 3) == an.open_expected_time_all_half((1, 1, 1))


@pytest.mark.parametrize("n", range(1, 7))
def test_half_closed_form_matches_per_car_sum(n):
    for alpha in identity_outcome_pfs(n):
        assert an.open_expected_time_all(alpha, "1/2") == an.open_expected_time_all_half(alpha)


def test_reflection_symmetry():
    # from s toward i with p equals from i-s toward i with q, read as the complementary exit
    for i in range(2, 9):
        for s in range(0, i + 1):
            for p in PS:
                assert an._hit_top(s, i, p) == 1 - an._hit_top(i - s, i, 1 - p)


def test_monotone_and_continuous_at_half():
    for i in range(2, 8):
        for s in range(1, i):
            vals = [float(an.open_prob_single(i, s, x / 20).value) for x in range(1, 20)]
            assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
            for eps in (1e-6, -1e-6):
                assert abs(float(an.open_prob_single(i, s, 0.5 + eps).value) - s / i) < 1e-5
        col = [an.open_prob_single(i, s, F(2, 5)).value for s in range(1, i + 1)]
        assert col == sorted(col)


# -- unbounded line ------------------------------------------------------------------


def test_ruin_counts_against_enumeration():
    assert an.ruin_path_count(3, 1) == 1
    for b in range(0, 13):
        for k in range(0, 8):
            if b == 0:
                assert an.ruin_path_count(b, k) == int(k == 0)
            else:
                assert an.ruin_path_count(b, k) == brute_ruin(b, k)
    for d in range(1, 6):
        for ell in range(0, 6):
            assert an.catalan_convolution(d, ell) == an.ruin_path_count(d + 2 * ell, d)
    with pytest.raises(DomainError):
        an.ruin_path_count(-1, 0)


@pytest.mark.parametrize("d", range(1, 5))
def test_series_matches_closed_form(d):
    res = an.unbounded_prob_series(d, 0.25)
    assert res.converged and res.tail_bound <= 1e-12
    assert abs(res.value - (1 / 3) ** d) < 1e-10


def test_series_for_p_above_half_is_one():
    res = an.unbounded_prob_series(3, 0.6)
    assert res.converged and abs(res.value - 1) < 1e-10


def test_series_budget_is_reported():
    res = an.unbounded_prob_series(2, 0.45, tol=1e-14, max_terms=5)
    assert not res.converged and res.terms_used == 5


def test_unbounded_examples():
    assert an.unbounded_prob_single(1, F(1, 3)).value == F(1, 2)
    assert an.unbounded_prob_single(3, 0.6).value == 1
    assert an.unbounded_prob_single(2, F(1, 4)).value == F(1, 9)
    assert an.unbounded_prob_all((1, 1), F(1, 3)).value == F(1, 2)
    assert an.unbounded_prob_all((1, 2, 3, 4), 0.1).value == 1
    for alpha in identity_outcome_pfs(4):
        assert an.unbounded_prob_all(alpha, 0.7).value == 1
    assert an.unbounded_expected_time(2, F(3, 4)) == 4
    assert an.unbounded_variance(1, F(3, 4)) == 6
    assert an.unbounded_expected_time(0, 0.8) == 0 and an.unbounded_variance(0, 0.8) == 0
    with pytest.raises(DomainError, match="1/2 < p"):
        an.unbounded_expected_time(1, "1/2")


# -- bounded paths ------------------------------------------------------------------------


def test_bounded_path_examples():
    assert an.bounded_path_count(3, 0, 2) == 1
    assert an.bounded_path_count(3, 1, 2) == 1
    for i in range(2, 8):
        for k in range(i):
            assert an.bounded_path_count(i, 0, k) == 1
    with pytest.raises(DomainError):
        an.bounded_path_count(3, 0, 3)


@pytest.mark.parametrize("i", range(2, 8))
def test_bounded_paths_against_enumeration(i):
    for j in range(0, 6):
        for k in range(i):
            assert an.bounded_path_count(i, j, k) == brute_bounded(i, j, k)


def test_time_via_paths_examples():
    assert abs(an.expected_time_via_paths(2, 1, 0.5).value - 1) < 1e-12
    assert abs(an.expected_time_via_paths(3, 1, 0.5).value - 8 / 3) < 1e-9
    ref = float(an.open_expected_time_single(3, 2, 0.6))
    assert abs(an.expected_time_via_paths(3, 2, 0.6).value - ref) < 1e-10


def test_residual_examples():
    assert an.verify_open_time_solution(5, 0.5).max_residual < 1e-12
    assert an.verify_open_time_solution(10, 0.9).max_residual < 1e-10
    for p in PS:
        assert an.verify_open_time_solution(2, p).max_residual == 0
        assert an.verify_open_time_solution(6, p).max_residual == 0


# -- exact joint law -------------------------------------------------------------------------


def test_joint_law_small_cases():
    law = an.exact_joint_law((1, 1, 1), F(1, 2))
    assert an.law_marginals(law) == [1, F(1, 2), F(5, 12)]
    assert law[(1, 1, 1)] == an.open_prob_all((1, 1, 1), F(1, 2)).value
    ub = an.exact_joint_law((1, 1, 1), F(3, 10), "unbounded")
    assert an.law_marginals(ub) == [1, F(3, 7), F(27, 343)]


@pytest.mark.parametrize("p", [F(3, 10), F(1, 2), F(3, 4)])
def test_joint_law_all_parked_matches_products(p):
    for n in range(1, 6):
        for alpha in identity_outcome_pfs(n):
            law = an.exact_joint_law(alpha, p)
            assert sum(law.values()) == 1
            assert law.get((1,) * n, 0) == an.open_prob_all(alpha, p).value
            ub = an.exact_joint_law(alpha, p, "unbounded")
            assert ub.get((1,) * n, 0) == an.unbounded_prob_all(alpha, p).value


@pytest.mark.parametrize("boundary", list(Boundary))
def test_joint_law_against_simulation(boundary):
    alpha = (2, 1, 2, 1)
    p = 0.4
    law = an.exact_joint_law(alpha, p, boundary)
    trials = 200_000
    stats = batch_simulate(alpha, WalkParameters(p, boundary), 8, trials)
    marg = an.law_marginals(law)
    for c in range(4):
        se = math.sqrt(marg[c] * (1 - marg[c]) / trials) + 1e-12
        assert abs(stats.park_freq[c] - marg[c]) <= 4 * se
