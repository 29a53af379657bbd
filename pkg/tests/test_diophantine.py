import math

import numpy as np
import pytest

from schrodlab import diophantine as dio
from schrodlab.lattice import SpatialPattern, TimeGrid, build_params


def test_dist_to_int():
    assert dio.dist_to_int([0.2, 0.8, 1.5, -0.3]) == pytest.approx([0.2, 0.2, 0.5, 0.3])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_dirichlet_guarantee(n):
    rng = np.random.default_rng(n)
    for _ in range(200):
        N = float(rng.uniform(5, 3000))
        y = rng.uniform(0, 1, n)
        res = dio.dirichlet_search(y, N)
        assert 1 <= res.p <= N + 2
        assert res.error <= N ** (-1 / n)
        # brute-force oracle: no smaller p works
        ps = np.arange(1, res.p)
        if ps.size:
            assert np.all(dio.dist_to_int(np.outer(ps, y)).max(axis=1) > N ** (-1 / n))


def test_dirichlet_rational_point():
    res = dio.dirichlet_search([1 / 3, 2 / 3], 100)
    assert res.p == 3 and res.error == pytest.approx(0, abs=1e-12)


def test_restricted_search_may_fail():
    res = dio.dirichlet_search([0.0, 0.0], 100, p_min=1)
    assert res.p == 1
    # y = 1/2 needs an even p; restricting to p >= 101 still finds 102 <= N + 2
    res = dio.dirichlet_search([0.5, 0.5], 100, p_min=101)
    assert res.p == 102
    res = dio.dirichlet_search([0.5, 0.5], 100, p_min=103)
    assert not res.found and res.p is None


def test_first_witness_matches_scalar_search():
    rng = np.random.default_rng(4)
    ys = rng.uniform(0, 1, (50, 2))
    p = dio.first_witness(ys, 200.0)
    assert [dio.dirichlet_search(y, 200.0).p for y in ys] == p.tolist()


def test_measure_Ap_against_monte_carlo():
    rng = np.random.default_rng(8)
    p, N, n = 7, 400.0, 2
    ys = rng.uniform(0, 1, (200_000, n))
    hit = dio.dist_to_int(p * ys).max(axis=1) <= N ** (-1 / n)
    est = dio.MeasureEstimate.from_counts(int(hit.sum()), hit.size)
    exact = dio.measure_Ap(p, N, n).value
    assert exact == pytest.approx((2 / 20) ** 2)
    assert abs(est.value - exact) <= 3 * est.half_width


def test_union_bounds():
    assert dio.bad_union_bound(1e4, 2).value <= 0.25
    assert dio.crude_union_bound(1e4, 2) <= 0.25
    assert dio.bad_union_bound(1e4, 2).value <= dio.crude_union_bound(1e4, 2)


def test_measure_s_grid_and_mc_agree():
    N = 500.0
    grid = dio.measure_S_grid(N, 2, 2e-3)
    mc = dio.measure_S(N, 2, 20_000, np.random.default_rng(2))
    assert abs(grid.value - mc.value) <= 3 * mc.half_width + 2e-3
    assert grid.value >= 0.75


def test_fractional_uniformity():
    p = dio.fractional_uniformity(20, 2, 50_000, np.random.default_rng(9))
    assert min(p) > 1e-3


# ---------------------------------------------------------------------------
# X/T


def test_quotient_contains_constructed_points(constants):
    params = build_params(2, 0.2, 12, 0.15, constants)
    X = SpatialPattern.from_params(params)
    T = TimeGrid.from_params(params)
    rng = np.random.default_rng(13)
    xs = X.sample(rng, 3000)
    ts = rng.choice(T.points, 3000)
    y = xs / ts[:, None]
    inside = np.all((y >= 0) & (y <= 1), axis=1)
    assert inside.sum() > 30
    sets = dio.quotient_sets(y[inside], params)
    assert sets.quotient.all()


def test_quotient_excludes_far_points(constants):
    params = build_params(2, 0.2, 12, 0.15, constants)
    # |x| t <= |x| < 4^{-n-2} for every t in T, so t x never reaches the annulus
    assert not dio.quotient_membership([1e-3, 1e-3], params)


def test_threshold_identity_and_inclusions(constants):
    """At sigma = 0.1, m = 5 the pigeonhole threshold is met: V0 lies in V and V in U ∪ W."""
    params = build_params(2, 0.1, 5, 0.05, constants)
    lhs, rhs, holds = dio.threshold_identity(params)
    assert holds and lhs >= rhs
    xs = np.random.default_rng(14).uniform(0, 1, (400, 2))
    s = dio.quotient_sets(xs, params)
    assert np.all(~s.V0 | s.V)
    assert np.all(~s.V | s.U | s.W)
    assert s.V0.mean() >= 0.75


def test_threshold_identity_fails_at_desk_scale(constants):
    params = build_params(2, 0.2, 20, 0.15, constants)
    assert not dio.threshold_identity(params)[2]


def test_quotient_report_seeded(constants):
    params = build_params(2, 0.2, 12, 0.15, constants)
    a = dio.quotient_report(params, 300, np.random.default_rng(1))
    b = dio.quotient_report(params, 300, np.random.default_rng(1))
    assert a == b
    assert math.isclose(a["quotient"].value, dio.quotient_measure(params, 300, np.random.default_rng(1)).value)


def test_dirichlet_fixed_points():
    r = dio.dirichlet_search([0.0, 0.0, 0.0], 37.0)
    assert r.p == 1 and r.error == 0
    r = dio.dirichlet_search([0.5, 0.5], 9.0)
    assert r.p == 2 and r.error == 0


def test_measure_Ap_examples():
    for p in (1, 5, 50):
        assert dio.measure_Ap(p, 100.0, 2).value == pytest.approx(0.04)
    assert dio.measure_Ap(3, 3.0, 2).value == 1.0  # N^{-1/2} >= 1/2
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 4))
        N = float(rng.uniform(10, 1e4))
        p = int(rng.integers(1, int(N) + 3))
        exact = dio.measure_Ap(p, N, n).value
        crude = dio.crude_Ap_bound(p, N, n)
        assert exact <= crude < 4 ** n / N * (1 + 1 / p) ** n + 1e-15


def test_bad_union_examples():
    assert dio.bad_union_bound(1e4, 2).value == pytest.approx(156 * 4e-4)
    assert dio.crude_union_bound(1e4, 2) <= 0.25
    assert dio.bad_union_bound(1e5, 3).value <= 0.25


def test_measure_s_complement_consistency():
    N, n = 1e4, 2
    est = dio.measure_S(N, n, 20_000, np.random.default_rng(6))
    assert 1 - est.value <= dio.bad_union_bound(N, n).value + 3 * est.half_width


def test_measure_s_small_N_grid_oracle():
    N = 16.0
    grid = dio.measure_S_grid(N, 2, 1e-3)
    mc = dio.measure_S(N, 2, 20_000, np.random.default_rng(7))
    assert abs(grid.value - mc.value) <= 3 * mc.half_width + 1e-3


def test_smallest_good_N_reports_tested_values():
    best, results = dio.smallest_good_N(2, [16, 256, 4096], 5000, np.random.default_rng(8))
    assert set(results) == {16.0, 256.0, 4096.0}
    assert best == 16.0


def test_non_integer_m_rejected(constants):
    with pytest.raises(ValueError):
        build_params(2, 0.2, 12.5, 0.15, constants)
