from fractions import Fraction
import math

import numpy as np
import pytest

from schrodlab.errors import InvalidPerturbationBounds, QuadratureError
from schrodlab.lattice import SpatialPattern, TimeGrid
from schrodlab.propagator import (aligned_phase, evolve_bump, evolve_expsum, evolve_oracle, evolved_cutoff,
                                  lemma4_integral, lattice_time, perturbed_sum_bound, phase_distance,
                                  schrodinger_time)


def test_time_conversions():
    assert lattice_time(schrodinger_time(3.0, 7.0), 7.0) == pytest.approx(3.0)


def test_bump_at_time_zero_is_the_bump(profile):
    c = profile.cutoff
    r = np.array([0.5, 1.0, 2.0, 3.5, 4.5, 5.0, 6.0]) / c.r_supp_out
    vals, q, t = evolve_bump(profile.outer, r, 0.0)
    alpha = profile.outer.alpha
    ref = np.where(r <= alpha, 1.0, np.where(r >= 1, 0.0, np.nan))
    ok = ~np.isnan(ref)
    assert np.allclose(vals.real[ok], ref[ok], atol=1e-9)
    assert np.all(q < 1e-9)


@pytest.mark.parametrize("tau", [1e-3, 1e-2, 0.05])
def test_frequency_and_spatial_methods_agree(profile, tau):
    bump = profile.outer
    w = np.linspace(0.0, 2.5, 11)
    f, qf, tf = evolve_bump(bump, w, tau, method="frequency")
    s, qs, ts = evolve_bump(bump, w, tau, method="spatial")
    assert np.all(np.abs(f - s) <= qf + tf + qs + ts + 1e-12)


def test_unitarity_of_bump_evolution(profile):
    """||exp(i tau Delta) P||_2 is conserved."""
    bump = profile.outer
    w = np.linspace(0, 12, 24001)
    dw = w[1] - w[0]
    norms = []
    for tau in (0.0, 0.02):
        v, _, _ = evolve_bump(bump, w, tau)
        norms.append(math.sqrt(2 * math.pi * np.sum(np.abs(v) ** 2 * w) * dw))
    assert norms[1] == pytest.approx(norms[0], rel=1e-4)


def test_panel_guard(profile):
    with pytest.raises(QuadratureError):
        evolve_bump(profile.inner, np.array([0.5]), 1e-14, method="spatial")


def test_negative_time(profile):
    with pytest.raises(ValueError):
        evolve_bump(profile.outer, np.array([0.5]), -1.0)


def test_lemma4_integral_at_operating_scale(profile, m20):
    params, f = m20
    rng = np.random.default_rng(0)
    X, T = SpatialPattern.from_params(params), TimeGrid.from_params(params)
    for x, t in zip(X.sample(rng, 10), rng.choice(T.points, 10)):
        xi = f.points[rng.integers(len(f))]
        res = lemma4_integral(x, float(t), xi, params.R, profile)
        assert abs(res.value - 1) < 0.5
        assert res.quadrature_error < 1e-8


def test_bump_factor_tolerance(profile, m20):
    params, f = m20
    with pytest.raises(QuadratureError):
        lemma4_integral([1.0, 0.0], 0.5, f.points[0], params.R, profile, tol=0.0)


def test_evolved_cutoff_at_zero(profile):
    r = np.array([0.01, 1.0, 2.0])
    v, q, t = evolved_cutoff(profile, r, 0.0)
    assert np.allclose(v, profile.cutoff(r), atol=1e-8)


def test_aligned_phase_matches_naive_float(toy):
    params, f = toy
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 2)
    t = 0.3
    naive = f.points @ x - t / params.R * np.sum(f.points ** 2, axis=1)
    d = aligned_phase(x, t, f.indices, f.spacing, params.R) - naive
    assert np.allclose(d - np.round(d), 0, atol=1e-10)


def test_phase_distance_on_lattice(m20):
    params, f = m20
    X, T = SpatialPattern.from_params(params), TimeGrid.from_params(params)
    x = np.array([37, -5]) * X.center_spacing + np.array([0.5, -0.5]) * X.box_radius
    d = phase_distance(x, float(T.points[3]), f.indices[-1], f, params.R)
    assert d <= math.sqrt(2) * params.eps1 * params.eps2 + 1e-12


def test_expsum_matches_oracle(profile, toy):
    params, f = toy
    rng = np.random.default_rng(2)
    X, T = SpatialPattern.from_params(params), TimeGrid.from_params(params)
    for x, t in zip(X.sample(rng, 4), rng.choice(T.points, 4)):
        a = evolve_expsum(x, float(t), f, params.R, profile)
        b = evolve_oracle(x, float(t), f, params.R, profile)
        assert abs(a.value - b.value) <= a.total_error + b.total_error


def test_expsum_at_time_zero_is_initial_datum(profile, toy):
    from schrodlab.lattice import initial_data_space
    params, f = toy
    x = np.array([[0.7, -0.2], [1.3, 0.4]])
    direct = initial_data_space(x, f, profile)
    for xi, d in zip(x, direct):
        r = evolve_expsum(xi, 0.0, f, params.R, profile)
        assert abs(r.value - d) <= r.total_error + 1e-9


def test_perturbed_sum_bound():
    a = np.array([1.01, 1 + 0.01j, 1.0])
    b = np.array([1.2, 0.9, 1.0 + 0.1j])
    lhs, rhs = perturbed_sum_bound(a, b, 0.01, 0.2)
    assert lhs <= rhs
    with pytest.raises(InvalidPerturbationBounds):
        perturbed_sum_bound(a, b, 0.001, 0.2)
    with pytest.raises(InvalidPerturbationBounds):
        perturbed_sum_bound(a[:2], b, 0.1, 0.2)


def test_perturbed_sum_unperturbed_is_exact():
    ones = np.ones(50, complex)
    assert perturbed_sum_bound(ones, ones, 0.0, 0.0) == (0.0, 0.0)


def test_bump_factor_at_time_zero(profile, m20):
    params, f = m20
    for x in ([0.5, 0.0], [1.0, 2.0], [0.01, 0.0]):
        res = lemma4_integral(x, 0.0, f.points[3], params.R, profile)
        assert abs(res.value - 1) <= res.total_error + 1e-9


def test_oracle_at_time_zero_is_initial_datum(profile, toy):
    from schrodlab.lattice import initial_data_space
    params, f = toy
    rng = np.random.default_rng(7)
    r = rng.uniform(0.01, 2.8, 10)
    ang = rng.uniform(0, 2 * math.pi, 10)
    xs = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    direct = initial_data_space(xs, f, profile)
    for x, d in zip(xs, direct):
        o = evolve_oracle(x, 0.0, f, params.R, profile)
        assert abs(o.value - d) <= o.total_error + 1e-9


def test_oracle_linearity(profile, toy):
    from schrodlab.lattice import FrequencySet
    params, f = toy
    half = len(f) // 2
    parts = [FrequencySet(f.spacing, f.radius, f.R, f.indices[:half]),
             FrequencySet(f.spacing, f.radius, f.R, f.indices[half:])]
    x, t = np.array([0.8, -0.4]), 0.37
    whole = evolve_oracle(x, t, f, params.R, profile).value
    split = sum(evolve_oracle(x, t, p, params.R, profile).value for p in parts)
    assert abs(whole - split) < 1e-10


def test_perturbed_sum_real_shift():
    d1 = 0.03
    a = np.full(40, 1 + d1, complex)
    b = np.ones(40, complex)
    lhs, rhs = perturbed_sum_bound(a, b, d1, 0.0)
    assert lhs == pytest.approx(d1 * 40)
    assert lhs <= rhs * (1 + 1e-12)  # equality case


def test_phase_distance_exact_at_centres(m20):
    params, f = m20
    X, T = SpatialPattern.from_params(params), TimeGrid.from_params(params)
    c = X.nearest_center([[0.4, -1.1]])[0]
    step = Fraction(X.center_spacing).limit_denominator(10 ** 9)
    x0 = [int(ci) * step for ci in c]
    t0 = Fraction(float(T.points[11])).limit_denominator(10 ** 9)
    spacing, R = Fraction(round(f.spacing)), Fraction(round(params.R))
    for b in f.indices[::17]:
        assert phase_distance(x0, t0, b, spacing, R) == 0.0
    # the float images of the same point are off only by rounding
    for b in f.indices[::17]:
        assert phase_distance(c * X.center_spacing, float(T.points[11]), b, f, params.R) < 1e-9


def test_phase_distance_needs_X(m20):
    """Off the pattern the phases spread past sqrt(n) eps1 eps2; on it they stay within."""
    params, f = m20
    rng = np.random.default_rng(8)
    T = TimeGrid.from_params(params)
    bound = params.eps1 * params.eps2
    x = rng.uniform(0.3, 1.0, 2)
    d = np.abs(aligned_phase(x, float(T.points[5]), f.indices, f.spacing, params.R))
    assert np.percentile(d, 90) > math.sqrt(2) * bound
    xs = SpatialPattern.from_params(params).sample(rng, 5)
    for x in xs:
        d = np.abs(aligned_phase(x, float(T.points[5]), f.indices, f.spacing, params.R))
        assert d.max() <= math.sqrt(2) * bound + 1e-12
