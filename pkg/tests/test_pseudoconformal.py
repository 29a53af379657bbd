import math

import numpy as np
import pytest

from schrodlab.errors import DegenerateProbeSet, SingularTime
from schrodlab.lattice import SpatialPattern, TimeGrid, initial_data_hat, u0_l2_norm
from schrodlab.pseudoconformal import (TransformedField, corrupted_transform, evolve_v0_direct, expsum_field,
                                       fit_spectral_constant, oracle_field, pde_residual, spectral_constant,
                                       transform_amplitude, v0_hat_numeric, v0_l2_norm, v0_value, witness)


def test_spectral_constant_closed_form():
    assert spectral_constant(2) == pytest.approx(4j * math.pi)
    assert abs(spectral_constant(3)) == pytest.approx((4 * math.pi) ** 1.5)


def test_singular_time(profile, toy):
    _, f = toy
    with pytest.raises(SingularTime):
        transform_amplitude(expsum_field(f, profile), [1.0, 0.0], 0.0)
    with pytest.raises(SingularTime):
        pde_residual(expsum_field(f, profile), [1.0, 0.0], 1e-3, 1e-3)


def test_witness_map():
    x, t = witness([0.5, -0.25], 0.5, 10.0)
    assert t == pytest.approx(40 * math.pi)
    assert np.allclose(x, [20 * math.pi, -10 * math.pi])


def test_witness_amplitude_relation(profile, toy):
    """|v(x, t)| t^{n/2} = |u(x', t')| at the witness pair."""
    params, f = toy
    u = expsum_field(f, profile)
    xp, tp = np.array([0.9, 0.3]), 0.4
    x, t = witness(xp, tp, params.R)
    lhs = abs(transform_amplitude(u, x, t)) * t
    rhs = abs(u(xp, tp / (2 * math.pi * params.R)))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_transformed_field_witness_floor(profile, toy):
    params, f = toy
    tf = TransformedField.build(f, profile)
    x, t, floor = tf.witness([0.9, 0.3], 0.4)
    assert floor == pytest.approx(0.4 * len(f) / t)


def test_fit_recovers_constant(profile, toy):
    params, f = toy
    fit = fit_spectral_constant(f, params.R, profile, probes=10, rng=np.random.default_rng(0))
    assert fit.fit_residual < 1e-6
    assert fit.c_value == pytest.approx(spectral_constant(2), rel=1e-6)


def test_fit_degenerate_probe_set(profile, toy):
    params, f = toy
    with pytest.raises(DegenerateProbeSet):
        fit_spectral_constant(f, params.R, profile, probes=3, threshold=1e9)


def test_v0_is_limit_of_transform(profile, toy):
    """v(x, t) -> v0(x) as t -> 0: compare at a small t."""
    params, f = toy
    u = expsum_field(f, profile)
    x = np.array([30.0, -12.0])
    v_small = transform_amplitude(u, x, 1e-3)
    assert abs(v_small - v0_value(x, f, profile)[0]) < 2e-2 * abs(v0_value(x, f, profile)[0]) + 1e-6


def test_v0_hat_against_u0(profile, toy):
    from schrodlab.lattice import initial_data_space
    params, f = toy
    y = np.array([0.05, 0.1])
    lhs = v0_hat_numeric(y, f, profile)
    rhs = spectral_constant(2) * initial_data_space(4 * math.pi * y, f, profile)[0]
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_v0_norm_equals_u0_norm(profile, m20):
    _, f = m20
    assert v0_l2_norm(f, profile) == pytest.approx(u0_l2_norm(f, profile)[0], rel=1e-6)


def test_direct_evolution_matches_transform(profile, toy):
    params, f = toy
    rng = np.random.default_rng(3)
    u = expsum_field(f, profile)
    xs = SpatialPattern.from_params(params).sample(rng, 3)
    ts = rng.choice(TimeGrid.from_params(params).points, 3)
    for xp, tp in zip(xs, ts):
        x, t = witness(xp, float(tp), params.R)
        a = transform_amplitude(u, x, t)
        b = evolve_v0_direct(x, t, f, profile)
        assert abs(a - b) < 1e-6 * abs(a)


def test_oracle_field_agrees_with_expsum(profile, toy):
    params, f = toy
    x, s = np.array([0.6, 0.8]), 2e-4
    a, b = expsum_field(f, profile)(x, s), oracle_field(f, profile)(x, s)
    assert abs(a - b) < 1e-7


def test_pde_residual_second_order_and_control(profile, toy):
    params, f = toy
    u = expsum_field(f, profile)
    v = lambda x, t: transform_amplitude(u, x, t)
    bad = corrupted_transform(u)
    x, t = np.array([120.0, -80.0]), 1500.0
    r = [pde_residual(v, x, t, h) for h in (0.2, 0.1)]
    assert 1.6 <= math.log2(r[0] / r[1]) <= 2.4
    rb = [pde_residual(bad, x, t, h) for h in (0.2, 0.1)]
    assert rb[1] > 0.5 * rb[0] and rb[1] > 100 * r[1]


def test_initial_hat_is_real_and_even(profile, toy):
    _, f = toy
    xi = np.array([[0.0, 0.0], [10.0, 3.0], [-10.0, -3.0]]) + f.points[0]
    h = initial_data_hat(xi, f, profile)
    assert np.isrealobj(h)
    mirror = initial_data_hat(-xi, f, profile)
    assert np.allclose(h, mirror)


def test_witness_amplitudes_at_m20(profile, m20):
    params, f = m20
    n, R = 2, params.R
    u = expsum_field(f, profile)
    rng = np.random.default_rng(9)
    xs = SpatialPattern.from_params(params).sample(rng, 5)
    ts = rng.choice(TimeGrid.from_params(params).points, 5)
    for xp, tp in zip(xs, ts):
        x, t = witness(xp, float(tp), R)
        assert 2 * math.pi * R < t < 2 * math.pi * 4 ** (n + 1) * R
        assert abs(transform_amplitude(u, x, t)) >= 0.4 * len(f) * (2 * math.pi * R / tp) ** (-n / 2)


def test_modulus_identity(profile, toy):
    params, f = toy
    u = expsum_field(f, profile)
    x, t = np.array([40.0, 25.0]), 900.0
    assert abs(transform_amplitude(u, x, t)) == pytest.approx(abs(u(x / t, 1 / t)) / t, rel=1e-14)


def test_v0_hat_support(profile, toy):
    """v0^(y) = C u0(4 pi y) vanishes unless 4 pi |y| lies in the support of u0."""
    params, f = toy
    c = profile.cutoff
    inside = np.array([1.0, 0.0]) * (1.0 / (4 * math.pi))
    ref = abs(v0_hat_numeric(inside, f, profile))
    assert ref > 1
    for r in (0.5 * c.r_supp_in / (4 * math.pi), 1.05 * c.r_supp_out / (4 * math.pi), 1.0, 5.0):
        assert abs(v0_hat_numeric(np.array([0.0, r]), f, profile)) < 1e-8 * ref
