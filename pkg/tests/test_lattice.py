import dataclasses
import itertools
import math

import numpy as np
import pytest

from schrodlab.errors import (DegenerateFrequencySet, ExponentOutOfRange, InvalidDimension, ScaleTooSmall,
                              TestExponentTooLarge)
from schrodlab.lattice import (SpatialPattern, TimeGrid, build_frequency_set, build_params, initial_data_space,
                               lattice_ball, u0_l2_norm, u0_l2_spatial_mc)
from schrodlab.propagator import aligned_phase


def test_param_errors(constants):
    with pytest.raises(ExponentOutOfRange):
        build_params(2, 0.25, 12, 0.1, constants)
    with pytest.raises(TestExponentTooLarge):
        build_params(2, 0.2, 12, 0.25, constants)
    with pytest.raises(ScaleTooSmall):
        build_params(2, 0.2, 11, 0.15, constants)
    with pytest.raises(InvalidDimension):
        build_params(3, 0.15, 20, 0.1, constants)
    with pytest.raises(InvalidDimension):
        build_params(1, 0.2, 12, 0.05, constants)


def test_degenerate_frequency_set(constants):
    tiny = dataclasses.replace(constants, eps1_operating=1e-3)
    with pytest.raises(DegenerateFrequencySet):
        build_frequency_set(build_params(2, 0.2, 12, 0.15, tiny))


def test_R_from_m(constants):
    p = build_params(2, 0.2, 16, 0.15, constants)
    assert p.R == 16.0 ** 5
    assert p.omega_spacing * p.m == pytest.approx(p.R)
    assert p.time_spacing * p.time_count_scale == pytest.approx(1.0)


def test_lattice_ball_brute_force():
    for radius in (0.5, 1.0, 2.3, 5.0, 8.6):
        k = int(radius) + 1
        ref = {b for b in itertools.product(range(-k, k + 1), repeat=2) if b[0] ** 2 + b[1] ** 2 < radius ** 2}
        got = {tuple(int(v) for v in b) for b in lattice_ball(2, radius)}
        assert got == ref


@pytest.mark.parametrize("m", [12, 16, 20, 24])
def test_frequency_set(constants, m):
    p = build_params(2, 0.2, m, 0.15, constants)
    f = build_frequency_set(p)
    assert len(f) >= 10
    assert np.all(np.linalg.norm(f.points, axis=1) < p.eps1 * p.R)
    # symmetric: Omega = -Omega
    assert {tuple(b) for b in f.indices} == {tuple(-b) for b in f.indices}
    assert abs(len(f) - f.ball_estimate()) < 4 * math.pi * f.radius / f.spacing


def test_frequency_csv(tmp_path, m20):
    _, f = m20
    path = tmp_path / "omega.csv"
    f.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "b0,b1,xi0,xi1" and len(lines) == len(f) + 1


def test_integer_identities(m20):
    """x0.xi' and (t/R)|xi'|^2 are integers for centres x0 and t in T."""
    params, f = m20
    X, T = SpatialPattern.from_params(params), TimeGrid.from_params(params)
    rng = np.random.default_rng(1)
    for _ in range(20):
        c = rng.integers(-50, 50, 2)
        x0 = c * X.center_spacing
        t = float(rng.choice(T.points))
        assert np.max(np.abs(aligned_phase(x0, t, f.indices, f.spacing, params.R))) < 1e-9
        # integer arithmetic: c.b and j |b|^2
        assert np.all((f.indices @ c) == np.round(f.indices @ c))


def test_X_membership(m20):
    params, _ = m20
    X = SpatialPattern.from_params(params)
    x0 = X.nearest_center([[0.5, 0.5]])[0] * X.center_spacing
    assert X.contains(x0 + 0.9 * X.box_radius)[0]
    assert not X.contains(x0 + 1.1 * X.box_radius)[0]
    assert not X.contains([[0.0, 0.0]])[0]
    assert not X.contains([[3.0, 0.0]])[0]


def test_X_measure_monte_carlo(m20):
    params, _ = m20
    X = SpatialPattern.from_params(params)
    mc, hw = X.measure_mc(np.random.default_rng(2), 20_000)
    assert abs(mc - X.union_measure()) <= 3 * hw + 1e-3 * X.union_measure()


def test_time_grid(m20):
    params, _ = m20
    T = TimeGrid.from_params(params)
    assert np.all((T.points > 4.0 ** -3) & (T.points < 1))
    assert len(T) == pytest.approx((1 - 4.0 ** -3) / T.spacing, abs=2)


def test_initial_data_against_direct_sum(profile, toy):
    params, f = toy
    rng = np.random.default_rng(3)
    xs = rng.uniform(-2, 2, (20, 2))
    direct = profile.cutoff(np.linalg.norm(xs, axis=1)) * np.exp(2j * np.pi * xs @ f.points.T).sum(axis=1)
    assert np.allclose(initial_data_space(xs, f, profile), direct, atol=1e-9)


def test_u0_norm_against_spatial_monte_carlo(profile, constants):
    params = build_params(2, 0.2, 12, 0.15, constants)
    f = build_frequency_set(params)
    val, err = u0_l2_norm(f, profile)
    mc, hw = u0_l2_spatial_mc(f, profile, np.random.default_rng(4), 3000)
    assert err < 1e-4 * val  # overlap bound between neighbouring bumps
    assert abs(mc - val) <= 3 * hw


def test_dimension_three_scale_rule(constants):
    c3 = dataclasses.replace(constants, n=3, r_min=1e6)
    with pytest.raises(ScaleTooSmall):
        build_params(3, 0.19, 10, 0.1, c3)
    p = build_params(3, 0.19, 10, 0.1, dataclasses.replace(c3, r_min=1e5))
    assert p.R == pytest.approx(10 ** (1 / 0.19))


def test_disk_of_radius_3_2(constants):
    count = sum(1 for a in range(-4, 5) for b in range(-4, 5) if a * a + b * b < 3.2 ** 2)
    assert count == 37
    p = build_params(2, 0.2, 12, 0.15, dataclasses.replace(constants, eps1_operating=3.2 / 12))
    assert len(build_frequency_set(p)) == count


@pytest.mark.parametrize("m", [12, 16, 20, 24])
def test_frequency_count_tracks_disk_area(constants, m):
    p = build_params(2, 0.2, m, 0.15, constants)
    f = build_frequency_set(p)
    assert 0.5 <= len(f) / (math.pi * (p.eps1 * m) ** 2) <= 1.5
    assert np.any(np.all(f.indices == 0, axis=1))


def test_box_edge_membership(m20):
    params, _ = m20
    X = SpatialPattern.from_params(params)
    x0 = X.nearest_center([[0.6, 0.3]])[0] * X.center_spacing
    assert X.contains(x0)[0]
    assert not X.contains(x0 + np.array([1.5 * X.box_radius, 0.0]))[0]


def test_X_measure_closed_form(m20):
    params, _ = m20
    X = SpatialPattern.from_params(params)
    mc, hw = X.measure_mc(np.random.default_rng(5), 100_000)
    assert abs(mc / X.union_measure() - 1) < 0.02


def test_initial_data_hat_values(profile, m20):
    from schrodlab.lattice import initial_data_hat
    params, f = m20
    at_bump = initial_data_hat(f.points[5], f, profile)[0]
    assert abs(at_bump - profile.theta_at_zero) <= profile.tail_mass(f.spacing / 2)
    far = np.array([params.eps1 * params.R + profile.rho_max + 10.0, 0.0])
    assert abs(initial_data_hat(far, f, profile)[0]) < 1e-10


def test_initial_data_space_support(profile, m20):
    _, f = m20
    assert initial_data_space([8 * math.sqrt(2), 0.0], f, profile)[0] == 0
    assert initial_data_space([0.0, 0.0], f, profile)[0] == 0


def test_initial_data_space_against_inverse_transform(profile, toy):
    """u0(x) = sum e^{2 pi i x.xi'} int theta(eta) e^{2 pi i x.eta}, by quadrature of theta."""
    from schrodlab.pseudoconformal import _theta_transform
    _, f = toy
    rng = np.random.default_rng(6)
    r = rng.uniform(0.01, 2.8, 10)
    ang = rng.uniform(0, 2 * math.pi, 10)
    xs = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    got = initial_data_space(xs, f, profile)
    for x, g in zip(xs, got):
        ref = _theta_transform(profile, np.linalg.norm(x)) * np.exp(2j * np.pi * f.points @ x).sum()
        assert abs(g - ref) <= 1e-4 * max(abs(ref), 1e-3)
