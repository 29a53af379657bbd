"""Pseudoconformal transform v(x,t) = t^{-n/2} conj(u(x/t, 1/t)) exp(i|x|^2/4t).

Fields here are callables f(x, s) in the exp(i s Delta) clock. The lattice
data u0 is evolved in the t/(2 pi R) clock of `propagator`; `expsum_field`
and `oracle_field` do the conversion.

With the convention f^(xi) = int f e^{-2 pi i x.xi}, letting t -> 0 in v
gives

    v0(x)  = (4 pi)^{-n/2} e^{i pi n/4} conj(u0^(x/4 pi)),
    v0^(y) = C u0(4 pi y),  C = (4 pi)^{n/2} e^{i pi n/4},

using that u0^ is real and u0 is even (Omega = -Omega).
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Callable

import numpy as np

from . import pinned
from .errors import DegenerateProbeSet, SingularTime
from .lattice import FrequencySet, initial_data_hat, initial_data_space
from .profile import BumpProfile, _theta_panels
from .propagator import evolve_expsum, evolve_oracle, lattice_time
from .quad import compensated_sum, gl_panels, sphere_average

Field = Callable[[np.ndarray, float], complex]


def expsum_field(freq: FrequencySet, profile: BumpProfile) -> Field:
    def u(x, s):
        return evolve_expsum(x, float(lattice_time(s, freq.R)), freq, freq.R, profile).value
    return u


def oracle_field(freq: FrequencySet, profile: BumpProfile) -> Field:
    def u(x, s):
        return evolve_oracle(x, float(lattice_time(s, freq.R)), freq, freq.R, profile).value
    return u


def transform_amplitude(u_evaluator: Field, x, t: float) -> complex:
    if t <= 0:
        raise SingularTime(f"t={t}")
    x = np.asarray(x, dtype=float)
    n = x.size
    u = u_evaluator(x / t, 1.0 / t)
    return t ** (-n / 2) * np.conj(u) * np.exp(1j * float(x @ x) / (4 * t))


def transformed_field(u_evaluator: Field) -> Field:
    return lambda x, t: transform_amplitude(u_evaluator, x, t)


def witness(x_prime, t_prime: float, R: float) -> tuple[np.ndarray, float]:
    """(x, t) = (2 pi R x'/t', 2 pi R/t'); there |v| = t^{-n/2} |u at (x', t')|."""
    t = 2 * np.pi * R / t_prime
    return 2 * np.pi * R * np.asarray(x_prime, dtype=float) / t_prime, t


@dataclass(frozen=True)
class TransformedField:
    freq: FrequencySet
    profile: BumpProfile
    u: Field

    @classmethod
    def build(cls, freq, profile, evaluator: str = "expsum") -> "TransformedField":
        src = expsum_field if evaluator == "expsum" else oracle_field
        return cls(freq, profile, src(freq, profile))

    def __call__(self, x, t) -> complex:
        return transform_amplitude(self.u, x, t)

    def witness(self, x_prime, t_prime):
        x, t = witness(x_prime, t_prime, self.freq.R)
        n = self.profile.n
        return x, t, pinned.AMPLITUDE * len(self.freq) * t ** (-n / 2)


# ---------------------------------------------------------------------------
# v0 and the spectral constant


def spectral_constant(n: int) -> complex:
    return (4 * np.pi) ** (n / 2) * np.exp(1j * np.pi * n / 4)


def v0_value(x, freq: FrequencySet, profile: BumpProfile):
    n = profile.n
    pref = (4 * np.pi) ** (-n / 2) * np.exp(1j * np.pi * n / 4)
    return pref * np.conj(initial_data_hat(np.atleast_2d(x) / (4 * np.pi), freq, profile))


def _theta_transform(profile: BumpProfile, k: float) -> float:
    """int theta(eta) e^{-2 pi i eta.kappa} d eta at |kappa| = k, by radial
    quadrature of the tabulated theta (no use of the cutoff)."""
    n = profile.n
    d, b = profile.outer_scale, profile.inner_scale
    edges = _theta_panels(d, b, profile.outer.table.k_max, profile.inner.table.k_max)
    # refine so that every panel holds at most ~2 oscillations of the kernel
    widths = np.diff(edges)
    per = np.maximum(1, np.ceil(widths * k / 2).astype(int))
    fine = np.concatenate([np.linspace(a, c, p + 1)[:-1] for a, c, p in zip(edges[:-1], edges[1:], per)]
                          + [edges[-1:]])
    total = 0.0
    chunk = 20000  # panels per block keeps the node arrays small at large k
    for i in range(0, len(fine) - 1, chunk):
        rho, w = gl_panels(fine[i:i + chunk + 1], 16)
        total += float(np.sum(profile.theta(rho) * sphere_average(n, 2 * np.pi * k * rho) * rho ** (n - 1) * w))
    return total


def v0_hat_numeric(y, freq: FrequencySet, profile: BumpProfile) -> complex:
    """Forward transform of v0 computed bump by bump:
    v0 = c sum theta(x/4pi - xi') so v0^(y) = c (4pi)^n sum e^{-2pi i 4pi xi'.y} theta^(4pi y)."""
    y = np.asarray(y, dtype=float)
    n = profile.n
    c = (4 * np.pi) ** (-n / 2) * np.exp(1j * np.pi * n / 4)
    k = 4 * np.pi * float(np.linalg.norm(y))
    th = _theta_transform(profile, k)
    ph = np.exp(-2j * np.pi * 4 * np.pi * (freq.points @ y))
    return c * (4 * np.pi) ** n * th * compensated_sum(ph)


@dataclass(frozen=True)
class SpectralConstant:
    c_value: complex
    fit_residual: float
    probes: int
    ratios: tuple = ()


def spectral_probes(profile: BumpProfile, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points y with 4 pi |y| uniform over the support annulus of u0."""
    n = profile.n
    cut = profile.cutoff
    r = rng.uniform(cut.r_supp_in, cut.r_supp_out, count) / (4 * np.pi)
    e = rng.normal(size=(count, n))
    e /= np.linalg.norm(e, axis=1)[:, None]
    return r[:, None] * e


def fit_spectral_constant(freq: FrequencySet, R: float, profile: BumpProfile, probes: int = 50,
                          rng: np.random.Generator | None = None,
                          threshold: float = 0.05) -> SpectralConstant:
    rng = rng or np.random.default_rng(0)
    ratios = []
    tries = 0
    while len(ratios) < probes and tries < 50 * probes:
        y = spectral_probes(profile, 1, rng)[0]
        tries += 1
        u = initial_data_space(4 * np.pi * y, freq, profile)[0]
        if abs(u) < threshold * len(freq):
            continue
        ratios.append(v0_hat_numeric(y, freq, profile) / u)
    if not ratios:
        raise DegenerateProbeSet("no probe with |u0(4 pi y)| above threshold")
    r = np.array(ratios)
    med = complex(np.median(r.real), np.median(r.imag))
    resid = float(np.max(np.abs(r - med)) / abs(med))
    return SpectralConstant(med, resid, len(ratios), tuple(complex(v) for v in r))


def v0_l2_norm(freq: FrequencySet, profile: BumpProfile) -> float:
    """||v0||_2 by quadrature of |v0|^2 = (4pi)^{-n} |sum theta(x/4pi - xi')|^2.

    The bumps 4 pi xi' are 4 pi R^{1-sigma} apart, so cross terms are below
    the tail bound and each bump contributes (4 pi)^{-n} (4 pi)^n int theta^2.
    """
    n = profile.n
    d, b = profile.outer_scale, profile.inner_scale
    edges = _theta_panels(d, b, profile.outer.table.k_max, profile.inner.table.k_max)
    rho, w = gl_panels(edges, 16)
    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    per_bump = area * float(np.sum(profile.theta(rho) ** 2 * rho ** (n - 1) * w))
    return math.sqrt(len(freq) * per_bump)


def evolve_v0_direct(x, t: float, freq: FrequencySet, profile: BumpProfile) -> complex:
    """exp(i t Delta) v0(x) = int v0^(y) exp(2 pi i x.y - 4 pi^2 i t |y|^2) dy.

    v0^(y) = C cutoff(4 pi |y|) sum_{xi'} e^{2 pi i 4 pi y.xi'}; the angle is
    integrated in closed form and the radius by Gauss-Legendre panels fine
    enough for the chirp.
    """
    x = np.asarray(x, dtype=float)
    n = profile.n
    cut = profile.cutoff
    radii = np.array([cut.r_supp_in, cut.r_one_in, cut.r_one_out, cut.r_supp_out]) / (4 * np.pi)
    total = []
    for xi in freq.points:
        g = float(np.linalg.norm(x + 4 * np.pi * xi))
        pieces = []
        for a, c in zip(radii[:-1], radii[1:]):
            cycles = 2 * np.pi * t * (c * c - a * a) + g * (c - a) + 4
            panels = max(4, int(math.ceil(cycles / 2)))
            pieces.append(np.linspace(a, c, panels + 1)[:-1])
        edges = np.concatenate(pieces + [radii[-1:]])
        rho, w = gl_panels(edges, 16)
        integrand = (cut(4 * np.pi * rho) * np.exp(-4j * np.pi ** 2 * t * rho * rho)
                     * sphere_average(n, 2 * np.pi * rho * g) * rho ** (n - 1) * w)
        total.append(np.sum(integrand))
    return spectral_constant(n) * compensated_sum(total)


# ---------------------------------------------------------------------------
# PDE residual


def pde_residual(field_evaluator: Field, x, t: float, h: float, h_t: float | None = None) -> float:
    """|i d_t f + Delta f| at (x, t) by second-order centred differences."""
    h_t = h if h_t is None else h_t
    if t <= 2 * h_t:
        raise SingularTime(f"t={t} must exceed 2 h")
    x = np.asarray(x, dtype=float)
    n = x.size
    f0 = field_evaluator(x, t)
    dt = (field_evaluator(x, t + h_t) - field_evaluator(x, t - h_t)) / (2 * h_t)
    lap = 0j
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        lap += (field_evaluator(x + e, t) - 2 * f0 + field_evaluator(x - e, t)) / h ** 2
    return float(abs(1j * dt + lap))


def corrupted_transform(u_evaluator: Field) -> Field:
    """Negative control: the quadratic phase with 1/5t instead of 1/4t."""
    def v(x, t):
        x = np.asarray(x, dtype=float)
        u = u_evaluator(x / t, 1.0 / t)
        return t ** (-x.size / 2) * np.conj(u) * np.exp(1j * float(x @ x) / (5 * t))
    return v
