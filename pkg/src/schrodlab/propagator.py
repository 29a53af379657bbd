"""Free Schrodinger evolution of the lattice-bump data.

Clock: this module works in the "lattice clock" where a time t in (0, 1)
stands for the operator exp(i t/(2 pi R) Delta). The e^{i s Delta} time is
s = t / (2 pi R); `schrodinger_time` / `lattice_time` convert.

Two evaluators of exp(i s Delta) u0(x):

* `evolve_expsum`: phase-aligned exponential sum times the per-frequency
  integral of `lemma4_integral`;
* `evolve_oracle`: direct quadrature of int u0^(xi) exp(2 pi i x.xi -
  4 pi^2 i s |xi|^2) d xi bump by bump, without factoring out the phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np
from numba import njit
from numpy.polynomial.legendre import leggauss

from .errors import InvalidPerturbationBounds, QuadratureError
from .profile import BumpProfile, UnitBump, plateau_bump
from .quad import compensated_sum, gl_panels, sphere_average

CONE_MARGIN = 3.0  # scaled radii past the group-velocity front
MAX_PANELS = 1 << 18


def schrodinger_time(t, R):
    return np.asarray(t, dtype=float) / (2 * np.pi * R)


def lattice_time(s, R):
    return np.asarray(s, dtype=float) * (2 * np.pi * R)


@dataclass(frozen=True)
class AmplitudeResult:
    value: complex
    quadrature_error: float
    tail_error: float

    @property
    def total_error(self) -> float:
        return self.quadrature_error + self.tail_error


# ---------------------------------------------------------------------------
# evolution of one unit bump P_alpha at scaled radius w and scaled time tau


def _freq_cycles(w, tau, K):
    # kernel J(2 pi w k) + oscillation of Phi itself + chirp
    return (np.asarray(w) + 1.0) * K + 2 * np.pi * tau * K * K


def _spatial_cycles(w, tau):
    return (np.asarray(w) / (4 * np.pi * tau) + 1.0 / (8 * np.pi * tau)) if tau > 0 else np.inf


def _freq_eval(bump: UnitBump, w: np.ndarray, tau: float, panels: int, order: int = 12):
    K = bump.k_eff
    k, wk = gl_panels(np.linspace(0.0, K, panels + 1), order)
    weight = bump.phi(k) * np.exp(-4j * np.pi ** 2 * tau * k * k) * k ** (bump.n - 1) * wk
    out = np.empty(w.size, dtype=complex)
    for lo in range(0, w.size, 64):
        ker = sphere_average(bump.n, 2 * np.pi * np.outer(w[lo:lo + 64], k))
        out[lo:lo + 64] = ker @ weight
    return out


def _spatial_eval(bump: UnitBump, w: np.ndarray, tau: float, panels: int, order: int = 12):
    n, a = bump.n, bump.alpha
    n_in = max(2, int(round(panels * a)))
    edges = np.concatenate([np.linspace(0, a, n_in + 1)[:-1], np.linspace(a, 1, panels - n_in + 1)])
    r, wr = gl_panels(edges, order)
    weight = np.exp(1j * r * r / (4 * tau)) * plateau_bump(r, a) * r ** (n - 1) * wr
    out = np.empty(w.size, dtype=complex)
    for lo in range(0, w.size, 64):
        ker = sphere_average(n, np.outer(w[lo:lo + 64], r) / (2 * tau))
        out[lo:lo + 64] = ker @ weight
    pref = (4 * np.pi * tau) ** (-n / 2) * np.exp(-1j * np.pi * n / 4)
    return pref * np.exp(1j * w * w / (4 * tau)) * out


def evolve_bump(bump: UnitBump, w, tau: float, method: str = "auto"):
    """exp(i tau Delta) P_alpha(|.|) at radii `w`.

    Returns (values, quadrature_error, tail_error) arrays. Quadrature error
    is the change under doubling the panel count. Radii beyond the
    group-velocity front of the band [0, k_eff] are returned as 0 with the
    L1 mass of the frequencies fast enough to reach them as tail error.
    """
    w = np.abs(np.atleast_1d(np.asarray(w, dtype=float)))
    vals = np.zeros(w.size, dtype=complex)
    qerr = np.zeros(w.size)
    terr = np.zeros(w.size)
    if tau < 0:
        raise ValueError("negative time")
    K = bump.k_eff
    front = 1.0 + 4 * np.pi * tau * K + CONE_MARGIN
    outside = w > front
    if method != "auto":
        outside[:] = False
    if outside.any():
        if tau > 0:
            k_reach = (w[outside] - 1.0 - CONE_MARGIN) / (4 * np.pi * tau)
            terr[outside] = bump.l1_tail(k_reach)
        else:
            terr[outside] = bump.tail_beyond
    todo = np.nonzero(~outside)[0]
    if todo.size == 0:
        return vals, qerr, terr
    fc = _freq_cycles(w[todo], tau, K)
    sc = _spatial_cycles(w[todo], tau) if tau > 0 else np.full(todo.size, np.inf)
    if method == "frequency":
        use_sp = np.zeros(todo.size, bool)
    elif method == "spatial":
        if tau <= 0:
            raise ValueError("spatial kernel needs tau > 0")
        use_sp = np.ones(todo.size, bool)
    else:
        use_sp = sc < fc
    for sp in (False, True):
        sel = todo[use_sp == sp]
        if sel.size == 0:
            continue
        cycles = (sc if sp else fc)[use_sp == sp]
        panels = np.maximum(16, np.ceil(cycles).astype(np.int64) + 8)
        if panels.max() > MAX_PANELS:
            raise QuadratureError(f"{'spatial' if sp else 'frequency'} rule needs "
                                  f"{int(panels.max())} panels")
        # bucket by panel count so each group shares one node set
        bucket = 2 ** np.ceil(np.log2(panels)).astype(np.int64)
        for p in np.unique(bucket):
            idx = sel[bucket == p]
            evalf = _spatial_eval if sp else _freq_eval
            coarse = evalf(bump, w[idx], tau, int(p))
            fine = evalf(bump, w[idx], tau, int(2 * p))
            vals[idx] = fine
            qerr[idx] = np.abs(fine - coarse)
            if not sp:
                terr[idx] = bump.l1_tail(K)
    return vals, qerr, terr


def evolved_cutoff(profile: BumpProfile, r, s: float, method: str = "auto"):
    """exp(i s Delta) cutoff at radii r (values, quadrature error, tail error)."""
    r = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
    d, b = profile.outer_scale, profile.inner_scale
    vo, qo, to = evolve_bump(profile.outer, r / d, s / d ** 2, method)
    vi, qi, ti = evolve_bump(profile.inner, r / b, s / b ** 2, method)
    return vo - vi, qo + qi, to + ti


# ---------------------------------------------------------------------------
# the bump factor and the exponential-sum evaluator


def lemma4_integral(x, t: float, xi_prime, R: float, profile: BumpProfile,
                    tol: float | None = None) -> AmplitudeResult:
    """int exp(2 pi i[(x - 2 t xi'/R).xi - (t/R)|xi|^2]) theta(xi) d xi.

    theta is radial, so the n-dimensional integral collapses to a radial
    transform: it is the cutoff evolved for s = t/(2 pi R) and read at
    y = x - 2 t xi'/R.
    """
    vals, q, tl = lemma4_factors(x, t, np.atleast_2d(xi_prime), R, profile)
    res = AmplitudeResult(complex(vals[0]), float(q[0]), float(tl[0]))
    if tol is not None and res.quadrature_error > tol:
        raise QuadratureError(f"refinement changed the value by {res.quadrature_error:.3e}")
    return res


def lemma4_factors(x, t: float, xi_primes, R: float, profile: BumpProfile):
    """Vectorised `lemma4_integral` over the rows of `xi_primes`."""
    x = np.asarray(x, dtype=float)
    y = x[None, :] - 2.0 * t * np.asarray(xi_primes, dtype=float) / R
    return evolved_cutoff(profile, np.linalg.norm(y, axis=1), schrodinger_time(t, R))


def _frac_exact(value: Fraction) -> float:
    """Signed fractional part in [-1/2, 1/2), rounded to float at the end."""
    return float(value - math.floor(value + Fraction(1, 2)))


def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(float(v))


def aligned_phase(x, t: float, indices, spacing: float, R: float):
    """Fractional part of x.xi' - (t/R)|xi'|^2 for xi' = spacing * b.

    Since b is an integer vector, x.xi' = sum_i b_i (x_i spacing) and
    (t/R)|xi'|^2 = |b|^2 (t spacing^2 / R); both scalars are reduced mod 1
    in exact rational arithmetic on the given numbers before multiplying by b.
    Fractions are taken as they are, so exact lattice inputs give exact phases.
    """
    h = _exact(spacing)
    u = np.array([_frac_exact(_exact(v) * h) for v in np.atleast_1d(np.asarray(x, dtype=object))])
    v = _frac_exact(_exact(t) * h * h / _exact(R))
    b = np.asarray(indices).astype(float)
    frac = b @ u - v * np.sum(b * b, axis=1)
    return frac - np.round(frac)


def evolve_expsum(x, t: float, freq, R: float | None, profile: BumpProfile) -> AmplitudeResult:
    """exp(i t/(2 pi R) Delta) u0(x) as sum over Omega of phase * bump factor."""
    R = freq.R if R is None else R
    phase = np.exp(2j * np.pi * aligned_phase(x, t, freq.indices, freq.spacing, R))
    vals, q, tl = lemma4_factors(x, t, freq.points, R, profile)
    return AmplitudeResult(compensated_sum(phase * vals), float(np.sum(q)), float(np.sum(tl)))


def phase_distance(x, t: float, xi_prime_index, freq_or_spacing, R: float) -> float:
    """Distance of x.xi' - (t/R)|xi'|^2 to the nearest integer."""
    spacing = getattr(freq_or_spacing, "spacing", freq_or_spacing)
    idx = np.atleast_2d(np.asarray(xi_prime_index))
    return float(np.abs(aligned_phase(x, t, idx, spacing, R))[0])


# ---------------------------------------------------------------------------
# perturbed sums


def perturbed_sum_bound(a, b, delta1: float, delta2: float):
    """(|sum a_i b_i - |Omega||, |Omega|(d1 max|b| + d2 max|a| + d1 d2))."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.size == 0:
        raise InvalidPerturbationBounds("a and b must be non-empty and the same length")
    slack = 1e-12
    if np.max(np.abs(a - 1)) > delta1 + slack or np.max(np.abs(b - 1)) > delta2 + slack:
        raise InvalidPerturbationBounds("max|a-1| <= delta1 and max|b-1| <= delta2 required")
    size = a.size
    lhs = abs(compensated_sum(a * b) - size)
    rhs = size * (delta1 * np.max(np.abs(b)) + delta2 * np.max(np.abs(a)) + delta1 * delta2)
    return float(lhs), float(rhs)



# ---------------------------------------------------------------------------
# independent oracle


@njit(cache=True)
def _polar_bump(x0, x1, xi0, xi1, A, rho, wrho, theta_rho, M):
    """int theta_out(|eta|) exp(2 pi i[x.eta - A(2 xi'.eta + |eta|^2)]) d eta,
    polar Gauss-Legendre in |eta| times trapezoid in the angle."""
    acc = 0j
    two_pi = 2.0 * np.pi
    # linear part of the phase in eta
    g0 = x0 - 2.0 * A * xi0
    g1 = x1 - 2.0 * A * xi1
    for k in range(rho.size):
        r = rho[k]
        mk = M[k]
        # mk is even and the linear phase flips sign under phi -> phi + pi
        step = complex(math.cos(two_pi / mk), math.sin(two_pi / mk))
        e = 1.0 + 0j
        s = 0.0
        for j in range(mk // 2):
            s += math.cos(two_pi * r * (g0 * e.real + g1 * e.imag))
            e *= step
        s *= 2.0
        ph2 = -two_pi * A * r * r
        acc += wrho[k] * r * theta_rho[k] * (two_pi / mk) * s * complex(math.cos(ph2), math.sin(ph2))
    return acc


def _exact_center_phase(x, t, xi, R) -> float:
    """x.xi - (t/R)|xi|^2 mod 1, evaluated in rational arithmetic on the floats."""
    fx = [Fraction(float(v)) for v in x]
    fxi = [Fraction(float(v)) for v in xi]
    val = sum(a * b for a, b in zip(fx, fxi)) - Fraction(float(t)) / Fraction(float(R)) * sum(
        b * b for b in fxi)
    return float(val - math.floor(val))


def _angular_nodes(rho, bound, extra=0):
    z = 2 * np.pi * rho * bound
    m = np.ceil(z + 10 * np.cbrt(z) + 20 + extra).astype(np.int64)
    return m + (m % 2)


def _outer_rule(profile: BumpProfile, bound: float, A: float, fraction: float = 1.0):
    d = profile.outer_scale
    rho_max = profile.outer.k_eff / d
    cycles = (d + bound) * rho_max + A * rho_max ** 2 + 4
    panels = max(8, int(math.ceil(fraction * cycles / 3)))
    rho, w = gl_panels(np.linspace(0.0, rho_max, panels + 1), 16)
    theta = d ** profile.n * profile.outer.phi(d * rho)
    return rho, w, theta


def evolve_oracle(x, t: float, freq, R: float | None, profile: BumpProfile) -> AmplitudeResult:
    """exp(i t/(2 pi R) Delta) u0(x) by direct quadrature of the Fourier integral.

    For each bump the outer part of theta is integrated on its own polar grid
    around xi', the phase evaluated at every node. The inner part of theta
    (the hole of the cutoff) spreads over |xi| ~ 10^4 and is handled through
    the spatial heat-type kernel at the drifted centre 2 t xi'/R.
    """
    if profile.n != 2:
        return _evolve_oracle_nd(x, t, freq, R, profile)
    R = freq.R if R is None else R
    x = np.asarray(x, dtype=float)
    A = t / R
    pts = freq.points
    s = float(schrodinger_time(t, R))
    vals = np.empty(len(pts), dtype=complex)
    qerr = np.empty(len(pts))
    for i, xi in enumerate(pts):
        bound = float(np.linalg.norm(x) + 2 * A * np.linalg.norm(xi))
        rho, w, th = _outer_rule(profile, bound, A)
        fine = _polar_bump(x[0], x[1], xi[0], xi[1], A, rho, w, th, _angular_nodes(rho, bound))
        rho, w, th = _outer_rule(profile, bound, A, 0.75)
        coarse = _polar_bump(x[0], x[1], xi[0], xi[1], A, rho, w, th, _angular_nodes(rho, bound, -6))
        c0 = np.exp(2j * np.pi * _exact_center_phase(x, t, xi, R))
        vals[i] = c0 * fine
        qerr[i] = abs(fine - coarse)
    outer_tail = len(pts) * float(profile.outer.l1_tail(profile.outer.k_eff))
    inner, iq, it = _inner_part(x, t, freq, R, profile, s)
    # rounding of the per-node phases (arguments up to ~|x| rho_max cycles)
    rnd = len(pts) * 64 * np.finfo(float).eps * profile.l1_norm
    return AmplitudeResult(compensated_sum(vals) - inner, float(np.sum(qerr) + iq + rnd),
                           outer_tail + it)


def _inner_part(x, t, freq, R, profile: BumpProfile, s: float):
    """Sum over Omega of the inner-bump evolution, via the spatial kernel."""
    b = profile.inner_scale
    pts = freq.points
    centre = 2 * t * pts / R
    r = np.linalg.norm(x[None, :] - centre, axis=1)
    tau = s / b ** 2
    total = 0j
    q = tl = 0.0
    front = 1.0 + 4 * np.pi * tau * profile.inner.k_eff + CONE_MARGIN
    near = r / b <= front
    if near.any():
        method = "spatial" if tau > 0 else "frequency"
        v, qq, tt = evolve_bump(profile.inner, r[near] / b, tau, method)
        ph = np.array([_exact_center_phase(x, t, xi, R) for xi in pts[near]])
        total = compensated_sum(np.exp(2j * np.pi * ph) * v)
        q, tl = float(qq.sum()), float(tt.sum())
    far = ~near
    if far.any() and tau > 0:
        k_reach = (r[far] / b - 1.0 - CONE_MARGIN) / (4 * np.pi * tau)
        tl += float(np.sum(profile.inner.l1_tail(k_reach)))
    elif far.any():
        tl += far.sum() * profile.inner.tail_beyond
    return total, q, tl


def _evolve_oracle_nd(x, t, freq, R, profile: BumpProfile) -> AmplitudeResult:
    """Spherical-coordinate version for n = 3 (small configurations only)."""
    if profile.n != 3:
        raise NotImplementedError("oracle implemented for n = 2, 3")
    R = freq.R if R is None else R
    x = np.asarray(x, dtype=float)
    A = t / R
    s = float(schrodinger_time(t, R))

    def one(xi, fraction, extra):
        bound = float(np.linalg.norm(x) + 2 * A * np.linalg.norm(xi))
        rho, w, th = _outer_rule(profile, bound, A, fraction)
        acc = 0j
        for r, wr, tr in zip(rho, w, th):
            mz = int(_angular_nodes(np.array([r]), bound, extra)[0])
            mu, wmu = leggauss(max(8, mz // 2 + 8))
            phi = 2 * np.pi * np.arange(mz) / mz
            st = np.sqrt(1 - mu * mu)
            e = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                          np.repeat(mu[:, None], mz, axis=1)], axis=-1)
            ph = r * (e @ (x - 2 * A * xi)) - A * r * r
            acc += wr * r * r * tr * np.sum(wmu[:, None] * np.exp(2j * np.pi * ph)) * (2 * np.pi / mz)
        return acc

    vals, qerr = [], []
    for xi in freq.points:
        fine, coarse = one(xi, 1.0, 0), one(xi, 0.75, -6)
        vals.append(np.exp(2j * np.pi * _exact_center_phase(x, t, xi, R)) * fine)
        qerr.append(abs(fine - coarse))
    inner, iq, it = _inner_part(x, t, freq, R, profile, s)
    tail = len(freq) * float(profile.outer.l1_tail(profile.outer.k_eff))
    rnd = len(freq) * 64 * np.finfo(float).eps * profile.l1_norm
    return AmplitudeResult(compensated_sum(vals) - inner, float(sum(qerr) + iq + rnd), tail + it)
