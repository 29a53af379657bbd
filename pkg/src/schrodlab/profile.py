"""Annular cutoff, the bump theta, and its tabulated radial transform.

Fourier convention throughout: f^(xi) = int f(x) exp(-2 pi i x.xi) dx.

The cutoff is real and radial, so theta (its transform) equals its inverse
transform. We never tabulate theta directly: it lives on two very different
scales (the plateau edge at 2 sqrt(n) and the inner hole at 4^{-n-2}), so
the cutoff is split as

    cutoff(r) = P_{1/2}(r / d) - P_{1/4}(r / b),   d = 4 sqrt(n),  b = 4^{-n-2}

where P_alpha(s) is 1 on [0, alpha], glues down to 0 on [alpha, 1]. Each
unit bump P_alpha has its own table Phi_alpha(k) and

    theta(rho) = d^n Phi_{1/2}(d rho) - b^n Phi_{1/4}(b rho).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import hashlib
import json
import math

import numpy as np
from scipy import integrate

from .errors import InvalidDimension, ResolutionError
from .quad import gl_panels, sphere_area, sphere_average

MAX_DIMENSION = 4


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def glue_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly increasing between."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a = _psi(t)
    return a / (a + _psi(1.0 - t))


def plateau_bump(s, alpha: float):
    """1 on [0, alpha], smooth descent on [alpha, 1], 0 beyond."""
    s = np.asarray(s, dtype=float)
    return 1.0 - glue_step((s - alpha) / (1.0 - alpha))


@dataclass(frozen=True)
class AnnularCutoff:
    n: int
    r_supp_in: float
    r_one_in: float
    r_one_out: float
    r_supp_out: float
    transition: str = "glue: psi(t)/(psi(t)+psi(1-t)), psi(t)=exp(-1/t)"

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        rise = glue_step((r - self.r_supp_in) / (self.r_one_in - self.r_supp_in))
        fall = 1.0 - glue_step((r - self.r_one_out) / (self.r_supp_out - self.r_one_out))
        return rise * fall

    @property
    def inner_alpha(self) -> float:
        return self.r_supp_in / self.r_one_in

    @property
    def outer_alpha(self) -> float:
        return self.r_one_out / self.r_supp_out

    def l2_norm(self) -> float:
        """||cutoff||_2 by adaptive 1-D quadrature (independent of any table)."""
        area = sphere_area(self.n)
        pts = [self.r_supp_in, self.r_one_in, self.r_one_out, self.r_supp_out]
        f = lambda r: float(self(r)) ** 2 * r ** (self.n - 1)
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            total += integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=400)[0]
        return math.sqrt(area * total)

    def integral(self) -> float:
        """int cutoff over R^n, which is theta(0)."""
        area = sphere_area(self.n)
        pts = [self.r_supp_in, self.r_one_in, self.r_one_out, self.r_supp_out]
        f = lambda r: float(self(r)) * r ** (self.n - 1)
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            total += integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=400)[0]
        return area * total


def build_cutoff(n: int) -> AnnularCutoff:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidDimension(f"dimension must be an integer >= 2, got {n!r}")
    if n > MAX_DIMENSION:
        raise InvalidDimension(f"dimensions above {MAX_DIMENSION} are not supported")
    n = int(n)
    return AnnularCutoff(
        n=n,
        r_supp_in=4.0 ** (-n - 3),
        r_one_in=4.0 ** (-n - 2),
        r_one_out=2.0 * math.sqrt(n),
        r_supp_out=4.0 * math.sqrt(n),
    )


# ---------------------------------------------------------------------------
# piecewise Chebyshev table


def _cheb_nodes(order: int) -> np.ndarray:
    j = np.arange(order)
    return np.cos(np.pi * (2 * j + 1) / (2 * order))[::-1]


@dataclass(frozen=True)
class ChebTable:
    """Piecewise Chebyshev interpolant on [0, k_max] with equal panels."""

    k_max: float
    panel_width: float
    coeffs: np.ndarray  # (panels, order)

    @classmethod
    def from_function(cls, func, k_max: float, panel_width: float, order: int):
        panels = int(round(k_max / panel_width))
        x = _cheb_nodes(order)
        left = np.arange(panels) * panel_width
        k = left[:, None] + 0.5 * panel_width * (x[None, :] + 1.0)
        vals = np.asarray(func(k.ravel())).reshape(panels, order)
        # values -> Chebyshev coefficients
        T = np.polynomial.chebyshev.chebvander(x, order - 1)
        coeffs = np.linalg.solve(T, vals.T).T
        return cls(float(panels * panel_width), float(panel_width), coeffs)

    @property
    def order(self) -> int:
        return self.coeffs.shape[1]

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        flat = k.ravel()
        out = np.zeros_like(flat)
        inside = (flat >= 0) & (flat < self.k_max)
        kk = flat[inside]
        idx = np.minimum((kk / self.panel_width).astype(np.int64), self.coeffs.shape[0] - 1)
        x = 2.0 * (kk - idx * self.panel_width) / self.panel_width - 1.0
        c = self.coeffs[idx]
        # Clenshaw, vectorised over points
        b1 = np.zeros_like(x)
        b2 = np.zeros_like(x)
        for j in range(self.order - 1, 0, -1):
            b1, b2 = c[:, j] + 2 * x * b1 - b2, b1
        out[inside] = c[:, 0] + x * b1 - b2
        return out.reshape(k.shape)


# ---------------------------------------------------------------------------
# unit bumps


@dataclass(frozen=True)
class RadialGrid:
    """Resolution knobs for the radial transform tables."""

    k_max: float = 160.0
    panel_width: float = 1.0
    order: int = 24
    source_panels: int = 192
    source_order: int = 24

    def refined(self) -> "RadialGrid":
        return RadialGrid(self.k_max, self.panel_width / 2, self.order,
                          self.source_panels * 2, self.source_order)


def _source_nodes(alpha: float, grid: RadialGrid, k_top: float):
    # about two panels per oscillation of the kernel at the largest k
    panels = max(grid.source_panels, int(2 * k_top) + 8)
    n_in = max(2, int(round(panels * alpha)))
    edges = np.concatenate([
        np.linspace(0.0, alpha, n_in + 1)[:-1],
        np.linspace(alpha, 1.0, panels - n_in + 1),
    ])
    return gl_panels(edges, grid.source_order)


def unit_bump_transform(alpha: float, n: int, k, grid: RadialGrid = RadialGrid()):
    """Direct quadrature of the n-dimensional transform of P_alpha(|z|)."""
    k = np.asarray(k, dtype=float)
    flat = k.ravel()
    s, w = _source_nodes(alpha, grid, float(np.max(np.abs(flat))) if flat.size else 0.0)
    weight = w * plateau_bump(s, alpha) * s ** (n - 1)
    out = np.empty(flat.size)
    for lo in range(0, flat.size, 512):
        chunk = flat[lo:lo + 512]
        out[lo:lo + 512] = sphere_average(n, 2 * np.pi * np.outer(chunk, s)) @ weight
    return out.reshape(k.shape)


@dataclass(frozen=True)
class UnitBump:
    """P_alpha in dimension n with its tabulated transform Phi and L1 tails."""

    alpha: float
    n: int
    table: ChebTable
    k_eff: float  # L1 mass of Phi beyond this is < 1e-11
    tail_edges: np.ndarray  # k grid
    tail_values: np.ndarray  # |S^{n-1}| int_{k}^{inf} |Phi(k')| k'^{n-1} dk'
    tail_beyond: float  # the same integral from k_max on

    def phi(self, k):
        return self.table(k)

    def l1_tail(self, k0):
        """Upper-step L1 tail beyond k0 (monotone nonincreasing)."""
        k0 = np.asarray(k0, dtype=float)
        idx = np.searchsorted(self.tail_edges, k0, side="right") - 1
        idx = np.clip(idx, 0, self.tail_edges.size - 1)
        out = self.tail_values[idx]
        out = np.where(k0 >= self.tail_edges[-1], self.tail_beyond, out)
        return np.where(k0 <= 0, self.tail_values[0], out)

    @property
    def l1_norm(self) -> float:
        return float(self.tail_values[0])

    def support_integral(self) -> float:
        """Phi(0) = int P_alpha."""
        return float(self.table(np.array([0.0]))[0])


def build_unit_bump(alpha: float, n: int, grid: RadialGrid = RadialGrid()) -> UnitBump:
    table = ChebTable.from_function(lambda k: unit_bump_transform(alpha, n, k, grid),
                                    grid.k_max, grid.panel_width, grid.order)
    area = sphere_area(n)
    edges = np.linspace(0.0, table.k_max, int(table.k_max / 0.05) + 1)
    nodes, weights = gl_panels(edges, 16)
    integrand = area * np.abs(table(nodes)) * nodes ** (n - 1) * weights
    per_panel = integrand.reshape(edges.size - 1, 16).sum(axis=1)
    # |Phi| past k_max: direct quadrature out to 2 k_max
    far_edges = np.linspace(table.k_max, 2 * table.k_max, 101)
    fk, fw = gl_panels(far_edges, 8)
    beyond = float(area * np.sum(np.abs(unit_bump_transform(alpha, n, fk, grid)) * fk ** (n - 1) * fw))
    tails = np.concatenate([np.cumsum(per_panel[::-1])[::-1], [0.0]]) + beyond
    # effective bandwidth: where the remaining L1 mass drops below 1e-11
    below = np.nonzero(tails <= beyond + 1e-11)[0]
    k_eff = float(edges[below[0]]) if below.size else float(table.k_max)
    return UnitBump(float(alpha), int(n), table, k_eff, edges, tails, beyond)


# ---------------------------------------------------------------------------
# the bump profile


@dataclass(frozen=True)
class BumpProfile:
    cutoff: AnnularCutoff
    outer: UnitBump
    inner: UnitBump
    grid: RadialGrid
    l1_norm: float
    l2_norm: float
    theta_at_zero: float
    tail_edges: np.ndarray = field(repr=False)
    tail_values: np.ndarray = field(repr=False)  # direct tail integral, no safety factor
    tail_safety: float = 2.0

    @property
    def n(self) -> int:
        return self.cutoff.n

    @property
    def outer_scale(self) -> float:
        return self.cutoff.r_supp_out

    @property
    def inner_scale(self) -> float:
        return self.cutoff.r_one_in

    @property
    def rho_max(self) -> float:
        """Radius beyond which the tabulated theta is identically zero."""
        return self.inner.table.k_max / self.inner_scale

    def theta(self, rho):
        rho = np.abs(np.asarray(rho, dtype=float))
        d, b, n = self.outer_scale, self.inner_scale, self.n
        return d ** n * self.outer.phi(d * rho) - b ** n * self.inner.phi(b * rho)

    def theta_vec(self, xi):
        """theta at points of R^n (last axis is the coordinate)."""
        return self.theta(np.linalg.norm(np.asarray(xi, dtype=float), axis=-1))

    def tail_integral(self, r):
        """Quadratured int_{|xi| > r} |theta|, read off the panel grid (upper step)."""
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.tail_edges, r, side="right") - 1
        idx = np.clip(idx, 0, self.tail_edges.size - 1)
        return self.tail_values[idx]

    def tail_mass(self, r):
        """Upper bound for int_{|xi|>r} |theta| (quadrature times a safety factor)."""
        return self.tail_safety * self.tail_integral(r)

    def fingerprint(self) -> str:
        payload = json.dumps(profile_to_dict(self, include_tables=True), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _theta_panels(d, b, k_max_out, k_max_in):
    """Panel grid in rho covering both the outer scale and the long inner tail."""
    rho_split = k_max_out / d
    e1 = np.linspace(0.0, rho_split, int(rho_split / 0.02) + 1)
    k_lo = b * rho_split
    e2 = np.linspace(k_lo, k_max_in, int((k_max_in - k_lo) / 0.02) + 1) / b
    return np.concatenate([e1, e2[1:]])


def build_profile(cutoff: AnnularCutoff, grid: RadialGrid = RadialGrid()) -> BumpProfile:
    n = cutoff.n
    outer = build_unit_bump(cutoff.outer_alpha, n, grid)
    inner = build_unit_bump(cutoff.inner_alpha, n, grid)
    d, b = cutoff.r_supp_out, cutoff.r_one_in
    area = sphere_area(n)

    theta = lambda rho: d ** n * outer.phi(d * rho) - b ** n * inner.phi(b * rho)
    edges = _theta_panels(d, b, outer.table.k_max, inner.table.k_max)
    order = 12
    rho, w = gl_panels(edges, order)
    th = theta(rho)
    per_panel = (area * np.abs(th) * rho ** (n - 1) * w).reshape(-1, order).sum(axis=1)
    tails = np.concatenate([np.cumsum(per_panel[::-1])[::-1], [0.0]])
    tails = tails + inner.tail_beyond + outer.tail_beyond
    l1 = float(tails[0])

    # ||theta||_2 via the two scales and their overlap
    l2_sq = d ** n * _phi_l2_sq(outer) + b ** n * _phi_l2_sq(inner)
    r_ov, w_ov = gl_panels(np.linspace(0.0, outer.table.k_max / d, 4001), 12)
    cross = area * np.sum(d ** n * outer.phi(d * r_ov) * b ** n * inner.phi(b * r_ov)
                          * r_ov ** (n - 1) * w_ov)
    l2 = math.sqrt(l2_sq - 2 * cross)
    theta0 = float(theta(np.array([0.0]))[0])

    ref0 = cutoff.integral()
    if abs(theta0 - ref0) > 1e-8 * abs(ref0):
        raise ResolutionError(f"theta(0)={theta0!r} disagrees with int cutoff={ref0!r}")
    ref2 = cutoff.l2_norm()
    if abs(l2 - ref2) > 1e-6 * ref2:
        raise ResolutionError(f"||theta||_2={l2!r} disagrees with ||cutoff||_2={ref2!r}")
    return BumpProfile(cutoff, outer, inner, grid, l1, l2, theta0, edges, tails)


def _phi_l2_sq(bump: UnitBump) -> float:
    k, w = gl_panels(np.linspace(0.0, bump.table.k_max, int(bump.table.k_max / 0.05) + 1), 12)
    return float(sphere_area(bump.n) * np.sum(bump.phi(k) ** 2 * k ** (bump.n - 1) * w))


# ---------------------------------------------------------------------------
# serialisation


def _table_to_dict(t: ChebTable) -> dict:
    return {"k_max": t.k_max, "panel_width": t.panel_width, "coeffs": t.coeffs.tolist()}


def _bump_to_dict(u: UnitBump, include_tables: bool) -> dict:
    out = {"alpha": u.alpha, "n": u.n, "k_eff": u.k_eff, "tail_beyond": u.tail_beyond}
    if include_tables:
        out["table"] = _table_to_dict(u.table)
        out["tail_edges"] = u.tail_edges.tolist()
        out["tail_values"] = u.tail_values.tolist()
    return out


def profile_to_dict(p: BumpProfile, include_tables: bool = True) -> dict:
    c = p.cutoff
    out = {
        "cutoff": {"n": c.n, "r_supp_in": c.r_supp_in, "r_one_in": c.r_one_in,
                   "r_one_out": c.r_one_out, "r_supp_out": c.r_supp_out,
                   "transition": c.transition},
        "grid": asdict(p.grid),
        "l1_norm": p.l1_norm,
        "l2_norm": p.l2_norm,
        "theta_at_zero": p.theta_at_zero,
        "tail_safety": p.tail_safety,
        "outer": _bump_to_dict(p.outer, include_tables),
        "inner": _bump_to_dict(p.inner, include_tables),
    }
    if include_tables:
        out["tail_edges"] = p.tail_edges.tolist()
        out["tail_values"] = p.tail_values.tolist()
    return out


def _bump_from_dict(d: dict) -> UnitBump:
    t = d["table"]
    table = ChebTable(float(t["k_max"]), float(t["panel_width"]), np.asarray(t["coeffs"], float))
    return UnitBump(float(d["alpha"]), int(d["n"]), table, float(d["k_eff"]),
                    np.asarray(d["tail_edges"], float), np.asarray(d["tail_values"], float),
                    float(d["tail_beyond"]))


def profile_from_dict(d: dict) -> BumpProfile:
    c = d["cutoff"]
    cutoff = AnnularCutoff(int(c["n"]), c["r_supp_in"], c["r_one_in"], c["r_one_out"],
                           c["r_supp_out"], c.get("transition", AnnularCutoff.transition))
    return BumpProfile(
        cutoff=cutoff,
        outer=_bump_from_dict(d["outer"]),
        inner=_bump_from_dict(d["inner"]),
        grid=RadialGrid(**d["grid"]),
        l1_norm=float(d["l1_norm"]),
        l2_norm=float(d["l2_norm"]),
        theta_at_zero=float(d["theta_at_zero"]),
        tail_edges=np.asarray(d["tail_edges"], float),
        tail_values=np.asarray(d["tail_values"], float),
        tail_safety=float(d["tail_safety"]),
    )
