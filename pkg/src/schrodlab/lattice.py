"""The sets Omega, X, T of the construction and the initial datum u0.

m = R^sigma is the primary integer and R = m^{1/sigma} is derived from it.
Every lattice point carries its integer index, so the identities x0.xi' in Z
and (t/R)|xi'|^2 in Z can be checked in integer arithmetic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
import math
from pathlib import Path

import numpy as np

from .errors import (DegenerateFrequencySet, ExponentOutOfRange, InvalidDimension,
                     ScaleTooSmall, TestExponentTooLarge)
from .profile import BumpProfile
from .proof_constants import ProofConstants
from .propagator import aligned_phase
from .quad import ball_volume, compensated_sum


@dataclass(frozen=True)
class ExperimentParams:
    n: int
    sigma: float
    m: int
    s: float
    constants: ProofConstants
    eps_tier: str = "empirical"

    @property
    def R(self) -> float:
        return float(self.m) ** (1.0 / self.sigma)

    @property
    def eps1(self) -> float:
        return self.constants.eps(self.eps_tier)[0]

    @property
    def eps2(self) -> float:
        return self.constants.eps(self.eps_tier)[1]

    @property
    def omega_spacing(self) -> float:
        """R^{1-sigma}; also the inverse X-center spacing."""
        return self.R / self.m

    @property
    def time_spacing(self) -> float:
        """R^{2 sigma - 1}."""
        return self.m ** 2 / self.R

    @property
    def time_count_scale(self) -> float:
        """R^{1-2 sigma} = R/m^2."""
        return self.R / self.m ** 2


def build_params(n: int, sigma: float, m: int, s: float, constants: ProofConstants,
                 eps_tier: str = "empirical") -> ExperimentParams:
    if n < 2:
        raise InvalidDimension(f"n={n}")
    if not 0 < sigma < 1.0 / (n + 2):
        raise ExponentOutOfRange(f"sigma={sigma} must lie in (0, 1/(n+2)) = (0, {1 / (n + 2):.4g})")
    if s >= sigma * n / 2:
        raise TestExponentTooLarge(f"s={s} must be below sigma*n/2={sigma * n / 2:.4g}")
    if int(m) != m or m < 1:
        raise ValueError(f"m={m} must be a positive integer")
    if constants.n != n:
        raise InvalidDimension(f"constants were derived for n={constants.n}, not {n}")
    p = ExperimentParams(int(n), float(sigma), int(m), float(s), constants, eps_tier)
    if p.R < constants.min_scale(eps_tier):
        raise ScaleTooSmall(f"R={p.R:.4g} below r_min={constants.min_scale(eps_tier):.4g}")
    return p


# ---------------------------------------------------------------------------
# Omega


@dataclass(frozen=True)
class FrequencySet:
    spacing: float
    radius: float
    R: float
    indices: np.ndarray  # (k, n) integers b with xi' = spacing * b

    @property
    def points(self) -> np.ndarray:
        return self.spacing * self.indices.astype(float)

    def __len__(self) -> int:
        return self.indices.shape[0]

    def ball_estimate(self) -> float:
        n = self.indices.shape[1]
        return ball_volume(n) * (self.radius / self.spacing) ** n

    def to_csv(self, path) -> None:
        path = Path(path)
        n = self.indices.shape[1]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"b{i}" for i in range(n)] + [f"xi{i}" for i in range(n)])
            for b, xi in zip(self.indices, self.points):
                w.writerow([int(v) for v in b] + [repr(float(v)) for v in xi])


def lattice_ball(n: int, radius: float) -> np.ndarray:
    """Integer points b in Z^n with |b| < radius, in lexicographic order."""
    k = int(math.floor(radius))
    axis = np.arange(-k, k + 1)
    grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    sq = np.sum(grid.astype(np.int64) ** 2, axis=1)
    return grid[sq < radius * radius]


def build_frequency_set(params: ExperimentParams) -> FrequencySet:
    scaled = params.eps1 * params.m  # eps1 R / R^{1-sigma}
    if scaled < 1:
        raise DegenerateFrequencySet(f"eps1 R^sigma = {scaled:.3g} < 1")
    idx = lattice_ball(params.n, scaled)
    return FrequencySet(params.omega_spacing, params.eps1 * params.R, params.R, idx)


# ---------------------------------------------------------------------------
# X and T


@dataclass(frozen=True)
class SpatialPattern:
    n: int
    center_spacing: float  # R^{sigma-1}
    box_radius: float  # eps2 / R, sup norm
    annulus: tuple[float, float]

    @classmethod
    def from_params(cls, params: ExperimentParams) -> "SpatialPattern":
        n = params.n
        return cls(n, 1.0 / params.omega_spacing, params.eps2 / params.R,
                   (4.0 ** (-n - 2), 2 * math.sqrt(n)))

    def nearest_center(self, x) -> np.ndarray:
        return np.round(np.asarray(x, dtype=float) / self.center_spacing).astype(np.int64)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        off = x - self.nearest_center(x) * self.center_spacing
        in_box = np.max(np.abs(off), axis=1) <= self.box_radius
        r = np.linalg.norm(x, axis=1)
        return in_box & (r > self.annulus[0]) & (r < self.annulus[1])

    def union_measure(self) -> float:
        """count * (2 box_radius)^n with the center count from the annulus volume."""
        lo, hi = self.annulus
        vol = ball_volume(self.n) * (hi ** self.n - lo ** self.n)
        return vol / self.center_spacing ** self.n * (2 * self.box_radius) ** self.n

    def _cube_half(self) -> int:
        return int(math.ceil(self.annulus[1] / self.center_spacing)) + 1

    def sample(self, rng: np.random.Generator, size: int, return_rate: bool = False):
        """Uniform points of X by rejection: uniform center index in a cube,
        uniform offset in its box, accept if inside the annulus."""
        k = self._cube_half()
        out = np.empty((0, self.n))
        tried = accepted = 0
        while out.shape[0] < size:
            batch = max(64, int(1.5 * (size - out.shape[0])))
            c = rng.integers(-k, k + 1, size=(batch, self.n))
            off = rng.uniform(-self.box_radius, self.box_radius, size=(batch, self.n))
            x = c * self.center_spacing + off
            r = np.linalg.norm(x, axis=1)
            ok = (r > self.annulus[0]) & (r < self.annulus[1])
            tried += batch
            accepted += int(ok.sum())
            out = np.vstack([out, x[ok]])
        out = out[:size]
        if return_rate:
            return out, accepted / tried
        return out

    def measure_mc(self, rng: np.random.Generator, draws: int) -> tuple[float, float]:
        """Monte Carlo measure of X and its 95% half width."""
        _, rate = self.sample(rng, draws, return_rate=True)
        cube = (2 * self._cube_half() + 1) ** self.n * (2 * self.box_radius) ** self.n
        tried = draws / rate
        hw = 1.96 * math.sqrt(rate * (1 - rate) / tried) * cube
        return rate * cube, hw


def x_membership(pattern: SpatialPattern, x):
    return pattern.contains(x)


def x_sampler(pattern: SpatialPattern, rng: np.random.Generator, size: int = 1):
    return pattern.sample(rng, size)


@dataclass(frozen=True)
class TimeGrid:
    spacing: float
    interval: tuple[float, float]
    indices: np.ndarray  # j with t = j * spacing

    @classmethod
    def from_params(cls, params: ExperimentParams) -> "TimeGrid":
        n = params.n
        lo, hi = 4.0 ** (-n - 1), 1.0
        h = params.time_spacing
        j = np.arange(int(math.floor(lo / h)), int(math.ceil(hi / h)) + 1)
        t = j * h
        j = j[(t > lo) & (t < hi)]
        return cls(h, (lo, hi), j)

    @property
    def points(self) -> np.ndarray:
        return self.indices * self.spacing

    def __len__(self) -> int:
        return self.indices.size


def t_enumerate(grid: TimeGrid) -> np.ndarray:
    return grid.points


# ---------------------------------------------------------------------------
# initial data


def initial_data_hat(xi, freq: FrequencySet, profile: BumpProfile):
    """u0^(xi) = sum_{xi'} theta(xi - xi'), summed over the bumps whose tabulated
    support reaches xi (theta is identically 0 in the table beyond rho_max)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    pts = freq.points
    out = np.zeros(xi.shape[0])
    for i, p in enumerate(xi):
        rho = np.linalg.norm(p[None, :] - pts, axis=1)
        near = rho <= profile.rho_max
        out[i] = compensated_sum(profile.theta(rho[near])) if near.any() else 0.0
    return out


def initial_data_space(x, freq: FrequencySet, profile: BumpProfile):
    """u0(x) = cutoff(|x|) sum_{xi'} exp(2 pi i x.xi')."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape[0], dtype=complex)
    cut = profile.cutoff(np.linalg.norm(x, axis=1))
    for i in range(x.shape[0]):
        if cut[i] == 0:
            continue
        ph = aligned_phase(x[i], 0.0, freq.indices, freq.spacing, freq.R)
        out[i] = cut[i] * compensated_sum(np.exp(2j * np.pi * ph))
    return out


def u0_l2_norm(freq: FrequencySet, profile: BumpProfile) -> tuple[float, float]:
    """||u0||_2 on the frequency side and an error bound.

    ||u0^||^2 = |Omega| ||theta||^2 + sum over pairs of overlaps. Bumps are
    R^{1-sigma} apart, so each overlap is at most
    2 sup|theta| int_{|xi| > gap/2}|theta|.
    """
    k = len(freq)
    main = k * profile.l2_norm ** 2
    gap = freq.spacing
    pair = 2 * abs(profile.theta_at_zero) * float(profile.tail_mass(gap / 2))
    bound_sq = k * (k - 1) * pair
    val = math.sqrt(main)
    return val, bound_sq / (2 * val)


def u0_l2_spatial_mc(freq: FrequencySet, profile: BumpProfile, rng: np.random.Generator,
                     samples: int) -> tuple[float, float]:
    """Independent spatial Monte Carlo of ||u0||_2 over the support ball."""
    n = freq.indices.shape[1]
    rad = profile.cutoff.r_supp_out
    r = rad * rng.uniform(0, 1, samples) ** (1 / n)
    e = rng.normal(size=(samples, n))
    e /= np.linalg.norm(e, axis=1)[:, None]
    x = r[:, None] * e
    cut = profile.cutoff(r)
    vals = np.empty(samples)
    for i in range(samples):
        ph = aligned_phase(x[i], 0.0, freq.indices, freq.spacing, freq.R)
        vals[i] = (cut[i] * abs(np.sum(np.exp(2j * np.pi * ph)))) ** 2
    vol = ball_volume(n) * rad ** n
    mean = vals.mean() * vol
    hw = 1.96 * vals.std(ddof=1) / math.sqrt(samples) * vol
    return math.sqrt(mean), hw / (2 * math.sqrt(mean))
