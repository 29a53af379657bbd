"""Simultaneous Dirichlet approximation and the measure of X/T.

Notation: ||z|| is the distance from z to the nearest integer. For params
with m = R^sigma, a point x of [0,1]^n lies in X/T iff some t = j R^{2sigma-1}
in T puts t x into X, i.e. ||j m x_i|| <= eps2/m for all i and t x lies in
the annulus of X.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import stats

from .errors import LemmaViolation
from .lattice import ExperimentParams, TimeGrid

Z95 = 1.959963984540054


@dataclass(frozen=True)
class ApproximationResult:
    p: int | None
    error: float
    target: tuple
    bound_n: float
    found: bool = True


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    half_width: float
    samples: int
    method: str  # exact | monte-carlo | grid

    @classmethod
    def from_counts(cls, hits: int, total: int, method: str = "monte-carlo") -> "MeasureEstimate":
        q = hits / total
        return cls(q, Z95 * math.sqrt(q * (1 - q) / total), int(total), method)


def dist_to_int(z):
    z = np.asarray(z, dtype=float)
    return np.abs(z - np.round(z))


def dirichlet_search(y, N: float, p_min: int = 1) -> ApproximationResult:
    """Smallest p in [p_min, N+2] with max_i ||p y_i|| <= N^{-1/n}."""
    y = np.asarray(y, dtype=float)
    n = y.size
    delta = N ** (-1.0 / n)
    p_max = int(math.floor(N + 2))
    for lo in range(int(p_min), p_max + 1, 4096):
        p = np.arange(lo, min(lo + 4096, p_max + 1))
        err = dist_to_int(np.outer(p, y)).max(axis=1)
        ok = np.nonzero(err <= delta)[0]
        if ok.size:
            k = ok[0]
            return ApproximationResult(int(p[k]), float(err[k]), tuple(y.tolist()), float(N))
    if p_min <= 1:
        raise LemmaViolation(f"no p <= N+2 for y={y.tolist()}, N={N}")
    return ApproximationResult(None, 0.5, tuple(y.tolist()), float(N), found=False)


def first_witness(ys, N: float, p_min: int = 1) -> np.ndarray:
    """Vectorised search: smallest witness p per row of ys, or 0 if none."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    n = ys.shape[1]
    delta = N ** (-1.0 / n)
    out = np.zeros(ys.shape[0], dtype=np.int64)
    todo = np.arange(ys.shape[0])
    for p in range(int(p_min), int(math.floor(N + 2)) + 1):
        if todo.size == 0:
            break
        hit = dist_to_int(p * ys[todo]).max(axis=1) <= delta
        out[todo[hit]] = p
        todo = todo[~hit]
    return out


def measure_Ap(p: int, N: float, n: int) -> MeasureEstimate:
    """|{y in [0,1]^n : max ||p y_i|| <= N^{-1/n}}| = min(1, 2 N^{-1/n})^n."""
    if p < 1:
        raise ValueError("p >= 1 required")
    return MeasureEstimate(min(1.0, 2 * N ** (-1.0 / n)) ** n, 0.0, 0, "exact")


def crude_Ap_bound(p: int, N: float, n: int) -> float:
    """(p+1)^n (2/(N^{1/n} p))^n: p+1 boxes per axis of side 2/(N^{1/n} p)."""
    return (p + 1) ** n * (2 / (N ** (1.0 / n) * p)) ** n


def bad_union_bound(N: float, n: int) -> MeasureEstimate:
    """sum over 1 <= p <= 4^{-n-1} N of |A_p|; bounds the union of the A_p."""
    top = int(math.floor(4.0 ** (-n - 1) * N))
    if top < 1:
        raise ValueError("4^{-n-1} N >= 1 required")
    each = measure_Ap(1, N, n).value
    return MeasureEstimate(top * each, 0.0, 0, "exact")


def crude_union_bound(N: float, n: int) -> float:
    """The same union bounded with 4^n/N per p: at most 4^{-n-1} N 4^n/N = 1/4."""
    top = int(math.floor(4.0 ** (-n - 1) * N))
    return top * 4.0 ** n / N


def restricted_p_min(N: float, n: int) -> int:
    return int(math.ceil(4.0 ** (-n - 1) * N))


def measure_S(N: float, n: int, samples: int, rng: np.random.Generator) -> MeasureEstimate:
    """Fraction of uniform y in [0,1]^n with a witness p in [4^{-n-1}N, N+2]."""
    ys = rng.uniform(0.0, 1.0, size=(samples, n))
    hits = int(np.count_nonzero(first_witness(ys, N, restricted_p_min(N, n))))
    return MeasureEstimate.from_counts(hits, samples)


def smallest_good_N(n: int, candidates, samples: int, rng: np.random.Generator):
    """Smallest tested N from which on every tested N has measure_S >= 3/4 - 3 hw.

    Returns (N or None, {N: estimate}). No threshold is asserted beyond the
    values actually tested.
    """
    results = {float(N): measure_S(float(N), n, samples, rng) for N in sorted(candidates)}
    best = None
    for N in sorted(results, reverse=True):
        est = results[N]
        if est.value >= 0.75 - 3 * est.half_width:
            best = N
        else:
            break
    return best, results


def measure_S_grid(N: float, n: int, resolution: float = 1e-3) -> MeasureEstimate:
    """Midpoint-grid version of measure_S (small N only)."""
    k = int(round(1 / resolution))
    axis = (np.arange(k) + 0.5) / k
    ys = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    hits = int(np.count_nonzero(first_witness(ys, N, restricted_p_min(N, n))))
    return MeasureEstimate(hits / ys.shape[0], 0.0, ys.shape[0], "grid")


# ---------------------------------------------------------------------------
# X/T and the sets U, V, W, V0


@dataclass(frozen=True)
class QuotientSets:
    quotient: np.ndarray  # X/T
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    V0: np.ndarray


def _scan(xs: np.ndarray, params: ExperimentParams, js: np.ndarray, chunk: int = 2048) -> QuotientSets:
    n, m, R = params.n, params.m, params.R
    eps2 = params.eps2
    lo, hi = 4.0 ** (-n - 2), 2 * math.sqrt(n)
    h_t = params.time_spacing
    N = params.time_count_scale - 2
    delta0 = N ** (-1.0 / n)
    p0_lo, p0_hi = restricted_p_min(N, n), int(math.floor(N + 2))
    z = np.mod(m * xs, 1.0)  # {m x}: ||j m x|| = ||j {m x}|| for integer j
    norm_x = np.linalg.norm(xs, axis=1)
    B = xs.shape[0]
    res = {k: np.zeros(B, bool) for k in ("quotient", "U", "V", "W", "V0")}
    for a in range(0, js.size, chunk):
        j = js[a:a + chunk]
        err = dist_to_int(j[None, :, None] * z[:, None, :]).max(axis=2)  # (B, J)
        r = norm_x[:, None] * (j * h_t)[None, :]
        in_ann = (r > lo) & (r < hi)
        res["quotient"] |= np.any((err <= eps2 / m) & in_ann, axis=1)
        v_ok = err <= eps2 * j[None, :] * m / R
        res["V"] |= np.any(v_ok, axis=1)
        res["U"] |= np.any(v_ok & in_ann, axis=1)
        res["W"] |= np.any(v_ok & (r <= lo), axis=1)
        sel = (j >= p0_lo) & (j <= p0_hi)
        if sel.any():
            res["V0"] |= np.any(err[:, sel] <= delta0, axis=1)
    if p0_hi > js[-1]:
        extra = np.arange(js[-1] + 1, p0_hi + 1)
        err = dist_to_int(extra[None, :, None] * z[:, None, :]).max(axis=2)
        res["V0"] |= np.any(err <= delta0, axis=1)
    return QuotientSets(**res)


def quotient_sets(xs, params: ExperimentParams) -> QuotientSets:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    return _scan(xs, params, TimeGrid.from_params(params).indices)


def quotient_membership(x, params: ExperimentParams) -> bool:
    return bool(quotient_sets(x, params).quotient[0])


def quotient_report(params: ExperimentParams, samples: int, rng: np.random.Generator,
                    batch: int = 256) -> dict[str, MeasureEstimate]:
    """Monte Carlo measures of X/T ∩ [0,1]^n, U, V, W and V0."""
    n = params.n
    js = TimeGrid.from_params(params).indices
    counts = dict.fromkeys(("quotient", "U", "V", "W", "V0"), 0)
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        xs = rng.uniform(0.0, 1.0, size=(k, n))
        sets = _scan(xs, params, js)
        for key in counts:
            counts[key] += int(np.count_nonzero(getattr(sets, key)))
        done += k
    return {key: MeasureEstimate.from_counts(c, samples) for key, c in counts.items()}


def quotient_measure(params: ExperimentParams, samples: int, rng: np.random.Generator) -> MeasureEstimate:
    return quotient_report(params, samples, rng)["quotient"]


def threshold_identity(params: ExperimentParams) -> tuple[float, float, bool]:
    """eps2 p R^sigma / R >= N^{-1/n} at the smallest p = 4^{-n-1} R^{1-2sigma},
    N = R^{1-2sigma} - 2. Returns (lhs, rhs, holds)."""
    n, m, R = params.n, params.m, params.R
    scale = params.time_count_scale
    lhs = params.eps2 * 4.0 ** (-n - 1) * scale * m / R
    rhs = (scale - 2) ** (-1.0 / n)
    return lhs, rhs, lhs >= rhs


def fractional_uniformity(m: int, n: int, samples: int, rng: np.random.Generator,
                          bins: int = 100) -> tuple[float, ...]:
    """Chi-square p-values, one per axis, for {m x} with x uniform."""
    ys = np.mod(m * rng.uniform(0.0, 1.0, size=(samples, n)), 1.0)
    out = []
    for i in range(n):
        counts, _ = np.histogram(ys[:, i], bins=bins, range=(0.0, 1.0))
        out.append(float(stats.chisquare(counts).pvalue))
    return tuple(out)
