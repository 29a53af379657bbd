"""The divergence experiment: rows of the maximal-function ratio over a sweep in m."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from . import pinned
from .config import RunConfig, thread_cap
from .diophantine import MeasureEstimate, quotient_measure
from .errors import ExperimentInfeasible, LabError
from .lattice import (ExperimentParams, FrequencySet, SpatialPattern, TimeGrid, build_frequency_set,
                      build_params, u0_l2_norm)
from .profile import BumpProfile, build_cutoff, build_profile, profile_from_dict, profile_to_dict
from .proof_constants import ProofConstants, derive_constants
from .pseudoconformal import expsum_field, transform_amplitude, v0_l2_norm, witness

CSV_COLUMNS = ("m", "R", "omega_size", "u0_l2", "v0_l2", "maximal_l2_lower", "ratio",
               "witness_min_amp", "quotient_estimate", "quotient_hw", "seed")

WITNESS_STREAM = 1
QUOTIENT_STREAM = 2


# ---------------------------------------------------------------------------
# profile / constants with an optional on-disk cache


def load_or_build(n: int, r_min: float, validation_budget: int = 1000, seed: int = 0,
                  cache: str | Path | None = None) -> tuple[BumpProfile, ProofConstants]:
    key = _cache_key(n, r_min, validation_budget, seed)
    if cache is not None and Path(cache).exists():
        doc = json.loads(Path(cache).read_text())
        if doc.get("key") == key:
            return profile_from_dict(doc["profile"]), ProofConstants.from_dict(doc["constants"])
    profile = build_profile(build_cutoff(n))
    constants = derive_constants(profile, r_min, validation_budget, seed=seed)
    if cache is not None:
        save_cache(cache, profile, constants, seed)
    return profile, constants


def _cache_key(n, r_min, validation_budget, seed) -> dict:
    return {"n": int(n), "r_min": float(r_min), "validation_budget": int(validation_budget), "seed": int(seed)}


def save_cache(path, profile: BumpProfile, constants: ProofConstants, seed: int = 0) -> None:
    key = _cache_key(constants.n, constants.r_min, constants.validation_budget, seed)
    doc = {"key": key, "profile": profile_to_dict(profile), "constants": constants.to_dict()}
    try:
        Path(path).write_text(json.dumps(doc))
    except OSError as exc:
        raise LabError(f"cannot write profile cache {path}: {exc}") from None


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class WitnessDraws:
    """Scale-free witness coordinates, reused across the rows of a sweep."""

    point: np.ndarray  # uniform in the annulus of X
    offset: np.ndarray  # uniform in [-1, 1]^n, in units of the box radius
    time: np.ndarray  # uniform in the time interval of T

    @classmethod
    def draw(cls, n: int, size: int, rng: np.random.Generator) -> "WitnessDraws":
        lo, hi = 4.0 ** (-n - 2), 2 * math.sqrt(n)
        r = rng.uniform(lo ** n, hi ** n, size) ** (1 / n)
        e = rng.normal(size=(size, n))
        e /= np.linalg.norm(e, axis=1)[:, None]
        off = rng.uniform(-1.0, 1.0, size=(size, n))
        t = rng.uniform(4.0 ** (-n - 1), 1.0, size)
        return cls(r[:, None] * e, off, t)

    def realise(self, params: ExperimentParams) -> tuple[np.ndarray, np.ndarray]:
        """Points of X and times of T nearest to the scale-free draws."""
        pattern = SpatialPattern.from_params(params)
        grid = TimeGrid.from_params(params)
        centres = pattern.nearest_center(self.point) * pattern.center_spacing
        xs = centres + self.offset * pattern.box_radius
        keep = pattern.contains(xs)
        j = np.clip(np.round(self.time / grid.spacing).astype(np.int64), grid.indices[0], grid.indices[-1])
        return xs[keep], (j * grid.spacing)[keep]


@dataclass(frozen=True)
class WitnessSample:
    x_prime: tuple
    t_prime: float
    x: tuple
    t: float
    v_abs: float
    u_abs: float  # |v| t^{n/2} = |exp(i t'/(2 pi R) Delta) u0(x')|


def witness_samples(params: ExperimentParams, freq: FrequencySet, profile: BumpProfile,
                    draws: WitnessDraws) -> list[WitnessSample]:
    n = params.n
    u = expsum_field(freq, profile)
    out = []
    for xp, tp in zip(*draws.realise(params)):
        x, t = witness(xp, tp, params.R)
        v = abs(transform_amplitude(u, x, t))
        out.append(WitnessSample(tuple(map(float, xp)), float(tp), tuple(map(float, x)), float(t),
                                 float(v), float(v * t ** (n / 2))))
    return out


def maximal_lower_bound(params: ExperimentParams, freq: FrequencySet, profile: BumpProfile,
                        samples: int, rng: np.random.Generator,
                        quotient: MeasureEstimate | None = None, quotient_samples: int = 10000,
                        quotient_rng: np.random.Generator | None = None):
    """Lower bound for || sup_{0<t<=C_t R} |v| ||_{L2(B(0, C_x R))}.

    Every x = 2 pi R x'/t' with x' in X, t' in T has the witness time
    t = 2 pi R/t' <= C_t R where |v| = t^{-n/2}|u(x', t')| >= (C_t R)^{-n/2} A
    with A the smallest sampled |u(x', t')|. These x fill 2 pi R (X/T), whose
    part inside 2 pi R [0,1]^n (contained in B(0, C_x R)) has measure
    (2 pi R)^n |X/T ∩ [0,1]^n|.
    """
    n, R = params.n, params.R
    details = witness_samples(params, freq, profile, WitnessDraws.draw(n, samples, rng))
    if not details:
        raise ExperimentInfeasible("no witness sample landed in X")
    if quotient is None:
        quotient = quotient_measure(params, quotient_samples, quotient_rng or rng)
    a_min = min(d.u_abs for d in details)
    value = math.sqrt((2 * math.pi * R) ** n * quotient.value) * a_min / (pinned.time_cap(n) * R) ** (n / 2)
    return value, details, quotient, a_min


def maximal_constant(params: ExperimentParams, profile: BumpProfile) -> float:
    """The chain amplitude * sqrt(measure) * (2 pi / C_t)^{n/2} / (||theta||_2 sqrt(|Omega|/R^{sigma n})),
    with |Omega| >= vol_n eps1^n R^{sigma n}/2."""
    n = params.n
    omega_density = math.pi ** (n / 2) / math.gamma(n / 2 + 1) * params.eps1 ** n / 2
    return (pinned.AMPLITUDE * math.sqrt(pinned.QUOTIENT) * (2 * math.pi / pinned.time_cap(n)) ** (n / 2)
            * math.sqrt(omega_density) / profile.l2_norm)


# ---------------------------------------------------------------------------
# the sweep


@dataclass(frozen=True)
class DivergenceRow:
    m: int
    R: float
    omega_size: int
    u0_l2: float
    v0_l2: float
    maximal_l2_lower: float
    ratio: float
    witness_min_amp: float
    quotient_estimate: float
    quotient_hw: float
    seed: int
    error: str = ""

    def csv_values(self) -> list[str]:
        return [repr(v) if isinstance(v, float) else str(v) for v in
                (self.m, self.R, self.omega_size, self.u0_l2, self.v0_l2, self.maximal_l2_lower,
                 self.ratio, self.witness_min_amp, self.quotient_estimate, self.quotient_hw, self.seed)]


def compute_row(cfg: RunConfig, m: int, profile: BumpProfile, constants: ProofConstants) -> DivergenceRow:
    params = build_params(cfg.n, cfg.sigma, m, cfg.s, constants, cfg.eps_tier)
    freq = build_frequency_set(params)
    u0, _ = u0_l2_norm(freq, profile)
    v0 = v0_l2_norm(freq, profile)
    w_rng = np.random.default_rng([cfg.seed, WITNESS_STREAM])
    q_rng = np.random.default_rng([cfg.seed, QUOTIENT_STREAM, m])
    quotient = quotient_measure(params, cfg.samples.quotient, q_rng)
    value, _, quotient, a_min = maximal_lower_bound(params, freq, profile, cfg.samples.witness,
                                                    w_rng, quotient=quotient)
    ratio = value / (params.R ** cfg.s * v0)
    return DivergenceRow(m, params.R, len(freq), u0, v0, value, ratio, a_min,
                         quotient.value, quotient.half_width, cfg.seed)


def _row_job(args):
    cfg, m, prof_doc, const_doc = args
    profile = profile_from_dict(prof_doc)
    constants = ProofConstants.from_dict(const_doc)
    try:
        return compute_row(cfg, m, profile, constants)
    except LabError as exc:
        return _error_row(cfg, m, exc)


def _error_row(cfg, m, exc) -> DivergenceRow:
    nan = float("nan")
    R = float(m) ** (1 / cfg.sigma)
    return DivergenceRow(m, R, 0, nan, nan, nan, nan, nan, nan, nan, cfg.seed,
                         f"{type(exc).__name__}: {exc}")


def fit_slope(R, ratio) -> float:
    x, y = np.log(np.asarray(R)), np.log(np.asarray(ratio))
    return float(np.polyfit(x, y, 1)[0])


def divergence_sweep(cfg: RunConfig, profile: BumpProfile, constants: ProofConstants):
    workers = min(thread_cap(), len(cfg.sweep))
    if workers > 1:
        jobs = [(cfg, m, profile_to_dict(profile), constants.to_dict()) for m in cfg.sweep]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row_job, jobs))
    else:
        rows = []
        for m in cfg.sweep:
            try:
                rows.append(compute_row(cfg, m, profile, constants))
            except LabError as exc:
                rows.append(_error_row(cfg, m, exc))
    good = [r for r in rows if not r.error]
    summary = {"rows": len(rows), "failed_rows": len(rows) - len(good),
               "predicted_slope": cfg.sigma * cfg.n / 2 - cfg.s}
    if len(good) >= 2:
        ratios = [r.ratio for r in good]
        summary["slope"] = fit_slope([r.R for r in good], ratios)
        summary["monotone"] = bool(all(b > a for a, b in zip(ratios, ratios[1:])))
    return rows, summary


# ---------------------------------------------------------------------------
# reports


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_values())
    return buf.getvalue()


def git_blob_hash(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def report_emit(rows, summary: dict, cfg: RunConfig, profile: BumpProfile,
                constants: ProofConstants, outdir, fmt: str = "csv+json") -> list[Path]:
    outdir = Path(outdir)
    if not outdir.is_dir():
        raise LabError(f"output directory does not exist: {outdir}")
    text = rows_to_csv(rows)
    paths = []
    csv_path = outdir / "divergence.csv"
    try:
        csv_path.write_text(text)
        paths.append(csv_path)
        if "json" in fmt:
            doc = {"config": cfg.to_dict(), "profile_fingerprint": profile.fingerprint(),
                   "constants": {k: v for k, v in constants.to_dict().items() if k != "validation_log"},
                   "theta": {"cutoff": asdict(profile.cutoff), "l1_norm": profile.l1_norm,
                             "l2_norm": profile.l2_norm, "theta_at_zero": profile.theta_at_zero},
                   "box_geometry": "sup-norm",
                   "pinned": {"amplitude": pinned.AMPLITUDE, "quotient": pinned.QUOTIENT,
                              "C_t": pinned.time_cap(cfg.n), "C_x": pinned.space_cap(cfg.n),
                              "maximal_stated": pinned.MAXIMAL},
                   "rows": [asdict(r) for r in rows], "summary": summary,
                   "content_hash": git_blob_hash(text.encode())}
            json_path = outdir / "divergence.json"
            json_path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")
            paths.append(json_path)
    except OSError as exc:
        raise LabError(f"cannot write report under {outdir}: {exc}") from None
    return paths
