"""Acceptance suites, shared by the CLI and the test-suite.

Each suite returns a `SuiteResult`: a verdict, the numbers behind it and the
wall time. Parameters that define a check (sample counts, scales, seeds) are
fixed here, not read from a run config, so every caller tests the same thing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import json
import math
from pathlib import Path
import time

import numpy as np

from . import diophantine as dio
from .config import RunConfig
from .harness import divergence_sweep, load_or_build, maximal_constant, rows_to_csv, save_cache
from .lattice import SpatialPattern, TimeGrid, build_frequency_set, build_params, u0_l2_norm
from .profile import BumpProfile
from .proof_constants import ProofConstants, admissible_triples, derive_constants, lemma4_sweep
from .propagator import evolve_expsum, evolve_oracle, perturbed_sum_bound
from .pseudoconformal import (corrupted_transform, evolve_v0_direct, expsum_field, fit_spectral_constant,
                              pde_residual, spectral_constant, transform_amplitude, transformed_field,
                              v0_l2_norm, witness)
from . import pinned


@dataclass
class SuiteResult:
    criterion: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items() if not k.startswith("_"))
        return f"[{verdict}] criterion {self.criterion} ({self.name}, {self.seconds:.1f}s): {shown}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


# per-instance rows are (inputs, value, cert_err, bound, pass)
INSTANCE_COLUMNS = ("inputs", "value_re", "value_im", "cert_err", "bound", "pass")


def _inputs(**kw) -> str:
    parts = []
    for k, v in kw.items():
        if isinstance(v, (int, np.integer)):
            parts.append(f"{k}={int(v)}")
            continue
        v = np.asarray(v, dtype=float)
        parts.append(f"{k}=" + (repr(float(v)) if v.ndim == 0 else "[" + " ".join(repr(float(e)) for e in v) + "]"))
    return ";".join(parts)


def instance_csv_rows(result: SuiteResult):
    for inputs, value, err, bound, ok in result.metrics.get("_rows", ()):
        value = complex(value)
        yield inputs, value.real, value.imag, float(err), float(bound), bool(ok)


def _timed(criterion, name, fn, *args, **kw) -> SuiteResult:
    t0 = time.perf_counter()
    passed, metrics = fn(*args, **kw)
    return SuiteResult(criterion, name, bool(passed), metrics, time.perf_counter() - t0)


def toy_constants(constants: ProofConstants) -> ProofConstants:
    """The operating constants with the scale floor removed, for toy-size checks."""
    return replace(constants, r_min=1.0)


# ---------------------------------------------------------------------------
# 1. simultaneous Dirichlet approximation


def _dirichlet(samples: int = 10_000, seed: int = 101):
    rng = np.random.default_rng(seed)
    ok = 0
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, 4))
        N = float(rng.uniform(10, 1e4))
        y = rng.uniform(0, 1, n)
        res = dio.dirichlet_search(y, N)
        good = res.p is not None and res.p <= N + 2 and res.error <= N ** (-1 / n)
        ok += good
        worst = max(worst, res.error * N ** (1 / n))
    axis = np.linspace(0.0, 1.0, 101)
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    p = dio.first_witness(grid, 50.0)
    grid_ok = int(np.count_nonzero((p >= 1) & (p <= 52)))
    metrics = {"random_success": ok / samples, "worst_scaled_error": worst,
               "grid_points": grid.shape[0], "grid_success": grid_ok / grid.shape[0]}
    return ok == samples and grid_ok == grid.shape[0], metrics


def dirichlet_suite(**kw) -> SuiteResult:
    return _timed(1, "simultaneous Dirichlet approximation", _dirichlet, **kw)


# ---------------------------------------------------------------------------
# 2. the good set S has measure at least 3/4


def _measure_s(N: float = 1e4, samples: int = 100_000, seed: int = 102):
    n = 2
    rng = np.random.default_rng(seed)
    est = dio.measure_S(N, n, samples, rng)
    union = dio.bad_union_bound(N, n)
    crude = dio.crude_union_bound(N, n)
    ap_ok = 0
    for _ in range(100):
        NN = float(rng.uniform(10, 1e4))
        p = int(rng.integers(1, int(NN) + 3))
        ap_ok += dio.measure_Ap(p, NN, n).value <= dio.crude_Ap_bound(p, NN, n)
    passed = est.value >= 0.75 - 3 * est.half_width and union.value <= 0.25 and ap_ok == 100
    return passed, {"measure_S": est.value, "half_width": est.half_width, "bad_union": union.value,
                    "crude_union": crude, "Ap_exact_below_crude": f"{ap_ok}/100"}


def measure_s_suite(**kw) -> SuiteResult:
    return _timed(2, "measure of the good set", _measure_s, **kw)


# ---------------------------------------------------------------------------
# 3. the bump factor stays within 1/2 of 1


def _lemma4(profile: BumpProfile, r_min: float = 1e6, samples: int = 1000, seed: int = 103):
    constants = derive_constants(profile, r_min)
    eps1 = constants.eps("empirical")[0]
    triples = admissible_triples(profile.n, samples, np.random.default_rng(seed), r_min)
    dev, err, qerr, vals = lemma4_sweep(profile, eps1, triples, with_values=True)
    ok = (dev < pinned.BUMP_FACTOR_RADIUS) & (qerr < 1e-8)
    x, t, v, R = triples
    rows = [(_inputs(x=x[i], t=t[i], xi_prime=eps1 * R[i] * v[i], R=R[i]), vals[i], err[i],
             pinned.BUMP_FACTOR_RADIUS, ok[i]) for i in range(samples)]
    return bool(ok.all()), {"eps1": eps1, "max_deviation": float(dev.max()), "max_certified_error": float(err.max()),
                            "max_richardson_change": float(qerr.max()), "samples": samples, "_rows": rows}


def lemma4_suite(profile: BumpProfile, **kw) -> SuiteResult:
    return _timed(3, "bump factor near 1", _lemma4, profile, **kw)


# ---------------------------------------------------------------------------
# 4. perturbed sums


def _lemma5(samples: int = 10_000, seed: int = 104):
    rng = np.random.default_rng(seed)

    def disc(k, radius):
        r = radius * np.sqrt(rng.uniform(0, 1, k))
        return r * np.exp(2j * np.pi * rng.uniform(0, 1, k))

    holds = exact = exact_total = 0
    worst = 0.0
    rows = []
    for i in range(samples):
        k = int(rng.integers(1, 200))
        kind = i % 4  # 0: general, 1: delta1 = 0, 2: delta2 = 0, 3: both 0
        d1 = 0.0 if kind in (1, 3) else float(rng.uniform(0, 2))
        d2 = 0.0 if kind in (2, 3) else float(rng.uniform(0, 2))
        a = 1 + disc(k, d1)
        b = 1 + disc(k, d2)
        lhs, rhs = perturbed_sum_bound(a, b, d1, d2)
        ok = lhs <= rhs * (1 + 1e-12) + 1e-12 * k
        holds += ok
        worst = max(worst, lhs / rhs if rhs > 0 else 0.0)
        rows.append((_inputs(k=k, delta1=d1, delta2=d2), lhs, 0.0, rhs, ok))
        if kind:
            exact_total += 1
            other = b if kind == 1 else a
            ref = abs(complex(math.fsum(other.real), math.fsum(other.imag)) - k)
            exact += abs(lhs - ref) <= 1e-12 * max(1.0, k)
    passed = holds == samples and exact == exact_total
    return passed, {"holds": f"{holds}/{samples}", "worst_lhs_over_rhs": worst,
                    "degenerate_exact": f"{exact}/{exact_total}", "_rows": rows}


def lemma5_suite(**kw) -> SuiteResult:
    return _timed(4, "perturbed-sum inequality", _lemma5, **kw)


# ---------------------------------------------------------------------------
# 5. |exp(i t Delta) u0| >= 0.4 |Omega| on X x T


def _lower_bound(profile, constants, m: int = 20, samples: int = 200, oracle_points: int = 100,
                 seed: int = 105):
    params = build_params(2, 0.2, m, 0.15, constants)
    freq = build_frequency_set(params)
    rng = np.random.default_rng(seed)
    xs = SpatialPattern.from_params(params).sample(rng, samples)
    ts = rng.choice(TimeGrid.from_params(params).points, samples)
    res = [evolve_expsum(x, float(t), freq, params.R, profile) for x, t in zip(xs, ts)]
    amp = np.array([abs(r.value) for r in res]) / len(freq)
    agree = 0
    worst = 0.0
    for i in range(oracle_points):
        o = evolve_oracle(xs[i], float(ts[i]), freq, params.R, profile)
        gap = abs(o.value - res[i].value)
        allowed = o.total_error + res[i].total_error
        agree += gap <= allowed
        worst = max(worst, gap / allowed)
    passed = amp.min() >= pinned.AMPLITUDE and agree == oracle_points
    bound = pinned.AMPLITUDE * len(freq)
    rows = [(_inputs(x=xs[i], t=ts[i], m=m), r.value, r.total_error, bound, abs(r.value) >= bound)
            for i, r in enumerate(res)]
    return passed, {"omega_size": len(freq), "min_amp_over_omega": float(amp.min()),
                    "oracle_agreement": f"{agree}/{oracle_points}", "worst_gap_over_error": worst,
                    "_rows": rows}


def lower_bound_suite(profile, constants, **kw) -> SuiteResult:
    return _timed(5, "amplitude lower bound on X x T", _lower_bound, profile, constants, **kw)


# ---------------------------------------------------------------------------
# 6. norms of u0 and v0


def _norms(profile, constants, ms=(12, 16, 20)):
    n = profile.n
    cut_l2 = profile.cutoff.l2_norm()
    c_abs = abs(spectral_constant(n))
    metrics = {}
    passed = True
    for m in ms:
        params = build_params(n, 0.2, m, 0.15, constants)
        freq = build_frequency_set(params)
        k = len(freq)
        u0, _ = u0_l2_norm(freq, profile)
        spatial = math.sqrt(k) * cut_l2  # Plancherel on the space side; bumps are disjoint
        v0 = v0_l2_norm(freq, profile)
        nominal = math.sqrt(k) * profile.l2_norm
        rel = abs(v0 - c_abs * (4 * math.pi) ** (-n / 2) * u0) / u0
        ok = 0.9 <= u0 / nominal <= 1.1 and 0.9 <= spatial / nominal <= 1.1 and rel < 0.01
        passed &= ok
        metrics[f"m{m}_u0_over_nominal"] = u0 / nominal
        metrics[f"m{m}_spatial_over_nominal"] = spatial / nominal
        metrics[f"m{m}_v0_rel"] = rel
    return passed, metrics


def norms_suite(profile, constants, **kw) -> SuiteResult:
    return _timed(6, "norms of u0 and v0", _norms, profile, constants, **kw)


# ---------------------------------------------------------------------------
# 7. pseudoconformal transform


def toy_setup(profile, constants, m: int = 3):
    params = build_params(profile.n, 0.2, m, 0.1, toy_constants(constants))
    return params, build_frequency_set(params)


def convergence_order(residuals) -> float:
    return float(np.log2(residuals[0] / residuals[1]))


def _pseudoconformal(profile, constants, probes: int = 50, witnesses: int = 20, pde_points: int = 20,
                     seed: int = 107):
    params, freq = toy_setup(profile, constants)
    rng = np.random.default_rng(seed)
    sc = fit_spectral_constant(freq, params.R, profile, probes, rng)
    c_err = abs(sc.c_value - spectral_constant(profile.n)) / abs(spectral_constant(profile.n))

    u = expsum_field(freq, profile)
    xs = SpatialPattern.from_params(params).sample(rng, witnesses)
    ts = rng.choice(TimeGrid.from_params(params).points, witnesses)
    direct_rel = 0.0
    for xp, tp in zip(xs, ts):
        x, t = witness(xp, float(tp), params.R)
        a = transform_amplitude(u, x, t)
        b = evolve_v0_direct(x, t, freq, profile)
        direct_rel = max(direct_rel, abs(a - b) / abs(a))

    v = transformed_field(u)
    bad = corrupted_transform(u)
    u_orders, v_orders, bad_orders = [], [], []
    for _ in range(pde_points):
        x, s = rng.uniform(-2, 2, 2), rng.uniform(3e-3, 6e-3)
        # u varies on the scale 1/R^{1-sigma}, so its steps are much finer than v's
        u_orders.append(convergence_order([pde_residual(u, x, s, h, h / 500) for h in (4e-4, 2e-4)]))
        xv, tv = rng.uniform(-300, 300, 2), rng.uniform(500, 3000)
        v_orders.append(convergence_order([pde_residual(v, xv, tv, h) for h in (0.2, 0.1)]))
        rb = [pde_residual(bad, xv, tv, h) for h in (0.2, 0.1)]
        bad_orders.append(convergence_order(rb))
    ok_order = lambda o: all(1.6 <= x <= 2.4 for x in o)
    detected = all(x < 0.5 for x in bad_orders)
    passed = (sc.fit_residual < 1e-4 and direct_rel < 1e-4 and ok_order(u_orders)
              and ok_order(v_orders) and detected)
    return passed, {"fit_residual": sc.fit_residual, "fit_vs_closed_form": c_err,
                    "direct_max_rel": direct_rel, "u_order_min": min(u_orders), "u_order_max": max(u_orders),
                    "v_order_min": min(v_orders), "v_order_max": max(v_orders),
                    "control_order_max": max(bad_orders), "control_detected": detected}


def pseudoconformal_suite(profile, constants, **kw) -> SuiteResult:
    return _timed(7, "pseudoconformal transform", _pseudoconformal, profile, constants, **kw)


# ---------------------------------------------------------------------------
# 8. measure of X/T


def _quotient(constants, m: int = 20, samples: int = 10_000, uniform_samples: int = 100_000,
              seed: int = 108):
    params = build_params(2, 0.2, m, 0.15, constants)
    rng = np.random.default_rng(seed)
    rep = dio.quotient_report(params, samples, rng)
    pvals = dio.fractional_uniformity(m, 2, uniform_samples, rng)
    q, V, W = rep["quotient"], rep["V"], rep["W"]
    uniform = min(pvals) > 0.001
    passed = (q.value >= pinned.QUOTIENT - 3 * q.half_width and V.value >= 0.75 - 3 * V.half_width
              and W.value < 0.25 + 3 * W.half_width and uniform)
    metrics = {f"{k}": v.value for k, v in rep.items()}
    metrics.update({"quotient_hw": q.half_width, "uniformity_min_p": min(pvals)})
    return passed, metrics


def quotient_suite(constants, **kw) -> SuiteResult:
    return _timed(8, "measure of X/T", _quotient, constants, **kw)


# ---------------------------------------------------------------------------
# 9, 10. the divergence sweep


def headline_config(seed: int = 20240601) -> RunConfig:
    return RunConfig(n=2, sigma=0.2, s=0.15, sweep=(12, 16, 20, 24), seed=seed)


def _headline(profile, constants, cfg: RunConfig):
    rows, summary = divergence_sweep(cfg, profile, constants)
    slope = summary.get("slope", float("nan"))
    lo, hi = 0.5 * summary["predicted_slope"], 1.5 * summary["predicted_slope"]
    passed = summary["failed_rows"] == 0 and summary.get("monotone", False) and lo <= slope <= hi
    metrics = {"ratios": [float(f"{r.ratio:.6g}") for r in rows], "slope": slope,
               "slope_band": (round(lo, 6), round(hi, 6)), "monotone": summary.get("monotone", False)}
    floor = []
    for r in rows:
        if r.error:
            continue
        params = build_params(cfg.n, cfg.sigma, r.m, cfg.s, constants, cfg.eps_tier)
        floor.append((r.maximal_l2_lower / r.v0_l2) / (maximal_constant(params, profile) * r.R ** (cfg.sigma * cfg.n / 2)))
    if floor:
        metrics["min_over_chain_constant"] = min(floor)
    metrics["_csv"] = rows_to_csv(rows)
    return passed, metrics


def headline_suite(profile, constants, cfg: RunConfig | None = None) -> SuiteResult:
    return _timed(9, "divergence sweep", _headline, profile, constants, cfg or headline_config())


def _determinism(profile, constants, cfg: RunConfig, outdirs):
    """`lab run` twice on the same config file; the CSVs must match byte for byte."""
    from .cli import main  # the CLI imports this module

    work = Path(outdirs[0]).parent
    cache = work / "determinism-cache.json"
    save_cache(cache, profile, constants)
    cfg_path = work / "determinism.json"
    cfg_path.write_text(json.dumps(replace(cfg, profile_cache=str(cache)).to_dict()))
    texts, codes = [], []
    for d in outdirs:
        Path(d).mkdir(parents=True, exist_ok=True)
        codes.append(main(["run", str(cfg_path), "--output", str(d)]))
        texts.append((Path(d) / "divergence.csv").read_bytes())
    same = texts[0] == texts[1]
    return same, {"identical": same, "bytes": len(texts[0]), "exit_codes": codes}


def determinism_suite(profile, constants, outdirs, cfg: RunConfig | None = None) -> SuiteResult:
    return _timed(10, "byte-identical reruns", _determinism, profile, constants,
                  cfg or headline_config(), outdirs)


# ---------------------------------------------------------------------------


def shared_inputs(cfg: RunConfig | None = None, cache=None):
    cfg = cfg or headline_config()
    return load_or_build(cfg.n, cfg.resolved_r_min, cfg.validation_budget, cache=cache)


def run_all(outdir, cache=None, only=None, report=print) -> list[SuiteResult]:
    """Every criterion in order; `only` restricts to a set of criterion numbers."""
    profile, constants = shared_inputs(cache=cache)
    wanted = set(only or range(1, 11))
    steps = {
        1: lambda: dirichlet_suite(),
        2: lambda: measure_s_suite(),
        3: lambda: lemma4_suite(profile),
        4: lambda: lemma5_suite(),
        5: lambda: lower_bound_suite(profile, constants),
        6: lambda: norms_suite(profile, constants),
        7: lambda: pseudoconformal_suite(profile, constants),
        8: lambda: quotient_suite(constants),
    }
    results = []
    for k in sorted(wanted & steps.keys()):
        results.append(steps[k]())
        report(results[-1].line())
    if 9 in wanted:
        results.append(headline_suite(profile, constants))
        report(results[-1].line())
    if 10 in wanted:
        outdir = Path(outdir)
        results.append(determinism_suite(profile, constants, [outdir / "run-a", outdir / "run-b"]))
        report(results[-1].line())
    return results
