"""Smallness constants C, epsilon_1, epsilon_2, epsilon_3 derived from a profile.

Two tiers are produced side by side:

* rigorous: the literal inequalities of the bump-factor argument. They close
  only for R of order 32 pi C^2 ||theta||_1, far above desk scale, and that
  smallest admissible R is recorded as `r_min_rigorous`.
* empirical: epsilon_1 validated by evaluating the bump-factor integral
  directly, and epsilon_2 chosen against the aligned phase average.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np
from scipy import optimize, special

from . import pinned
from .errors import ConstantsInfeasible
from .profile import BumpProfile
from .propagator import evolved_cutoff, schrodinger_time


@dataclass(frozen=True)
class ValidationStep:
    eps1: float
    max_deviation: float
    max_error: float
    max_quadrature_error: float
    passed: bool


@dataclass(frozen=True)
class ProofConstants:
    n: int
    c_tail: float
    eps1_rigorous: float
    eps1_empirical: float
    eps1_operating: float
    eps2: float
    eps2_empirical: float
    eps3: float
    eps3_empirical: float
    r_min: float
    r_min_rigorous: float
    lemma4_deviation_operating: float
    validation_budget: int
    validation_log: tuple = field(default=(), repr=False)

    def eps(self, tier: str) -> tuple[float, float]:
        """(epsilon_1, epsilon_2) in force for the given tier."""
        if tier == "rigorous":
            return self.eps1_rigorous, self.eps2
        if tier == "empirical":
            return self.eps1_operating, self.eps2_empirical
        raise ValueError(f"unknown tier {tier!r}")

    def min_scale(self, tier: str) -> float:
        return self.r_min_rigorous if tier == "rigorous" else self.r_min

    def to_dict(self) -> dict:
        d = asdict(self)
        d["validation_log"] = [asdict(s) for s in self.validation_log]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProofConstants":
        d = dict(d)
        d["validation_log"] = tuple(ValidationStep(**s) for s in d.get("validation_log", ()))
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def aligned_average(n: int, z):
    """Average of exp(i z e.u) over the unit ball, u uniform; e a unit vector.

    2 J_1(z)/z for n = 2 and 3 j_1(z)/z for n = 3; in general
    Gamma(n/2+1) (2/z)^{n/2} J_{n/2}(z).
    """
    z = np.asarray(z, dtype=float)
    nu = n / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        val = math.gamma(nu + 1) * (2 / z) ** nu * special.jv(nu, z)
    return np.where(z == 0, 1.0, val)


def _first_zero(n: int) -> float:
    return float(optimize.brentq(lambda z: aligned_average(n, z), 2.0, 6.0))


def choose_c_tail(profile: BumpProfile, target: float = pinned.TAIL_TARGET) -> float:
    """Smallest tabulated radius with tail_mass below `target`."""
    edges = profile.tail_edges
    ok = np.nonzero(profile.tail_mass(edges) < target)[0]
    if ok.size == 0:
        raise ConstantsInfeasible("tail mass never drops below the target")
    return float(edges[ok[0]])


def rigorous_eps1(c_tail: float, l1: float, R: float) -> float:
    """Largest eps1 (shrunk by 1%) with 4 pi (C^2/R + 2 eps1 C) ||theta||_1 < 1/4."""
    slack = 1.0 / (16 * math.pi * l1) - c_tail ** 2 / R
    return 0.99 * slack / (2 * c_tail) if slack > 0 else 0.0


def admissible_triples(n: int, budget: int, rng: np.random.Generator, r_min: float,
                       r_span: float = 100.0):
    """Normalised bump-factor inputs: x in the plateau annulus, t in (0,1),
    a point v of the unit ball (xi' = eps1 R v) and R log-uniform in
    [r_min, r_span r_min]."""
    lo, hi = 4.0 ** (-n - 2), 2 * math.sqrt(n)
    r = rng.uniform(lo ** n, hi ** n, budget) ** (1 / n)
    e = rng.normal(size=(budget, n))
    e /= np.linalg.norm(e, axis=1)[:, None]
    x = r[:, None] * e
    t = rng.uniform(0.0, 1.0, budget)
    v = rng.normal(size=(budget, n))
    v /= np.linalg.norm(v, axis=1)[:, None]
    v *= rng.uniform(0, 1, budget)[:, None] ** (1 / n)
    R = np.exp(rng.uniform(math.log(r_min), math.log(r_min * r_span), budget))
    return x, t, v, R


def lemma4_sweep(profile: BumpProfile, eps1: float, triples, with_values: bool = False):
    """|value - 1|, certified error and Richardson change for each triple
    (and the complex values themselves when asked)."""
    x, t, v, R = triples
    # xi' = eps1 R v, so 2 t xi'/R = 2 t eps1 v independently of R
    y = np.linalg.norm(x - 2 * (t * eps1)[:, None] * v, axis=1)
    dev = np.empty(t.size)
    err = np.empty(t.size)
    qerr = np.empty(t.size)
    values = np.empty(t.size, dtype=complex)
    for i in range(t.size):
        val, q, tl = evolved_cutoff(profile, y[i], float(schrodinger_time(t[i], R[i])))
        values[i] = val[0]
        dev[i] = abs(val[0] - 1)
        err[i] = q[0] + tl[0]
        qerr[i] = q[0]
    if with_values:
        return dev, err, qerr, values
    return dev, err, qerr


def derive_constants(profile: BumpProfile, r_min: float, validation_budget: int = 1000,
                     seed: int = 0, strict: bool = False, bisection_steps: int = 14,
                     eps1_bracket: float = 4.0) -> ProofConstants:
    n = profile.n
    l1 = profile.l1_norm
    c_tail = choose_c_tail(profile)
    feasible_at = 16 * math.pi * c_tail ** 2 * l1
    if strict and (r_min < 10 * c_tail ** 2 or r_min <= feasible_at):
        raise ConstantsInfeasible(
            f"no eps1 > 0 at r_min={r_min:.3g}; needs R > {feasible_at:.3g} (C={c_tail:.1f})")
    r_min_rig = max(r_min, 2 * feasible_at)
    eps1_rig = rigorous_eps1(c_tail, l1, r_min_rig)

    rng = np.random.default_rng([seed, 4])
    triples = admissible_triples(n, validation_budget, rng, r_min)
    log = []

    def check(eps1):
        dev, err, qerr = lemma4_sweep(profile, eps1, triples)
        worst = float(np.max(dev + err))
        step = ValidationStep(float(eps1), float(dev.max()), float(err.max()), float(qerr.max()),
                              worst < pinned.BUMP_FACTOR_RADIUS)
        log.append(step)
        return step

    lo, hi = eps1_rig, eps1_bracket
    if not check(lo).passed:
        raise ConstantsInfeasible("bump-factor check fails already at the rigorous eps1")
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        if check(mid).passed:
            lo = mid
        else:
            hi = mid
    eps1_emp = lo
    eps1_op = pinned.OPERATING_FRACTION * eps1_emp
    delta2 = check(eps1_op).max_deviation + log[-1].max_error

    # eps2: worst-case aligned average at phase offset sqrt(n) eps1 eps2 cycles
    target = pinned.AMPLITUDE + pinned.ALIGN_MARGIN + delta2
    z0 = _first_zero(n)
    z = optimize.brentq(lambda z: aligned_average(n, z) - target, 1e-9, z0)
    eps2_emp = z / (2 * math.pi * math.sqrt(n) * eps1_op)

    # literal tier: |e^{2 pi i phi} - 1| <= 2 pi phi, phi <= sqrt(n) eps1 eps2
    phase_cap = min(0.01, 0.01 * l1)
    eps2_rig = min(pinned.EPS2_CAP, 0.99 * phase_cap / (2 * 2 * math.pi * math.sqrt(n) * eps1_rig))
    return ProofConstants(
        n=n, c_tail=c_tail,
        eps1_rigorous=eps1_rig, eps1_empirical=eps1_emp, eps1_operating=eps1_op,
        eps2=eps2_rig, eps2_empirical=eps2_emp,
        eps3=2 * math.pi * math.sqrt(n) * eps1_rig * eps2_rig,
        eps3_empirical=2 * math.pi * math.sqrt(n) * eps1_op * eps2_emp,
        r_min=float(r_min), r_min_rigorous=float(r_min_rig),
        lemma4_deviation_operating=float(delta2),
        validation_budget=int(validation_budget), validation_log=tuple(log))
