"""Numeric stand-ins for every "≳" / "≲" used by the acceptance checks.

Each constant carries the arithmetic that produced it.
"""

from __future__ import annotations

import math

# |exp(i t/(2 pi R) Delta) u0(x)| >= AMPLITUDE * |Omega| on X x T.
# The perturbed-sum bound with delta1 = 1/100 (phase) and delta2 = 1/2 (bump factor) leaves
# |sum - |Omega|| <= (0.01*1.5 + 0.5*1.01 + 0.005)|Omega| = 0.525|Omega|,
# i.e. |sum| >= 0.475|Omega|; 0.4 keeps room for quadrature error.
AMPLITUDE = 0.4

# |X/T ∩ [0,1]^n| >= QUOTIENT.
QUOTIENT = 0.5

# Maximal-function lower bound / ||v0||_2 against R^{sigma n/2}. The nominal
# constant is 0.1. Composing the pieces it is built from,
#   amplitude 0.4, measure 1/2, |v| >= (C_t R)^{-n/2} |u|,
#   |Y| = (2 pi R)^n |X/T|, ||v0||_2 = |Omega|^{1/2} ||theta||_2,
#   |Omega| >= vol_n eps1^n R^{sigma n} / 2,
# gives 0.4 sqrt(1/2) (2 pi / C_t)^{n/2} sqrt(vol_n eps1^n / 2) / ||theta||_2,
# about 3.4e-4 at n = 2 with the operating eps1. The checks use that value
# (harness.maximal_constant); 0.1 is only reported next to it.
MAXIMAL = 0.1

# Acceptance radius of the bump factor around 1.
BUMP_FACTOR_RADIUS = 0.5

# The tail term enters the bump-factor estimate twice: 2*tail + 1/4 < 1/2
# needs tail < 1/8.
TAIL_TARGET = 0.125

# Operating epsilon_1 as a fraction of the largest validated one. At the
# validated edge some bump factors are already ~1/2 away from 1, which
# leaves no phase budget for epsilon_2.
OPERATING_FRACTION = 0.5

# epsilon_2 is set so that the worst-case aligned phase average A over the
# frequency ball satisfies A - max|b-1| >= AMPLITUDE + ALIGN_MARGIN, since
# |sum a b| >= |sum a| - sum |b - 1| >= |Omega|(A - max|b-1|).
# The margin covers the lattice-vs-ball discrepancy at small m.
ALIGN_MARGIN = 0.1

# Cap on the literal-tier epsilon_2. With the literal epsilon_1 (~1e-6) the
# phase inequality alone would allow epsilon_2 in the hundreds.
EPS2_CAP = 0.25


def time_cap(n: int) -> float:
    """C_t: witnesses are t = 2 pi R / t' with t' > 4^{-n-1}, so t < 2 pi 4^{n+1} R."""
    return 2 * math.pi * 4.0 ** (n + 1)


def space_cap(n: int) -> float:
    """C_x: witnesses are x = 2 pi R x'/t' with |x'| < 2 sqrt(n), t' > 4^{-n-1}."""
    return time_cap(n) * 2 * math.sqrt(n)
