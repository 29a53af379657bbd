"""Small quadrature and special-function helpers shared across modules."""

from __future__ import annotations

from functools import lru_cache
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special


@lru_cache(maxsize=64)
def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    return x, w


def gl_panels(edges, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights over consecutive `edges`."""
    edges = np.asarray(edges, dtype=float)
    x, w = _gl(order)
    a = edges[:-1, None]
    h = (edges[1:] - edges[:-1])[:, None]
    nodes = a + 0.5 * h * (x[None, :] + 1.0)
    weights = 0.5 * h * w[None, :]
    return nodes.ravel(), weights.ravel()


def gl_uniform(a: float, b: float, panels: int, order: int = 16):
    return gl_panels(np.linspace(a, b, int(panels) + 1), order)


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1}."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def sphere_average(n: int, z) -> np.ndarray:
    """Integral of exp(i z w_1) over the unit sphere S^{n-1}.

    Equals (2 pi)^{n/2} z^{1-n/2} J_{n/2-1}(z); real and even in z.
    """
    z = np.abs(np.asarray(z, dtype=float))
    if n == 2:
        return 2.0 * np.pi * special.j0(z)
    if n == 3:
        return 4.0 * np.pi * np.sinc(z / np.pi)
    out = np.empty_like(z)
    small = z < 1e-8
    zs = z[~small]
    nu = n / 2 - 1
    out[~small] = (2 * np.pi) ** (n / 2) * zs ** (-nu) * special.jv(nu, zs)
    out[small] = sphere_area(n)
    return out


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def compensated_sum(values) -> complex | float:
    """Correctly rounded sum, so the result does not depend on term order."""
    vals = np.asarray(values).ravel()
    if np.iscomplexobj(vals):
        return complex(math.fsum(vals.real), math.fsum(vals.imag))
    return math.fsum(vals)
