"""
Gauss-Legendre rules and the standard smooth bump used by the weak-form
checks.
"""
from functools import lru_cache

import numpy as np

# below this value of 1-u^2 the bump underflows to exactly 0
_FLAT = 1e-3


@lru_cache(maxsize=None)
def gauss_legendre(order):
    """
    Nodes and weights on [-1, 1]; exact for polynomials up to degree
    2*order-1.
    """
    if order < 1:
        raise ValueError("quadrature order must be positive, got %d" % order)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def composite_nodes(a, b, order):
    """
    Map the order-point rule onto each interval [a_k, b_k].

    a and b are 1-d arrays of equal length; returns (nodes, weights) of shape
    (len(a), order).
    """
    x, w = gauss_legendre(order)
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[:, None]
    half = 0.5 * (b - a)
    return a + half * (x[None, :] + 1.0), half * w[None, :]


def integrate(f, a, b, order):
    """
    Integrate f over [a, b] with a single Gauss-Legendre panel
    """
    nodes, weights = composite_nodes([a], [b], order)
    return float(np.sum(weights * f(nodes)))


def bump(u):
    """
    B(u) = exp(1 - 1/(1-u^2)) on |u| < 1, 0 elsewhere; B(0) = 1.
    """
    u = np.asarray(u, dtype=float)
    w = 1.0 - u * u
    inside = w > _FLAT
    safe = np.where(inside, w, 1.0)
    return np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)


def bump_derivative(u):
    u = np.asarray(u, dtype=float)
    w = 1.0 - u * u
    inside = w > _FLAT
    safe = np.where(inside, w, 1.0)
    return np.where(inside,
                    np.exp(1.0 - 1.0 / safe) * (-2.0 * u / (safe * safe)),
                    0.0)
