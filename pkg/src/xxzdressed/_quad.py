"""Composite Gauss-Legendre rules shared by the integration routines."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre


@lru_cache(maxsize=64)
def gauss_legendre(order):
    """Nodes and weights of the ``order``-point rule on [-1, 1]."""
    x, w = roots_legendre(int(order))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panels(a, b, width, order=20):
    """Composite rule on [a, b] with panels no wider than ``width``."""
    if b <= a:
        return np.empty(0), np.empty(0)
    m = max(1, int(np.ceil((b - a) / width)))
    edges = np.linspace(a, b, m + 1)
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_panels(a, b, width, scale, order=20):
    """Composite rule on [a, b] whose panels grow geometrically away from ``a``.

    The first panel has width ``scale`` (clipped to ``width``) and each
    following one doubles, up to ``width``. Used for integrands with a
    nearby singularity at the left end.
    """
    edges = [a]
    step = min(scale, width)
    while edges[-1] < b:
        edges.append(min(b, edges[-1] + step))
        step = min(2.0 * step, width)
    edges = np.asarray(edges)
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def adaptive_panels(a, b, sing_x=(), sing_d=(), order=20, wmax=1.0, factor=0.5):
    """Composite rule on [a, b] refined towards complex singularities.

    ``sing_x`` and ``sing_d`` give the real parts and distances from the real
    axis of the singularities of the integrand. Each panel is at most
    ``factor`` times the distance from its left edge to the nearest
    singularity, so every panel sees its singularities at a fixed relative
    distance and the Gauss-Legendre error stays uniform.
    """
    if b <= a:
        return np.empty(0), np.empty(0)
    sx = np.asarray(sing_x, dtype=float)
    sd = np.asarray(sing_d, dtype=float)
    edges = [a]
    while edges[-1] < b:
        e = edges[-1]
        step = wmax
        if sx.size:
            step = min(step, factor * float(np.min(np.hypot(e - sx, sd))))
            # do not step past a singularity's abscissa with a wide panel
            ahead = sx[(sx > e) & (sx < e + step)]
            if ahead.size:
                step = max(float(ahead.min()) - e, factor * float(np.min(sd)))
        edges.append(min(b, e + step))
    edges = np.asarray(edges)
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
