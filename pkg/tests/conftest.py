"""Shared helpers for building metric jets in tests."""

import numpy as np

from lcflat.geometry import MetricJet
from lcflat.wjet import Point, conj, jet_conj_var, jet_const, jet_var


def coordinate_jets(n, pt):
    zs = [jet_var(i + 1, pt[i], n) for i in range(n)]
    zbs = [jet_conj_var(i + 1, np.conj(pt[i]), n) for i in range(n)]
    return zs, zbs


def metric_from_fn(n, fn, pt):
    """MetricJet at `pt` from a callable fn(z_jets, zbar_jets) -> nested h list."""
    zs, zbs = coordinate_jets(n, pt)
    return MetricJet(n=n, h=fn(zs, zbs), point=Point(tuple(pt)))


def random_poly_metric_fn(n, rng, eps=0.08):
    """A reusable metric function h = I + eps*(perturbation), Hermitian by construction.

    Returns a closure pt -> MetricJet so the same metric can be evaluated at
    several points (needed for finite-difference checks across points).
    """
    coeffs = {}
    for i in range(n):
        for j in range(i, n):
            coeffs[(i, j)] = rng.standard_normal(6) + 1j * rng.standard_normal(6)

    def fn(z, zb):
        h = [[jet_const(1.0 if i == j else 0.0, n) for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(i, n):
                c = coeffs[(i, j)]
                p = (
                    c[0] * z[i] * zb[j]
                    + c[1] * z[0] * z[n - 1]
                    + c[2] * zb[0] * zb[n - 1]
                    + c[3] * z[i]
                    + c[4] * zb[j]
                    + c[5] * z[0] * zb[0]
                )
                if i == j:
                    h[i][j] = h[i][j] + eps * (p + conj(p))
                else:
                    h[i][j] = h[i][j] + eps * p
        for i in range(n):
            for j in range(i):
                h[i][j] = conj(h[j][i])
        return h

    return lambda pt: metric_from_fn(n, fn, pt)


def random_small_point(n, rng, scale=0.3):
    return tuple(scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))
