"""Exact integration of spline products by element-wise Gauss-Legendre.

This is the independent ground truth for rule residuals and assembled
matrices. It only relies on basis evaluation from :mod:`spline_core` and the
embedded Gauss-Legendre tables, never on the weighted rules.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.sparse as sps

from ._gauss_tables import GAUSS_LEGENDRE_01
from .spline_core import SplineSpace

MAX_POINTS = max(GAUSS_LEGENDRE_01)


class GaussLegendreTable:
    """m-point Gauss-Legendre rule on [0, 1]."""

    def __init__(self, m: int):
        if m not in GAUSS_LEGENDRE_01:
            raise ValueError(f"no embedded Gauss-Legendre table for m={m} (max {MAX_POINTS})")
        nodes, weights = GAUSS_LEGENDRE_01[m]
        self.m = m
        self.nodes = np.array(nodes)
        self.weights = np.array(weights)

    def on(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights mapped to the interval [a, b]."""
        return a + (b - a) * self.nodes, (b - a) * self.weights

    def iterated(self, breakpoints) -> tuple[np.ndarray, np.ndarray]:
        """Composite rule over consecutive breakpoints."""
        bp = np.asarray(breakpoints, dtype=float)
        h = np.diff(bp)
        x = bp[:-1, None] + h[:, None] * self.nodes[None, :]
        w = h[:, None] * self.weights[None, :]
        return x.ravel(), w.ravel()


def verify_tables(tol: float = 1e-15) -> None:
    """Check every embedded table against monomial integrals of degree <= 2m-1."""
    for m in GAUSS_LEGENDRE_01:
        g = GaussLegendreTable(m)
        if np.any(g.weights <= 0) or np.any(g.nodes <= 0) or np.any(g.nodes >= 1):
            raise RuntimeError(f"Gauss-Legendre table m={m} has invalid nodes or weights")
        if np.max(np.abs(g.nodes + g.nodes[::-1] - 1)) > tol:
            raise RuntimeError(f"Gauss-Legendre table m={m} is not symmetric")
        for k in range(2 * m):
            err = abs(g.weights @ g.nodes**k - 1.0 / (k + 1))
            if err > 4 * tol:
                raise RuntimeError(f"Gauss-Legendre table m={m} fails on x^{k}: error {err:.3e}")


verify_tables()


def _overlap_elements(space: SplineSpace, i: int, j: int) -> tuple[int, int]:
    a0, a1 = space.support_elements(i)
    b0, b1 = space.support_elements(j)
    return max(a0, b0), min(a1, b1)


def _product_integral(space: SplineSpace, i: int, j: int, derivative: bool, m: int | None) -> float:
    e0, e1 = _overlap_elements(space, i, j)
    if e1 <= e0:
        return 0.0
    g = GaussLegendreTable(space.degree + 1 if m is None else m)
    elements = np.repeat(np.arange(e0, e1), g.m)
    u = np.tile(g.nodes, e1 - e0)
    out = space.eval_local(elements, u, derivative=derivative)
    vals = out[-1]
    rows = np.arange(len(u))
    # on element e the nonzero functions are e .. e+p
    fi = vals[rows, i - elements]
    fj = vals[rows, j - elements]
    width = np.diff(space.breakpoints)[elements]
    if space.knots.is_uniform:
        width = np.full(len(u), space.knots.spacing)
    return float(np.sum(width * np.tile(g.weights, e1 - e0) * fi * fj))


def exact_mass_entry(space: SplineSpace, i: int, j: int, m: int | None = None) -> float:
    """Integral of B_i * B_j; exact with the default ``m = p + 1`` points per element."""
    if i > j:
        i, j = j, i
    return _product_integral(space, i, j, derivative=False, m=m)


def exact_stiffness_entry(space: SplineSpace, i: int, j: int, m: int | None = None) -> float:
    """Integral of B_i' * B_j'."""
    if i > j:
        i, j = j, i
    return _product_integral(space, i, j, derivative=True, m=m)


def exact_moment_vector(space: SplineSpace, j: int, kind: str) -> np.ndarray:
    """Right-hand side of the exactness system for weight ``j``: one integral per
    interacting index, ordered as ``space.interacting_indices(j)``."""
    entry = _entry_function(kind)
    return np.array([entry(space, i, j) for i in space.interacting_indices(j)])


def _entry_function(kind: str):
    if kind == "mass":
        return exact_mass_entry
    if kind == "stiffness":
        return exact_stiffness_entry
    raise ValueError(f"kind must be 'mass' or 'stiffness', got {kind!r}")


def oracle_matrix_1d(space: SplineSpace, kind: str, m: int | None = None) -> sps.csr_matrix:
    """Banded 1D matrix built entry by entry from the oracle (upper triangle, mirrored)."""
    entry = _entry_function(kind)
    n, p = space.dim, space.degree
    rows, cols, vals = [], [], []
    for j in range(n):
        for i in range(j, min(n, j + p + 1)):
            v = entry(space, i, j, m)
            rows.append(i)
            cols.append(j)
            vals.append(v)
            if i != j:
                rows.append(j)
                cols.append(i)
                vals.append(v)
    return sps.csr_matrix((vals, (rows, cols)), shape=(n, n))


def oracle_matrix(spaces, kind: str, scales=None) -> sps.csr_matrix:
    """Tensor-product oracle matrix for a diagonal affine map with the given scales.

    Mass is the Kronecker product of 1D mass matrices; stiffness is the sum over
    directions of the 1D stiffness factor in that direction times mass factors
    in the others, each term scaled by ``det J / s_k**2``.
    """
    spaces = list(spaces)
    d = len(spaces)
    scales = np.ones(d) if scales is None else np.asarray(scales, dtype=float)
    detJ = float(np.prod(scales))
    masses = [oracle_matrix_1d(s, "mass") for s in spaces]
    if kind == "mass":
        out = masses[0]
        for M in masses[1:]:
            out = sps.kron(out, M, format="csr")
        return (detJ * out).tocsr()
    if kind != "stiffness":
        raise ValueError(f"kind must be 'mass' or 'stiffness', got {kind!r}")
    stiffs = [oracle_matrix_1d(s, "stiffness") for s in spaces]
    total = None
    for k in range(d):
        term = stiffs[0] if k == 0 else masses[0]
        for l in range(1, d):
            term = sps.kron(term, stiffs[l] if l == k else masses[l], format="csr")
        term = term * (detJ / scales[k] ** 2)
        total = term if total is None else total + term
    return total.tocsr()


# Cardinal moments as exact rationals, offsets -p..p relative to the weight index.
CARDINAL_MOMENTS = {
    ("mass", 2): tuple(Fraction(*f) for f in [(1, 120), (13, 60), (11, 20), (13, 60), (1, 120)]),
    ("mass", 3): tuple(
        Fraction(*f)
        for f in [(1, 5040), (1, 42), (397, 1680), (151, 315), (397, 1680), (1, 42), (1, 5040)]
    ),
    ("stiffness", 2): tuple(Fraction(*f) for f in [(-1, 6), (-1, 3), (1, 1), (-1, 3), (-1, 6)]),
    ("stiffness", 3): tuple(
        Fraction(*f) for f in [(-1, 120), (-1, 5), (-1, 8), (2, 3), (-1, 8), (-1, 5), (-1, 120)]
    ),
}
