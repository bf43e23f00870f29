"""Univariate B-spline spaces over open knot vectors.

Basis functions are evaluated with the Cox-de Boor triangle. Evaluation at a
knot is right-continuous, except at the right end of the domain where the
last non-empty span is used (left-continuity).

Index conventions: for ``n_el`` elements and degree ``p`` there are
``p + n_el`` basis functions, and ``B_i`` is supported on the breakpoints
``[xi_{max(i-p, 0)}, xi_{min(i+1, n_el)}]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

UNIFORM_RTOL = 1e-10


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector of maximal continuity.

    Only the distinct breakpoints are stored; the end knots are repeated
    ``degree + 1`` times when the full knot sequence is requested.
    """

    degree: int
    breakpoints: np.ndarray = field(repr=False)

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float)
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if bp.ndim != 1 or len(bp) < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @classmethod
    def uniform(cls, degree: int, n_elements: int, a: float = 0.0, b: float = 1.0) -> KnotVector:
        if n_elements < 1:
            raise ValueError("n_elements must be positive")
        return cls(degree, np.linspace(a, b, n_elements + 1))

    @property
    def n_elements(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @cached_property
    def knots(self) -> np.ndarray:
        p = self.degree
        bp = self.breakpoints
        kv = np.concatenate([np.repeat(bp[0], p), bp, np.repeat(bp[-1], p)])
        kv.setflags(write=False)
        return kv

    @cached_property
    def is_uniform(self) -> bool:
        d = np.diff(self.breakpoints)
        return bool(np.all(np.abs(d - d[0]) <= UNIFORM_RTOL * abs(d[0])))

    @property
    def spacing(self) -> float:
        """Element size of a uniform knot vector."""
        if not self.is_uniform:
            raise ValueError("knot vector is not uniform")
        a, b = self.domain
        return (b - a) / self.n_elements

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.breakpoints, other.breakpoints)

    def __hash__(self):
        return hash((self.degree, self.breakpoints.tobytes()))


@dataclass(frozen=True)
class SplineSpace:
    knots: KnotVector

    @classmethod
    def uniform(cls, degree: int, n_elements: int, a: float = 0.0, b: float = 1.0) -> SplineSpace:
        return cls(KnotVector.uniform(degree, n_elements, a, b))

    @property
    def degree(self) -> int:
        return self.knots.degree

    @property
    def n_elements(self) -> int:
        return self.knots.n_elements

    @property
    def dim(self) -> int:
        return self.degree + self.n_elements

    @property
    def breakpoints(self) -> np.ndarray:
        return self.knots.breakpoints

    @property
    def domain(self) -> tuple[float, float]:
        return self.knots.domain

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.dim:
            raise IndexError(f"basis index {i} out of range [0, {self.dim})")

    def _check_points(self, x: np.ndarray) -> None:
        a, b = self.domain
        if np.any((x < a) | (x > b)) or np.any(np.isnan(x)):
            raise ValueError(f"evaluation point outside [{a}, {b}]")

    def find_span(self, x) -> np.ndarray:
        """Index of the last knot <= x, i.e. the knot span used at x."""
        x = np.asarray(x, dtype=float)
        t = self.knots.knots
        span = np.searchsorted(t, x, side="right") - 1
        return np.clip(span, self.degree, self.dim - 1)

    def find_element(self, x) -> np.ndarray:
        return self.find_span(x) - self.degree

    def eval_span(self, x, derivative: bool = False):
        """Nonzero basis values at each point.

        Returns ``(first, values)`` where ``values[k, r]`` is ``B_{first[k] + r}(x[k])``
        for ``r = 0..p``; with ``derivative=True`` also returns the matching
        first derivatives as a third item.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self._check_points(x)
        span = self.find_span(x)
        t = self.knots.knots
        return self._triangle(span, x, lambda k: t[k], derivative)

    def eval_local(self, element, u, derivative: bool = False):
        """Like :meth:`eval_span` at ``x = xi_e + u * (xi_{e+1} - xi_e)``, in element coordinates.

        Knots and the point are taken relative to the element's left end, so
        values keep full relative accuracy on fine meshes. For uniform knot
        vectors the local knot positions are exact multiples of the spacing.
        """
        u = np.atleast_1d(np.asarray(u, dtype=float))
        e = np.broadcast_to(np.asarray(element, dtype=int), u.shape)
        if np.any((e < 0) | (e >= self.n_elements)):
            raise ValueError("element index out of range")
        p, ne = self.degree, self.n_elements
        bp = self.breakpoints
        if self.knots.is_uniform:
            h = self.knots.spacing

            def local(k):
                return (np.clip(k - p, 0, ne) - e) * h

            width = h
        else:

            def local(k):
                return bp[np.clip(k - p, 0, ne)] - bp[e]

            width = bp[e + 1] - bp[e]
        return self._triangle(e + p, u * width, local, derivative)

    def _triangle(self, span, x, knot, derivative):
        """Cox-de Boor triangle; ``knot(k)`` gives knot k in the frame of ``x``."""
        p = self.degree
        n = len(x)
        N = np.zeros((n, p + 1))
        N[:, 0] = 1.0
        left = np.zeros((n, p + 1))
        right = np.zeros((n, p + 1))
        lower = None
        for j in range(1, p + 1):
            if j == p:
                lower = N[:, :p].copy()
            left[:, j] = x - knot(span + 1 - j)
            right[:, j] = knot(span + j) - x
            saved = np.zeros(n)
            for r in range(j):
                temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
                N[:, r] = saved + right[:, r + 1] * temp
                saved = left[:, j - r] * temp
            N[:, j] = saved
        first = span - p
        if not derivative:
            return first, N
        dN = np.zeros((n, p + 1))
        for r in range(p + 1):
            i = first + r
            if r >= 1:
                dN[:, r] += lower[:, r - 1] / (knot(i + p) - knot(i))
            if r <= p - 1:
                dN[:, r] -= lower[:, r] / (knot(i + p + 1) - knot(i + 1))
        dN *= p
        return first, N, dN

    def _pick(self, i: int, x, derivative: bool):
        self._check_index(i)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.eval_span(xs, derivative=derivative)
        first, vals = out[0], out[-1]
        r = i - first
        inside = (r >= 0) & (r <= self.degree)
        res = np.where(inside, vals[np.arange(len(xs)), np.clip(r, 0, self.degree)], 0.0)
        return float(res[0]) if np.ndim(x) == 0 else res

    def eval_basis(self, i: int, x):
        return self._pick(i, x, derivative=False)

    def eval_deriv(self, i: int, x):
        return self._pick(i, x, derivative=True)

    def basis_matrix(self, x, derivative: bool = False) -> np.ndarray:
        """Dense ``len(x) x dim`` matrix of basis values (or derivatives)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.eval_span(x, derivative=derivative)
        first, vals = out[0], out[-1]
        A = np.zeros((len(x), self.dim))
        rows = np.repeat(np.arange(len(x)), self.degree + 1)
        cols = (first[:, None] + np.arange(self.degree + 1)).ravel()
        A[rows, cols] = vals.ravel()
        return A

    def support_elements(self, i: int) -> tuple[int, int]:
        """Half-open range of element indices covered by supp(B_i)."""
        self._check_index(i)
        p = self.degree
        return max(i - p, 0), min(i + 1, self.n_elements)

    def support(self, i: int) -> tuple[float, float]:
        e0, e1 = self.support_elements(i)
        return float(self.breakpoints[e0]), float(self.breakpoints[e1])

    def interacting_indices(self, j: int) -> list[int]:
        self._check_index(j)
        p = self.degree
        return list(range(max(0, j - p), min(self.dim, j + p + 1)))

    def is_cardinal(self, j: int) -> bool:
        """True when B_j has simple knots only, i.e. is a shifted cardinal B-spline
        (on a uniform knot vector) untouched by the clamped ends."""
        self._check_index(j)
        return self.degree <= j <= self.n_elements - 1

    def interior_indices(self) -> list[int]:
        return list(range(self.degree, self.n_elements))


def eval_basis(space: SplineSpace, i: int, x):
    return space.eval_basis(i, x)


def eval_deriv(space: SplineSpace, i: int, x):
    return space.eval_deriv(i, x)


def support(space: SplineSpace, i: int) -> tuple[float, float]:
    return space.support(i)


def interacting_indices(space: SplineSpace, j: int) -> list[int]:
    return space.interacting_indices(j)


# Closed-form pieces of the cardinal B-spline on [0, p+1]; piece k lives on [k, k+1].
_CARDINAL_PIECES = {
    2: (
        Polynomial([0.0, 0.0, 0.5]),
        Polynomial([-1.5, 3.0, -1.0]),
        Polynomial([4.5, -3.0, 0.5]),
    ),
    3: (
        Polynomial([0.0, 0.0, 0.0, 1 / 6]),
        Polynomial([2 / 3, -2.0, 2.0, -0.5]),
        Polynomial([-22 / 3, 10.0, -4.0, 0.5]),
        Polynomial([32 / 3, -8.0, 2.0, -1 / 6]),
    ),
}


@dataclass(frozen=True)
class CardinalPatch:
    """Cardinal B-spline of degree 2 or 3 on the integer knots 0, 1, ..., p+1."""

    degree: int

    def __post_init__(self):
        if self.degree not in _CARDINAL_PIECES:
            raise ValueError(f"cardinal patch only for degree 2 or 3, got {self.degree}")

    @property
    def support(self) -> tuple[int, int]:
        return 0, self.degree + 1

    def pieces(self, derivative: int = 0) -> tuple[Polynomial, ...]:
        pcs = _CARDINAL_PIECES[self.degree]
        return tuple(pc.deriv(derivative) for pc in pcs) if derivative else pcs

    def piece(self, k: int, derivative: int = 0) -> Polynomial:
        """Polynomial piece on [k, k+1]; the zero polynomial outside the support."""
        if 0 <= k <= self.degree:
            return self.pieces(derivative)[k]
        return Polynomial([0.0])

    def _evaluate(self, x, derivative: int):
        x = np.asarray(x, dtype=float)
        p = self.degree
        k = np.floor(x).astype(int)
        # left-continuity at the right end of the support
        k = np.where(x == p + 1, p, k)
        out = np.zeros_like(x)
        for e, pc in enumerate(self.pieces(derivative)):
            mask = k == e
            out[mask] = pc(x[mask])
        return float(out) if out.ndim == 0 else out

    def __call__(self, x, shift: float = 0.0):
        return self._evaluate(np.asarray(x, dtype=float) - shift, 0)

    def deriv(self, x, shift: float = 0.0):
        return self._evaluate(np.asarray(x, dtype=float) - shift, 1)


def cardinal_space(degree: int) -> tuple[SplineSpace, int]:
    """Uniform unit-spacing space whose basis function ``j`` is the cardinal
    B-spline on ``[0, degree+1]`` and all its ``2p+1`` neighbours are unclamped."""
    p = degree
    space = SplineSpace(KnotVector(p, np.arange(-p, 2 * p + 2, dtype=float)))
    return space, 2 * p
