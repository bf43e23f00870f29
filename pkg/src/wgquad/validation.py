"""Eigenvalue and Poisson studies on the unit box with homogeneous Dirichlet data.

Dirichlet conditions are imposed by deleting the boundary functions (the
open knot vectors make them interpolatory). Generalized eigenproblems are
solved densely, which caps the number of unknowns.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import (
    AffineMap,
    TensorSpace,
    assemble,
    assemble_load,
    max_entry_difference,
)
from .exact_oracle import GaussLegendreTable
from .formatting import dumps, write_csv, write_json

DENSE_CAP = 5000
RATE_WINDOW = 3
CONVENTIONS = {
    "domain": "unit box [0,1]^d",
    "boundary": "homogeneous Dirichlet, boundary functions removed",
    "eigen_error": "relative |lambda_h - lambda| / lambda",
}


def exact_laplace_eigenvalues(d: int, count: int) -> np.ndarray:
    """Smallest ``count`` Dirichlet Laplace eigenvalues of the unit box, with multiplicity."""
    if count < 1:
        return np.zeros(0)
    K = max(2, math.ceil(count ** (1 / d)) + 1)
    while True:
        vals = sorted(sum(m * m for m in ms) for ms in itertools.product(range(1, K + 1), repeat=d))
        # any multi-index left out has a component >= K+1
        if len(vals) >= count and vals[count - 1] <= (K + 1) ** 2 + (d - 1):
            return math.pi**2 * np.array(vals[:count], dtype=float)
        K *= 2


def dirichlet_reduce(A: sps.spmatrix, space: TensorSpace) -> sps.csr_matrix:
    keep = np.setdiff1d(np.arange(space.n_dof), space.boundary_dofs())
    A = A.tocsr()
    return A[keep][:, keep]


def interior_dofs(space: TensorSpace) -> np.ndarray:
    return np.setdiff1d(np.arange(space.n_dof), space.boundary_dofs())


def solve_generalized_eig(K, M, count: int | None = None, cap: int = DENSE_CAP) -> np.ndarray:
    """Smallest ``count`` eigenvalues of ``K x = lambda M x`` (dense, ascending)."""
    n = K.shape[0]
    if n > cap:
        raise ValueError(f"dense eigensolve capped at {cap} unknowns, got {n}")
    Kd = K.toarray() if sps.issparse(K) else np.asarray(K, dtype=float)
    Md = M.toarray() if sps.issparse(M) else np.asarray(M, dtype=float)
    try:
        sla.cholesky(Md, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("mass matrix is not positive definite") from exc
    count = n if count is None else min(count, n)
    return sla.eigh(Kd, Md, eigvals_only=True, subset_by_index=[0, count - 1])


def fit_rate(h, errors, window: int = RATE_WINDOW) -> tuple[float, float]:
    """Least-squares slope of log(error) against log(h) over the last ``window`` meshes,
    and the max residual of that fit."""
    h = np.asarray(h, dtype=float)[-window:]
    e = np.asarray(errors, dtype=float)[-window:]
    A = np.vstack([np.log(h), np.ones_like(h)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(e), rcond=None)
    resid = np.log(e) - A @ coef
    return float(coef[0]), float(np.max(np.abs(resid)))


def is_monotone_decay(errors, floor: float = 1e-13) -> bool:
    """Strictly decreasing, except that one step may stall once errors reach ``floor``."""
    e = np.asarray(errors, dtype=float)
    bad = [k for k in range(1, len(e)) if not e[k] < e[k - 1]]
    if not bad:
        return True
    return len(bad) == 1 and e[bad[0] - 1] <= floor


@dataclass
class ConvergenceReport:
    study: str
    d: int
    p: int
    strategy: str
    meshes: list
    h: list
    errors: list
    rate: float
    rate_residual: float
    expected_rate: float
    tolerance: float
    passed: bool
    eigen_index: int | None = None
    monotone: bool | None = None
    metadata: dict = field(default_factory=lambda: dict(CONVENTIONS))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def write(self, json_path=None, csv_path=None) -> None:
        if json_path:
            write_json(json_path, self.to_dict())
        if csv_path:
            write_csv(csv_path, ["h", "error"], zip(self.h, self.errors))


def _assemble_pair(space: TensorSpace, strategy: str, workers: int = 1):
    K = assemble(space, "stiffness", strategy, workers=workers)
    M = assemble(space, "mass", strategy, workers=workers)
    return K, M


def discrete_eigenvalues(d: int, p: int, n: int, count: int, strategy: str = "gauss-weighted",
                         workers: int = 1) -> np.ndarray:
    space = TensorSpace.uniform(p, n, d)
    K, M = _assemble_pair(space, strategy, workers)
    return solve_generalized_eig(dirichlet_reduce(K, space), dirichlet_reduce(M, space), count)


@dataclass
class EigenStudy:
    d: int
    p: int
    eigen_index: int
    meshes: list
    strategy: str = "gauss-weighted"

    def errors(self) -> np.ndarray:
        lam = exact_laplace_eigenvalues(self.d, self.eigen_index)[-1]
        out = []
        for n in self.meshes:
            lh = discrete_eigenvalues(self.d, self.p, n, self.eigen_index, self.strategy)[-1]
            out.append(abs(lh - lam) / lam)
        return np.array(out)


def default_rate_tolerance(p: int) -> float:
    return 0.3 if p == 2 else 0.4


def run_eigen_convergence(d: int, p: int, eigen_index: int, meshes, strategy: str = "gauss-weighted",
                          tolerance: float | None = None, min_rate: float | None = None) -> ConvergenceReport:
    """Relative error of the ``eigen_index``-th eigenvalue (1-based) over a mesh sequence.

    Passing means the fitted rate is within ``tolerance`` of 2p, or, when
    ``min_rate`` is given, that the errors decay monotonically and the rate is
    at least ``min_rate``.
    """
    meshes = [int(n) for n in meshes]
    if any(b <= a for a, b in zip(meshes, meshes[1:])):
        raise ValueError("meshes must be increasing")
    study = EigenStudy(d, p, eigen_index, meshes, strategy)
    err = study.errors()
    h = [1.0 / n for n in meshes]
    rate, res = fit_rate(h, err)
    tol = default_rate_tolerance(p) if tolerance is None else tolerance
    mono = is_monotone_decay(err)
    if min_rate is None:
        passed = abs(rate - 2 * p) <= tol
    else:
        passed = mono and rate >= min_rate
    return ConvergenceReport("eig-convergence", d, p, strategy, meshes, h, err.tolist(), rate, res,
                             2.0 * p, tol, bool(passed), eigen_index, mono)


@dataclass
class SpectrumComparison:
    p: int
    mesh: int
    k_over_n: np.ndarray
    error_weighted: np.ndarray
    error_gauss: np.ndarray
    matrix_difference: dict

    @property
    def max_curve_difference(self) -> float:
        return float(np.max(np.abs(self.error_weighted - self.error_gauss)))

    def write_csv(self, path) -> None:
        write_csv(path, ["k_over_N", "rel_error_weighted", "rel_error_gauss"],
                  zip(self.k_over_n, self.error_weighted, self.error_gauss))

    def summary(self) -> dict:
        return {
            "p": self.p,
            "mesh": self.mesh,
            "n_eigenvalues": len(self.k_over_n),
            "max_curve_difference": self.max_curve_difference,
            "matrix_difference": self.matrix_difference,
            **CONVENTIONS,
        }


def run_spectrum_comparison(p: int, mesh: int, d: int = 1, strategy: str = "gauss-weighted",
                            max_mesh: int = 1200) -> SpectrumComparison:
    """All discrete eigenvalues of the 1D problem with weighted and standard Gauss matrices."""
    if d != 1:
        raise ValueError("spectrum comparison is one-dimensional")
    if mesh > max_mesh:
        raise ValueError(f"mesh capped at {max_mesh} elements")
    space = TensorSpace.uniform(p, mesh, 1)
    Kw, Mw = _assemble_pair(space, strategy)
    Kg, Mg = _assemble_pair(space, "standard")
    diffs = {"stiffness": max_entry_difference(Kw, Kg), "mass": max_entry_difference(Mw, Mg)}
    lw = solve_generalized_eig(dirichlet_reduce(Kw, space), dirichlet_reduce(Mw, space))
    lg = solve_generalized_eig(dirichlet_reduce(Kg, space), dirichlet_reduce(Mg, space))
    exact = exact_laplace_eigenvalues(1, len(lw))
    k = np.arange(1, len(lw) + 1)
    return SpectrumComparison(p, mesh, k / mesh, np.abs(lw - exact) / exact,
                              np.abs(lg - exact) / exact, diffs)


MANUFACTURED = {
    "sines": "u = prod_k sin(pi x_k), f = d pi^2 u",
    "zero": "u = 0, f = 0",
}


def _manufactured(name: str, d: int):
    if name == "sines":
        def u(x):
            return np.prod(np.sin(np.pi * x), axis=1)

        def f(x):
            return d * np.pi**2 * u(x)

        return u, f
    if name == "zero":
        def zero(x):
            return np.zeros(len(x))

        return zero, zero
    raise ValueError(f"unknown manufactured solution {name!r}; known: {sorted(MANUFACTURED)}")


def _gauss_grid(space, m):
    """Per direction: (basis matrix at Gauss points, points, weights) with m points per element."""
    out = []
    g = GaussLegendreTable(m)
    for s in space.spaces:
        ne = s.n_elements
        el = np.repeat(np.arange(ne), m)
        u = np.tile(g.nodes, ne)
        first, vals = s.eval_local(el, u)
        B = np.zeros((len(u), s.dim))
        for r in range(s.degree + 1):
            B[np.arange(len(u)), first + r] = vals[:, r]
        h = np.diff(s.breakpoints)
        x = s.breakpoints[el] + u * h[el]
        w = h[el] * np.tile(g.weights, ne)
        out.append((B, x, w))
    return out


def l2_error(space: TensorSpace, coeffs: np.ndarray, u_exact) -> float:
    """L2 norm of u_h - u with (p+2)-point Gauss in each element and direction."""
    grid = _gauss_grid(space, space.degree + 2)
    U = coeffs.reshape(space.shape)
    for k, (B, _, _) in enumerate(grid):
        U = np.moveaxis(np.tensordot(B, U, axes=([1], [k])), 0, k)
    pts = np.array(np.meshgrid(*[g[1] for g in grid], indexing="ij")).reshape(space.d, -1).T
    W = grid[0][2]
    for g in grid[1:]:
        W = np.multiply.outer(W, g[2])
    diff = U.ravel() - u_exact(pts)
    return float(np.sqrt(np.sum(W.ravel() * diff**2)))


def solve_poisson(space: TensorSpace, f, strategy: str = "gauss-weighted") -> np.ndarray:
    """Coefficients of the Galerkin solution with homogeneous Dirichlet data."""
    K = assemble(space, "stiffness", strategy)
    rules = strategy if strategy != "standard" else "gauss-weighted"
    b = assemble_load(space, AffineMap.identity(space.d), f, rules)
    free = interior_dofs(space)
    c = np.zeros(space.n_dof)
    Kf = K[free][:, free].tocsc()
    c[free] = spla.spsolve(Kf, b[free])
    if not np.all(np.isfinite(c)):
        raise np.linalg.LinAlgError("linear solve failed")
    return c


def run_poisson_convergence(d: int, p: int, meshes, solution: str = "sines",
                            strategy: str = "gauss-weighted", tolerance: float | None = None) -> ConvergenceReport:
    u, f = _manufactured(solution, d)
    meshes = [int(n) for n in meshes]
    errors = []
    for n in meshes:
        space = TensorSpace.uniform(p, n, d)
        c = solve_poisson(space, f, strategy)
        errors.append(l2_error(space, c, u))
    h = [1.0 / n for n in meshes]
    tol = default_rate_tolerance(p) if tolerance is None else tolerance
    if solution == "zero":
        rate, res, passed = float("nan"), float("nan"), max(errors) == 0.0
    else:
        rate, res = fit_rate(h, errors)
        passed = abs(rate - (p + 1)) <= tol
    meta = dict(CONVENTIONS, manufactured=MANUFACTURED[solution], error_norm=f"L2, {p + 2}-point Gauss")
    return ConvergenceReport("poisson", d, p, strategy, meshes, h, errors, rate, res, float(p + 1),
                             tol, bool(passed), None, is_monotone_decay(errors), meta)
