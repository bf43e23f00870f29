"""Row-wise assembly with weighted rules, plus an element-wise Gauss baseline.

Each row of the mass or stiffness matrix is integrated with a quadrature
tailored to its test function ``B_j``. On a tensor-product space with an
affine (diagonal) map the row is a sum of outer products of univariate rows,
so only univariate rules are needed. Rows whose test function is not a
shifted cardinal B-spline in some direction fall back to element-wise
Gauss-Legendre on the row's support.

Evaluation counting. For every row and every tensor quadrature node the
counter records the number of nonzero tensor basis values needed there
(``value_evals``/``deriv_evals``), and separately the univariate requests
when values are cached per direction (``univariate_*``). Nodes where the
weight vanishes and basis functions that vanish at a node are not counted
when redundancy suppression is on. Fallback rows are tallied in the
``fallback_*`` fields so they do not distort the comparison of rules.
"""
from __future__ import annotations

import json
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .exact_oracle import GaussLegendreTable
from .rule_solver import WeightedRule, cardinal_rule
from .spline_core import SplineSpace, cardinal_space

log = logging.getLogger(__name__)

STRATEGIES = ("standard", "nc-weighted", "gauss-weighted")
WEIGHTED = ("nc-weighted", "gauss-weighted")
SYMMETRY_TOL = 1e-12
ZERO_TOL = 1e-12

COUNT_FIELDS = (
    "value_evals",
    "deriv_evals",
    "univariate_value_evals",
    "univariate_deriv_evals",
    "fallback_value_evals",
    "fallback_deriv_evals",
    "rows",
    "fallback_rows",
)


@dataclass(frozen=True)
class TensorSpace:
    spaces: tuple

    def __post_init__(self):
        spaces = tuple(self.spaces)
        if not 1 <= len(spaces) <= 3:
            raise ValueError("dimension must be 1, 2 or 3")
        if len({s.degree for s in spaces}) != 1:
            raise ValueError("all directions must share one degree")
        object.__setattr__(self, "spaces", spaces)

    @classmethod
    def uniform(cls, degree: int, n_elements, d: int | None = None) -> TensorSpace:
        if np.ndim(n_elements) == 0:
            n_elements = [int(n_elements)] * (d or 1)
        return cls(tuple(SplineSpace.uniform(degree, int(n)) for n in n_elements))

    @property
    def d(self) -> int:
        return len(self.spaces)

    @property
    def degree(self) -> int:
        return self.spaces[0].degree

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.spaces)

    @property
    def n_dof(self) -> int:
        return int(np.prod(self.shape))

    def boundary_dofs(self) -> np.ndarray:
        """Flat indices of functions that are nonzero on the boundary."""
        grids = np.meshgrid(*[np.arange(n) for n in self.shape], indexing="ij")
        mask = np.zeros(self.shape, dtype=bool)
        for g, n in zip(grids, self.shape):
            mask |= (g == 0) | (g == n - 1)
        return np.flatnonzero(mask.ravel())


@dataclass(frozen=True)
class AffineMap:
    """Diagonal affine map ``x = offset + scale * xhat`` from the parameter box."""

    scales: tuple
    offsets: tuple = None

    def __post_init__(self):
        s = tuple(float(v) for v in np.atleast_1d(self.scales))
        if any(v <= 0 for v in s):
            raise ValueError("scales must be positive")
        o = (0.0,) * len(s) if self.offsets is None else tuple(float(v) for v in self.offsets)
        if len(o) != len(s):
            raise ValueError("offsets and scales differ in length")
        object.__setattr__(self, "scales", s)
        object.__setattr__(self, "offsets", o)

    @classmethod
    def identity(cls, d: int) -> AffineMap:
        return cls((1.0,) * d)

    @property
    def det(self) -> float:
        return float(np.prod(self.scales))

    @property
    def inverse_transpose(self) -> np.ndarray:
        return np.diag([1.0 / s for s in self.scales])

    def __call__(self, xhat) -> np.ndarray:
        return np.asarray(self.offsets) + np.asarray(self.scales) * np.asarray(xhat)


@dataclass
class EvalCounter:
    suppress_redundant: bool = True
    tallies: dict = field(default_factory=dict)

    def add(self, strategy: str, **counts) -> None:
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        t = self.tallies.setdefault(strategy, dict.fromkeys(COUNT_FIELDS, 0))
        for k, v in counts.items():
            if k not in t:
                raise KeyError(k)
            if v < 0:
                raise ValueError("counts only grow")
            t[k] += int(v)

    def get(self, strategy: str, name: str) -> int:
        return self.tallies.get(strategy, {}).get(name, 0)

    def reset(self) -> None:
        self.tallies.clear()

    def merge(self, other: EvalCounter) -> None:
        for strategy, t in other.tallies.items():
            self.add(strategy, **t)

    def report(self) -> list[dict]:
        return [{"strategy": s, **self.tallies[s]} for s in STRATEGIES if s in self.tallies]

    def to_json(self) -> str:
        return json.dumps(self.report(), indent=2)


class RuleSet:
    """Source of cardinal weighted rules for one strategy."""

    def __init__(self, strategy: str = "gauss-weighted", omega1: float = 1.0):
        if strategy not in WEIGHTED:
            raise ValueError(f"weighted strategy expected, got {strategy!r}")
        self.strategy = strategy
        self.omega1 = omega1

    def rule(self, kind: str, degree: int) -> WeightedRule:
        try:
            return cardinal_rule(self.strategy, kind, degree, self.omega1)
        except ValueError as exc:
            raise ValueError(f"no {self.strategy} {kind} rule for degree {degree}") from exc


def _as_ruleset(rules) -> RuleSet:
    if isinstance(rules, RuleSet):
        return rules
    return RuleSet(rules or "gauss-weighted")


def _node_counts(rule: WeightedRule, suppress: bool) -> tuple[int, int]:
    """Univariate evaluation counts of a cardinal rule: (nodes used, basis values needed)."""
    p = rule.degree
    if not suppress:
        return rule.m, rule.m * (p + 1)
    space, j = cardinal_space(p)
    used = np.abs(rule.effective_weights) > ZERO_TOL * np.max(np.abs(rule.effective_weights))
    x = rule.nodes[used]
    deriv = rule.kind == "stiffness"
    V = space.basis_matrix(x, derivative=deriv)[:, space.interacting_indices(j)]
    return int(used.sum()), int(np.sum(np.abs(V) > ZERO_TOL))


@dataclass
class _DirectionTable:
    """Univariate row data of one direction, offsets -p..p relative to the row index."""

    mass: np.ndarray
    stiff: np.ndarray
    cardinal: np.ndarray
    # per-row univariate counts for weighted rows and for fallback rows
    w_count: dict
    g_count: np.ndarray


def _local_matrix(space: SplineSpace, elements, u, deriv: bool, col0: int, ncols: int) -> np.ndarray:
    """Basis values at element-local points, columns ``col0 .. col0+ncols-1``."""
    out = space.eval_local(elements, u, derivative=deriv)
    first, vals = out[0], out[-1]
    p = space.degree
    V = np.zeros((len(u), ncols))
    for r in range(p + 1):
        c = first + r - col0
        ok = (c >= 0) & (c < ncols)
        V[np.flatnonzero(ok), c[ok]] = vals[ok, r]
    return V


def _gauss_rows(space: SplineSpace, j: int, deriv: bool) -> np.ndarray:
    """Row j on offsets -p..p by (p+1)-point Gauss on each element of supp(B_j)."""
    p = space.degree
    e0, e1 = space.support_elements(j)
    g = GaussLegendreTable(p + 1)
    elements = np.repeat(np.arange(e0, e1), p + 1)
    u = np.tile(g.nodes, e1 - e0)
    width = space.knots.spacing if space.knots.is_uniform else np.diff(space.breakpoints)[elements]
    w = width * np.tile(g.weights, e1 - e0)
    V = _local_matrix(space, elements, u, deriv, j - p, 2 * p + 1)
    return V.T @ (w * V[:, p])


def cardinal_row(rule: WeightedRule) -> np.ndarray:
    """Univariate row of a cardinal rule in reference coordinates (unit spacing),
    valid when all neighbours are shifted cardinal B-splines too."""
    space, j = cardinal_space(rule.degree)
    V = space.basis_matrix(rule.nodes, derivative=rule.kind == "stiffness")
    return V[:, space.interacting_indices(j)].T @ rule.effective_weights


def _weighted_row(space: SplineSpace, j: int, rule: WeightedRule) -> np.ndarray:
    """Row j of a cardinal weight; neighbours are evaluated as they are (possibly clamped)."""
    p = space.degree
    tau = rule.nodes
    k = np.minimum(np.floor(tau).astype(int), p)
    V = _local_matrix(space, j - p + k, tau - k, rule.kind == "stiffness", j - p, 2 * p + 1)
    return V.T @ rule.mapped(space.knots.spacing).effective_weights


def _direction_table(space: SplineSpace, rules: RuleSet | None, need_stiff: bool,
                     suppress: bool) -> _DirectionTable:
    p = space.degree
    n = space.dim
    mass = np.zeros((n, 2 * p + 1))
    stiff = np.zeros((n, 2 * p + 1))
    cardinal = np.array([space.is_cardinal(j) for j in range(n)]) if rules else np.zeros(n, bool)
    g_count = np.zeros(n, dtype=np.int64)
    w_count = {}
    if rules is not None:
        rm = rules.rule("mass", p)
        rk = rules.rule("stiffness", p) if need_stiff else None
        w_count["mass"] = _node_counts(rm, suppress)
        if need_stiff:
            w_count["stiffness"] = _node_counts(rk, suppress)
    for j in range(n):
        e0, e1 = space.support_elements(j)
        g_count[j] = (e1 - e0) * (p + 1)
        if cardinal[j]:
            mass[j] = _weighted_row(space, j, rm)
            if need_stiff:
                stiff[j] = _weighted_row(space, j, rk)
        else:
            mass[j] = _gauss_rows(space, j, False)
            if need_stiff:
                stiff[j] = _gauss_rows(space, j, True)
    return _DirectionTable(mass, stiff, cardinal, w_count, g_count)


class _Stencil:
    """CSR pattern of the |i_k - j_k| <= p stencil in C order."""

    def __init__(self, shape, p):
        self.shape = tuple(shape)
        self.p = p
        d = len(shape)
        offs = np.array(np.meshgrid(*[np.arange(-p, p + 1)] * d, indexing="ij")).reshape(d, -1).T
        self.offsets = offs  # lexicographic, so columns come out sorted
        n = int(np.prod(shape))
        self.n = n
        idx = np.array(np.unravel_index(np.arange(n), self.shape)).T  # (n, d)
        self.multi = idx
        cols = idx[:, None, :] + offs[None, :, :]
        valid = np.all((cols >= 0) & (cols < np.array(shape)), axis=2)
        self.valid = valid
        flat = np.zeros(valid.shape, dtype=np.int64)
        flat[valid] = np.ravel_multi_index(tuple(cols[valid].T), self.shape)
        self.indices = flat[valid]
        self.indptr = np.concatenate([[0], np.cumsum(valid.sum(axis=1))])


def _row_values(stencil: _Stencil, tables, rows: np.ndarray, kind: str, amap: AffineMap,
                use_gauss: np.ndarray) -> np.ndarray:
    """Stencil values (len(rows), (2p+1)^d) for a block of rows."""
    p = stencil.p
    d = len(stencil.shape)
    offs = stencil.offsets + p
    mi = stencil.multi[rows]

    def factor(k, which):
        t = tables[k]
        arr = t.mass if which == "mass" else t.stiff
        return arr[mi[:, k]][:, offs[:, k]]

    detJ = amap.det
    if kind == "mass":
        out = np.full((len(rows), len(offs)), detJ)
        for k in range(d):
            out = out * factor(k, "mass")
        return out
    out = np.zeros((len(rows), len(offs)))
    for k in range(d):
        term = np.full((len(rows), len(offs)), detJ / amap.scales[k] ** 2)
        for l in range(d):
            term = term * factor(l, "stiff" if l == k else "mass")
        out += term
    return out


def _count_block(counter: EvalCounter, strategy: str, kind: str, stencil: _Stencil, tables,
                 rows: np.ndarray, use_gauss: np.ndarray) -> None:
    d = len(stencil.shape)
    mi = stencil.multi[rows]
    p = stencil.p
    # fallback rows: per-element Gauss on the support, (p+1) nonzero functions per point
    g = np.ones(len(rows), dtype=np.int64)
    for k in range(d):
        g *= tables[k].g_count[mi[:, k]] * (p + 1)
    fb = use_gauss
    n_fb = int(fb.sum())
    terms = 1 if kind == "mass" else d
    fb_total = int(g[fb].sum()) * terms
    counts = {"rows": len(rows) - n_fb, "fallback_rows": n_fb}
    if kind == "mass":
        counts["fallback_value_evals"] = fb_total
    else:
        counts["fallback_deriv_evals"] = fb_total
    n_w = len(rows) - n_fb
    if n_w:
        mass_nodes, mass_vals = tables[0].w_count["mass"]
        if kind == "mass":
            counts["value_evals"] = n_w * mass_vals**d
            counts["univariate_value_evals"] = n_w * d * mass_vals
        else:
            s_nodes, s_vals = tables[0].w_count["stiffness"]
            counts["deriv_evals"] = n_w * d * s_vals * mass_vals ** (d - 1)
            counts["univariate_deriv_evals"] = n_w * d * s_vals
            counts["univariate_value_evals"] = n_w * d * (d - 1) * mass_vals
    counter.add(strategy, **counts)


def _assemble_rowwise(space: TensorSpace, amap: AffineMap | None, rules, counter: EvalCounter | None,
                      kind: str, workers: int = 1, chunk: int = 4096) -> sps.csr_matrix:
    if not isinstance(space, TensorSpace):
        space = TensorSpace((space,))
    amap = amap or AffineMap.identity(space.d)
    if len(amap.scales) != space.d:
        raise ValueError("map dimension does not match the space")
    for s in space.spaces:
        if not s.knots.is_uniform:
            raise ValueError("weighted rules require uniform knot vectors")
    counter = counter if counter is not None else EvalCounter()
    p = space.degree
    rules = _as_ruleset(rules)
    if any(s.n_elements < p + 1 for s in space.spaces):
        warnings.warn(
            f"mesh has fewer than {p + 1} elements in some direction; no interior weights, "
            "using standard Gauss for the whole matrix", RuntimeWarning, stacklevel=3)
        return assemble_standard_gauss(space, amap, kind, counter)
    rules.rule("mass", p)  # fail early on missing rules
    tables = [_direction_table(s, rules, kind == "stiffness", counter.suppress_redundant)
              for s in space.spaces]
    stencil = _Stencil(space.shape, p)
    cardinal = np.ones(space.n_dof, dtype=bool)
    for k, t in enumerate(tables):
        cardinal &= t.cardinal[stencil.multi[:, k]]
    data = np.empty(len(stencil.indices))
    fallback_tables = None
    if not cardinal.all():
        fallback_tables = [_direction_table(s, None, kind == "stiffness", True) for s in space.spaces]

    def work(start):
        rows = np.arange(start, min(start + chunk, space.n_dof))
        local = EvalCounter(counter.suppress_redundant)
        vals = _row_values(stencil, tables, rows, kind, amap, None)
        fb = ~cardinal[rows]
        if fb.any():
            vals[fb] = _row_values(stencil, fallback_tables, rows[fb], kind, amap, None)
        _count_block(local, rules.strategy, kind, stencil, tables, rows, fb)
        data[stencil.indptr[rows[0]] : stencil.indptr[rows[-1] + 1]] = vals[stencil.valid[rows]]
        return local

    starts = range(0, space.n_dof, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            locals_ = list(ex.map(work, starts))
    else:
        locals_ = [work(s) for s in starts]
    for c in locals_:
        counter.merge(c)
    A = sps.csr_matrix((data, stencil.indices.copy(), stencil.indptr.copy()),
                       shape=(space.n_dof, space.n_dof))
    return _symmetrize(A)


def _symmetrize(A: sps.csr_matrix) -> sps.csr_matrix:
    diff = A - A.T
    asym = np.max(np.abs(diff.data)) if diff.nnz else 0.0
    scale = max(np.max(np.abs(A.data)), 1.0) if A.nnz else 1.0
    if asym > SYMMETRY_TOL * scale:
        raise ArithmeticError(f"assembled matrix is not symmetric (max deviation {asym:.3e})")
    S = (0.5 * (A + A.T)).tocsr()
    S.sort_indices()
    return S


def assemble_mass_rowwise(space, amap: AffineMap | None = None, rules=None,
                          counter: EvalCounter | None = None, workers: int = 1) -> sps.csr_matrix:
    return _assemble_rowwise(space, amap, rules, counter, "mass", workers)


def assemble_stiffness_rowwise(space, amap: AffineMap | None = None, rules=None,
                               counter: EvalCounter | None = None, workers: int = 1) -> sps.csr_matrix:
    return _assemble_rowwise(space, amap, rules, counter, "stiffness", workers)


def _local_1d(space: SplineSpace, deriv: bool):
    """Element matrices (n_el, p+1, p+1) by (p+1)-point Gauss, and first basis index per element."""
    p = space.degree
    g = GaussLegendreTable(p + 1)
    ne = space.n_elements
    elements = np.repeat(np.arange(ne), p + 1)
    out = space.eval_local(elements, np.tile(g.nodes, ne), derivative=deriv)
    first, vals = out[0], out[-1]
    vals = vals.reshape(ne, p + 1, p + 1)  # element, point, local function
    width = np.full(ne, space.knots.spacing) if space.knots.is_uniform else np.diff(space.breakpoints)
    w = width[:, None] * g.weights[None, :]
    loc = np.einsum("eqa,eq,eqb->eab", vals, w, vals)
    return loc, first.reshape(ne, p + 1)[:, 0]


def assemble_standard_gauss(space, amap: AffineMap | None = None, kind: str = "mass",
                            counter: EvalCounter | None = None) -> sps.csr_matrix:
    """Element-wise assembly with (p+1)^d Gauss-Legendre points per element."""
    if not isinstance(space, TensorSpace):
        space = TensorSpace((space,))
    if kind not in ("mass", "stiffness"):
        raise ValueError(f"kind must be 'mass' or 'stiffness', got {kind!r}")
    amap = amap or AffineMap.identity(space.d)
    d, p = space.d, space.degree
    masses = [_local_1d(s, False) for s in space.spaces]
    stiffs = [_local_1d(s, True) for s in space.spaces] if kind == "stiffness" else None
    n_el = [s.n_elements for s in space.spaces]
    # element grid in C order
    el = np.array(np.unravel_index(np.arange(int(np.prod(n_el))), n_el)).T

    def tensor_local(factors):
        loc = factors[0][el[:, 0]]
        for k in range(1, d):
            f = factors[k][el[:, k]]
            ne, a, _ = loc.shape
            b = f.shape[1]
            loc = np.einsum("eij,ekl->eikjl", loc, f).reshape(ne, a * b, a * b)
        return loc

    if kind == "mass":
        local = amap.det * tensor_local([m[0] for m in masses])
    else:
        local = 0.0
        for k in range(d):
            facs = [stiffs[l][0] if l == k else masses[l][0] for l in range(d)]
            local = local + amap.det / amap.scales[k] ** 2 * tensor_local(facs)
    # global indices of local functions
    glob = None
    for k in range(d):
        idx = masses[k][1][el[:, k]][:, None] + np.arange(p + 1)[None, :]
        if glob is None:
            glob = idx
        else:
            glob = (glob[:, :, None] * space.shape[k] + idx[:, None, :]).reshape(len(el), -1)
    nl = glob.shape[1]
    rows = np.repeat(glob, nl, axis=1).ravel()
    cols = np.tile(glob, (1, nl)).ravel()
    A = sps.coo_matrix((local.ravel(), (rows, cols)), shape=(space.n_dof, space.n_dof)).tocsr()
    A.sum_duplicates()
    if counter is not None:
        per_el = (p + 1) ** d * (p + 1) ** d
        if kind == "mass":
            counter.add("standard", value_evals=len(el) * per_el,
                        univariate_value_evals=len(el) * d * (p + 1) ** 2, rows=space.n_dof)
        else:
            counter.add("standard", deriv_evals=len(el) * d * per_el,
                        univariate_deriv_evals=len(el) * d * (p + 1) ** 2,
                        univariate_value_evals=len(el) * d * (p + 1) ** 2, rows=space.n_dof)
    return _symmetrize(A)


def assemble_load(space, amap: AffineMap | None, f, rules=None) -> np.ndarray:
    """Load vector ``b_j = int f B_j det J`` with the mass-kind weighted rules.

    ``f`` takes an array of shape (n, d) of parameter-domain points and returns
    n values. Rows with a non-cardinal test function use Gauss on the support.
    """
    if not isinstance(space, TensorSpace):
        space = TensorSpace((space,))
    amap = amap or AffineMap.identity(space.d)
    rules = _as_ruleset(rules)
    p, d = space.degree, space.d
    degenerate = any(s.n_elements < p + 1 for s in space.spaces)
    rule = None if degenerate else rules.rule("mass", p)
    # per direction and row: 1D nodes and effective weights (value of B_j included)
    per_dir = []
    for s in space.spaces:
        nodes, wts = [], []
        for j in range(s.dim):
            if not degenerate and s.is_cardinal(j):
                r = rule.mapped(s.knots.spacing, s.breakpoints[j - p])
                a, b = s.domain
                x, w = np.clip(r.nodes, a, b), r.effective_weights
            else:
                e0, e1 = s.support_elements(j)
                x, w = GaussLegendreTable(p + 1).iterated(s.breakpoints[e0 : e1 + 1])
                w = w * s.eval_basis(j, x)
            nodes.append(x)
            wts.append(w)
        per_dir.append((nodes, wts))
    b = np.empty(space.n_dof)
    for flat in range(space.n_dof):
        mi = np.unravel_index(flat, space.shape)
        xs = [per_dir[k][0][mi[k]] for k in range(d)]
        ws = [per_dir[k][1][mi[k]] for k in range(d)]
        grid = np.array(np.meshgrid(*xs, indexing="ij")).reshape(d, -1).T
        w = ws[0]
        for k in range(1, d):
            w = np.multiply.outer(w, ws[k])
        vals = np.asarray(f(grid), dtype=float).reshape(-1)
        b[flat] = amap.det * float(w.ravel() @ vals)
    return b


def assemble(space, kind: str, strategy: str, amap: AffineMap | None = None,
             counter: EvalCounter | None = None, omega1: float = 1.0, workers: int = 1):
    """Dispatch on the strategy name."""
    if strategy == "standard":
        return assemble_standard_gauss(space, amap, kind, counter)
    if strategy not in WEIGHTED:
        raise ValueError(f"unknown strategy {strategy!r}")
    fn = assemble_mass_rowwise if kind == "mass" else assemble_stiffness_rowwise
    return fn(space, amap, RuleSet(strategy, omega1), counter, workers)


def count_ratio(counter: EvalCounter, kind: str = "mass") -> tuple[float, float]:
    """(standard / gauss-weighted, nc-weighted / gauss-weighted) evaluation ratios.

    The weighted comparison uses rows assembled with weighted rules only; the
    standard ratio compares whole-matrix totals, fallback rows included.
    """
    name = "value_evals" if kind == "mass" else "deriv_evals"
    fb = "fallback_" + name
    gw = counter.get("gauss-weighted", name)
    nc = counter.get("nc-weighted", name)
    st = counter.get("standard", name)
    if gw == 0 or nc == 0 or st == 0:
        raise ValueError("counters are empty; run all three assemblers first")
    gw_total = gw + counter.get("gauss-weighted", fb)
    return st / gw_total, nc / gw


def measure_count_ratio(space, kind: str = "mass") -> tuple[tuple[float, float], EvalCounter]:
    counter = EvalCounter()
    for strategy in STRATEGIES:
        assemble(space, kind, strategy, counter=counter)
    return count_ratio(counter, kind), counter


def write_matrix_market(path, A: sps.spmatrix, comment: str = "") -> None:
    """Symmetric coordinate MatrixMarket file of the lower triangle, 17 significant digits."""
    L = sps.tril(A).tocoo()
    order = np.lexsort((L.row, L.col))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        for line in comment.splitlines():
            fh.write(f"% {line}\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {L.nnz}\n")
        for k in order:
            fh.write(f"{L.row[k] + 1} {L.col[k] + 1} {L.data[k]:.17g}\n")


def band_dict(A: sps.spmatrix, space: TensorSpace) -> dict:
    """Compact band form: for each nonnegative stencil offset, values per row (0 outside)."""
    p, d = space.degree, space.d
    st = _Stencil(space.shape, p)
    A = A.tocsr()
    bands = []
    for o, off in enumerate(st.offsets):
        if tuple(off) < (0,) * d:
            continue
        vals = np.zeros(space.n_dof)
        rows = np.flatnonzero(st.valid[:, o])
        cols = np.ravel_multi_index(tuple((st.multi[rows] + off).T), space.shape)
        vals[rows] = np.asarray(A[rows, cols]).ravel()
        bands.append({"offset": [int(v) for v in off], "values": [float(v) for v in vals]})
    return {"n": space.n_dof, "p": p, "d": d, "shape": list(space.shape), "bands": bands}


def max_entry_difference(A: sps.spmatrix, B: sps.spmatrix) -> float:
    D = (A - B).tocsr()
    return float(np.max(np.abs(D.data))) if D.nnz else 0.0
