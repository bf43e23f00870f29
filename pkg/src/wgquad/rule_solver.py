"""Weighted quadrature rules for interior B-spline weights.

A rule for weight function ``W`` (``B_j`` for mass, ``B_j'`` for stiffness)
approximates ``int f(x) W(x) dx`` by ``sum_k w_k f(t_k) W(t_k)``, i.e. the
weights multiply the full product as in the exactness systems. It must be
exact for every ``f`` among the ``2p+1`` basis functions (or derivatives)
interacting with ``B_j``.

Gaussian rules use ``p+1`` nodes, one per element of the weight's support,
and are found from nonlinear systems in cardinal coordinates (support
``[0, p+1]``). The Newton-Cotes-type baseline fixes the nodes at knots and
element midpoints and solves a linear system for the weights.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np
from numpy.polynomial import Polynomial

from .exact_oracle import CARDINAL_MOMENTS, exact_moment_vector
from .spline_core import CardinalPatch, SplineSpace, cardinal_space

log = logging.getLogger(__name__)

KINDS = ("mass", "stiffness")

RESIDUAL_TOL = 1e-13
STEP_TOL = 1e-14
MAX_ITER = 100
MIN_DAMPING = 1.0 / 1024
START_OFFSETS = (0.0, 0.2, -0.2, 0.35, -0.35)
BRACKET_MARGIN = 1e-12

# Initial guess of the cubic mass system that Newton is reported to mishandle.
NAMED_STARTS = {
    "reference": {"tau1": 1 / 3, "tau2": 5 / 3, "omega1": 1.0, "omega2": 1.0},
}


class RuleSolverError(RuntimeError):
    """Raised when no admissible root is found; carries the best attempt."""

    def __init__(self, message, best_residual=np.inf, diagnostics=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.diagnostics = diagnostics or []


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


@dataclass(frozen=True)
class WeightedRule:
    kind: str
    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    weight_values: np.ndarray
    weight_index: int | str = "interior-cardinal"
    family: str = "gauss"
    residual_max: float = float("nan")

    def __post_init__(self):
        for name in ("nodes", "weights", "weight_values"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def m(self) -> int:
        return len(self.nodes)

    @property
    def effective_weights(self) -> np.ndarray:
        """Weights with the weight function absorbed, ``w_k * W(t_k)``."""
        return self.weights * self.weight_values

    def mapped(self, h: float, offset: float = 0.0) -> WeightedRule:
        """Rule for the same weight on a mesh of spacing ``h`` whose support starts at ``offset``.

        Under the full-product convention the weights scale by ``h`` for both
        kinds; derivative values of the weight scale by ``1/h``.
        """
        wv = self.weight_values / h if self.kind == "stiffness" else self.weight_values
        return replace(
            self,
            nodes=offset + h * self.nodes,
            weights=h * self.weights,
            weight_values=wv,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "degree": self.degree,
            "family": self.family,
            "weight_index": self.weight_index,
            "nodes": [float(x) for x in self.nodes],
            "weights": [float(x) for x in self.weights],
            "residual_max": float(self.residual_max),
        }


def exactness_residuals(rule: WeightedRule, space: SplineSpace | None = None, j: int | None = None,
                        moments=None) -> np.ndarray:
    """Quadrature sum minus exact moment for every basis function interacting with the weight.

    Cardinal rules are checked on :func:`cardinal_space`; rules for a concrete
    weight index need the space they were built on.
    """
    if space is None:
        space, j = cardinal_space(rule.degree)
    elif j is None:
        j = rule.weight_index
    if moments is None:
        moments = exact_moment_vector(space, j, rule.kind)
    deriv = rule.kind == "stiffness"
    a, b = space.domain
    x = np.clip(rule.nodes, a, b)
    A = space.basis_matrix(x, derivative=deriv)[:, space.interacting_indices(j)]
    W = space.eval_deriv(j, x) if deriv else space.eval_basis(j, x)
    return A.T @ (rule.weights * W) - np.asarray(moments, dtype=float)


@dataclass
class ResidualSystem:
    """Symmetric reduction of the exactness system of a cardinal interior weight.

    Nodes come in mirrored pairs ``t_k, (p+1) - t_k`` with equal weights; for
    odd node counts the middle node sits at the support midpoint. Node ``k``
    is assumed to lie in element ``k-1`` and the polynomial pieces are frozen
    accordingly, so the residual is a polynomial map that stays defined when
    an iterate leaves its element. Unknowns are named ``tau1..``,
    ``omega1..``; any of them may be fixed.
    """

    kind: str
    degree: int
    moments: np.ndarray = None
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_kind(self.kind)
        if self.degree not in (2, 3):
            raise ValueError("Gaussian weighted rules are derived for degree 2 and 3 only")
        self.exact_moments = None
        if self.moments is None:
            self.exact_moments = CARDINAL_MOMENTS[(self.kind, self.degree)]
            self.moments = np.array([float(f) for f in self.exact_moments])
        self.extended = False
        self.moments = np.asarray(self.moments, dtype=float)
        if len(self.moments) != 2 * self.degree + 1:
            raise ValueError("need 2p+1 moments")
        self.patch = CardinalPatch(self.degree)
        p = self.degree
        self.m = p + 1
        self.n_pairs = self.m // 2
        self.has_center = self.m % 2 == 1
        self.center = (p + 1) / 2
        taus = [f"tau{k + 1}" for k in range(self.n_pairs)]
        omegas = [f"omega{k + 1}" for k in range(self.n_pairs)]
        if self.has_center:
            taus.append(f"tau{self.n_pairs + 1}")
            omegas.append(f"omega{self.n_pairs + 1}")
            self.fixed.setdefault(taus[-1], self.center)
        self.names = taus + omegas
        unknown = set(self.fixed) - set(self.names)
        if unknown:
            raise ValueError(f"unknown fixed variables {sorted(unknown)}")
        self.free = [n for n in self.names if n not in self.fixed]
        # one independent constraint per offset s = -p..0 thanks to symmetry
        self.offsets = list(range(-p, 1))

    def with_moments(self, moments) -> ResidualSystem:
        return ResidualSystem(self.kind, self.degree, np.asarray(moments, dtype=float), dict(self.fixed))

    def extended_copy(self) -> ResidualSystem:
        """Same system evaluated in mpmath arithmetic with rational piece
        coefficients (and rational moments when they are the cardinal ones)."""
        other = ResidualSystem(self.kind, self.degree, self.moments.copy(), dict(self.fixed))
        other.exact_moments = self.exact_moments
        other.extended = True
        return other

    def unpack(self, x) -> dict:
        if self.extended:
            vals = {k: mp.mpf(v) for k, v in self.fixed.items()}
            vals.update(zip(self.free, [mp.mpf(v) for v in x]))
            return vals
        vals = dict(self.fixed)
        vals.update(zip(self.free, np.asarray(x, dtype=float)))
        return vals

    def pack(self, values: dict) -> np.ndarray:
        return np.array([values[n] for n in self.free], dtype=float)

    def brackets(self) -> dict:
        return {f"tau{k + 1}": (float(k), float(k + 1)) for k in range(self.n_pairs)}

    def node_list(self, vals: dict):
        """(position, weight name, element, mirrored) for all p+1 nodes."""
        p = self.degree
        out = []
        for k in range(self.n_pairs):
            t = vals[f"tau{k + 1}"]
            out.append((t, f"omega{k + 1}", k, False))
            out.append((p + 1 - t, f"omega{k + 1}", p - k, True))
        if self.has_center:
            k = self.n_pairs
            out.append((vals[f"tau{k + 1}"], f"omega{k + 1}", k, False))
        return out

    def _product(self, x, e, s, derivative=0):
        """Frozen piece of B(x - s) * W(x) on element e (or its x-derivative)."""
        der = 1 if self.kind == "stiffness" else 0
        f = self._piece(e - s, der)
        g = self._piece(e, der)
        if derivative == 0:
            return f(x - s) * g(x)
        return f.deriv()(x - s) * g(x) + f(x - s) * g.deriv()(x)

    def _piece(self, k, der):
        pc = self.patch.piece(k, der)
        if not self.extended:
            return pc
        return _rational_polynomial(tuple(pc.coef))

    def _moment(self, s):
        if self.extended:
            if self.exact_moments is not None:
                f = self.exact_moments[s + self.degree]
                return mp.mpf(f.numerator) / f.denominator
            return mp.mpf(self.moments[s + self.degree])
        return self.moments[s + self.degree]

    def _array(self, *shape):
        return np.zeros(shape, dtype=object if self.extended else float)

    def residual(self, x, offsets=None) -> np.ndarray:
        vals = self.unpack(x)
        offs = self.offsets if offsets is None else offsets
        nodes = self.node_list(vals)
        r = self._array(len(offs))
        for row, s in enumerate(offs):
            acc = 0.0
            for t, wname, e, _ in nodes:
                acc += vals[wname] * self._product(t, e, s)
            r[row] = acc - self._moment(s)
        return r

    def full_residual(self, x) -> np.ndarray:
        """All 2p+1 constraints, still with frozen pieces."""
        return self.residual(x, offsets=list(range(-self.degree, self.degree + 1)))

    def jacobian(self, x) -> np.ndarray:
        vals = self.unpack(x)
        nodes = self.node_list(vals)
        col = {n: c for c, n in enumerate(self.free)}
        J = self._array(len(self.offsets), len(self.free))
        for row, s in enumerate(self.offsets):
            for k, (t, wname, e, mirrored) in enumerate(nodes):
                if wname in col:
                    J[row, col[wname]] += self._product(t, e, s)
                tname = f"tau{k // 2 + 1}" if k < 2 * self.n_pairs else f"tau{self.n_pairs + 1}"
                if tname in col:
                    sign = -1.0 if mirrored else 1.0
                    J[row, col[tname]] += sign * vals[wname] * self._product(t, e, s, derivative=1)
        return J

    def in_brackets(self, x, margin: float = 0.0) -> bool:
        vals = self.unpack(x)
        return all(lo + margin < vals[n] < hi - margin for n, (lo, hi) in self.brackets().items())

    def project(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        for n, (lo, hi) in self.brackets().items():
            if n in self.free:
                c = self.free.index(n)
                x[c] = min(max(x[c], lo + BRACKET_MARGIN), hi - BRACKET_MARGIN)
        return x

    def default_starts(self) -> list[np.ndarray]:
        """Deterministic grid: element midpoints shifted by fixed fractions of the
        element width, unit weights."""
        taus = [n for n in self.free if n.startswith("tau")]
        br = self.brackets()
        starts = []
        for offs in itertools.product(START_OFFSETS, repeat=len(taus)):
            vals = {n: 1.0 for n in self.free}
            for n, d in zip(taus, offs):
                lo, hi = br[n]
                vals[n] = 0.5 * (lo + hi) + d * (hi - lo)
            starts.append(self.pack(vals))
        return starts

    def named_start(self, name: str) -> np.ndarray:
        try:
            vals = NAMED_STARTS[name]
        except KeyError:
            raise ValueError(f"unknown start {name!r}; known: {sorted(NAMED_STARTS)}") from None
        return self.pack({**{n: 1.0 for n in self.free}, **vals})

    def to_rule(self, x) -> WeightedRule:
        """Rule from a solution vector; an mpf vector is rounded after mirroring."""
        with mp.workdps(40):
            ext = np.asarray(x).dtype == object
            vals = (self.extended_copy() if ext else self).unpack(x)
            nodes = sorted((float(t), float(vals[w])) for t, w, _, _ in self.node_list(vals))
        tau = np.array([t for t, _ in nodes])
        om = np.array([w for _, w in nodes])
        Wv = self.patch.deriv(tau) if self.kind == "stiffness" else self.patch(tau)
        rule = WeightedRule(self.kind, self.degree, tau, om, Wv)
        res = exactness_residuals(rule, moments=self.moments)
        return replace(rule, residual_max=float(np.max(np.abs(res))))


@lru_cache(maxsize=None)
def _rational_polynomial(coef: tuple) -> Polynomial:
    # piece coefficients are rationals with small denominators
    fr = [Fraction(c).limit_denominator(720) for c in coef]
    return Polynomial(np.array([mp.mpf(f.numerator) / f.denominator for f in fr], dtype=object))


def refine_extended(system: ResidualSystem, x, dps: int = 40, max_iter: int = 12) -> np.ndarray:
    """Gauss-Newton steps in extended precision from a converged double root.

    Returns an object array of mpf values so that mirrored nodes can be
    formed before rounding to double.
    """
    hp = system.extended_copy()
    with mp.workdps(dps):
        xv = mp.matrix([mp.mpf(float(v)) for v in x])
        for _ in range(max_iter):
            r = mp.matrix(list(hp.residual(list(xv))))
            J = mp.matrix(hp.jacobian(list(xv)).tolist())
            dx = mp.lu_solve(J.T * J, -(J.T * r))
            xv = xv + dx
            if mp.norm(dx, mp.inf) < mp.mpf(10) ** (8 - dps):
                break
        return np.array(list(xv), dtype=object)


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    converged: bool
    start: np.ndarray = None


def damped_newton(system: ResidualSystem, x0, project: bool = True,
                  tol_res: float = RESIDUAL_TOL, tol_step: float = STEP_TOL,
                  max_iter: int = MAX_ITER) -> NewtonResult:
    """Newton with step halving on the max-norm residual.

    Steps come from a least-squares solve so rank-deficient but consistent
    systems are handled. With ``project`` the iterates are clipped into the
    element brackets.
    """
    x = system.project(x0) if project else np.array(x0, dtype=float)
    r = system.residual(x)
    rn = np.max(np.abs(r))
    step = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        if rn <= tol_res and step <= tol_step:
            return NewtonResult(x, rn, it - 1, True, np.array(x0, dtype=float))
        dx = np.linalg.lstsq(system.jacobian(x), -r, rcond=None)[0]
        lam = 1.0
        while True:
            xt = x + lam * dx
            if project:
                xt = system.project(xt)
            rt = system.residual(xt)
            rtn = np.max(np.abs(rt))
            if (np.isfinite(rtn) and rtn < rn) or lam <= MIN_DAMPING:
                break
            lam /= 2
        if not np.isfinite(rtn):
            break
        step = np.max(np.abs(xt - x))
        x, r, rn = xt, rt, rtn
    converged = bool(rn <= tol_res)
    return NewtonResult(x, rn, it, converged, np.array(x0, dtype=float))


def newton_raphson(system: ResidualSystem, x0, tol_res: float = RESIDUAL_TOL,
                   max_iter: int = MAX_ITER) -> NewtonResult:
    """Plain undamped Newton-Raphson without brackets, as a reference for the
    failure mode of unconstrained iteration."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _newton_raphson(system, x0, tol_res, max_iter)


def _newton_raphson(system, x0, tol_res, max_iter):
    x = np.array(x0, dtype=float)
    r = system.residual(x)
    rn = np.max(np.abs(r))
    it = 0
    for it in range(1, max_iter + 1):
        J = system.jacobian(x)
        if not np.all(np.isfinite(J)):
            break
        try:
            dx = np.linalg.solve(J, -r) if J.shape[0] == J.shape[1] else \
                np.linalg.lstsq(J, -r, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        x = x + dx
        r = system.residual(x)
        rn = np.max(np.abs(r))
        if not np.all(np.isfinite(x)) or not np.isfinite(rn):
            break
        if rn <= tol_res and np.max(np.abs(dx)) <= 1e-10:
            return NewtonResult(x, rn, it, True, np.array(x0, dtype=float))
    return NewtonResult(x, rn, it, bool(rn <= tol_res), np.array(x0, dtype=float))


def _admissible(system: ResidualSystem, x) -> str | None:
    """Reason for rejecting a converged root, or None if it is acceptable."""
    if not system.in_brackets(x):
        return "node outside its element bracket"
    vals = system.unpack(x)
    if system.kind == "mass" and any(vals[n] <= 0 for n in system.names if n.startswith("omega")):
        return "non-positive mass weight"
    return None


def solve_residual_system(system: ResidualSystem, starts=None) -> WeightedRule:
    """Multi-start bracketed damped Newton; the first admissible root wins."""
    starts = system.default_starts() if starts is None else [np.asarray(s, float) for s in starts]
    best = np.inf
    diagnostics = []
    for k, x0 in enumerate(starts):
        res = damped_newton(system, x0, project=True)
        best = min(best, res.residual)
        if not res.converged:
            diagnostics.append((k, x0.tolist(), res.x.tolist(), f"no convergence, residual {res.residual:.3e}"))
            continue
        reason = _admissible(system, res.x)
        if reason is None:
            log.debug("start %d converged in %d iterations", k, res.iterations)
            return system.to_rule(refine_extended(system, res.x))
        diagnostics.append((k, x0.tolist(), res.x.tolist(), reason))
    raise RuleSolverError(
        f"no admissible root from {len(starts)} starts (best residual {best:.3e})",
        best_residual=best, diagnostics=diagnostics,
    )


def _det(M):
    """Determinant of a small square matrix of polynomials by cofactor expansion."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = Polynomial([0.0])
    for c in range(n):
        minor = [row[:c] + row[c + 1:] for row in M[1:]]
        term = M[0][c] * _det(minor)
        total = total + term if c % 2 == 0 else total - term
    return total


def _single_node_elimination(system: ResidualSystem, tau: str, known: dict):
    """Candidate roots of a system with a single free node position.

    The constraints are linear in the weights once the node is fixed, so a
    determinant of the augmented coefficient matrix (a resultant) yields a
    univariate polynomial in the node position. Returns ``(roots, polys)``
    where ``polys[s][omega]`` are the weight coefficients and ``polys[s][None]``
    the constant part.
    """
    vals = dict(system.fixed)
    vals.update(known)
    weights = [n for n in system.names if n.startswith("omega") and n not in vals]
    t = Polynomial([0.0, 1.0])
    p = system.degree
    rows = []
    for s in system.offsets:
        coeff = {w: Polynomial([0.0]) for w in weights}
        const = Polynomial([-system._moment(s)])
        for k, (pos, wname, e, mirrored) in enumerate(system.node_list({**vals, tau: 0.0})):
            tname = f"tau{k // 2 + 1}" if k < 2 * system.n_pairs else f"tau{system.n_pairs + 1}"
            der = 1 if system.kind == "stiffness" else 0
            f = system.patch.piece(e - s, der)
            g = system.patch.piece(e, der)
            if tname == tau:
                x = (p + 1) - t if mirrored else t
                prod = f(x - s) * g(x)
            else:
                prod = Polynomial([f(pos - s) * g(pos)])
            if wname in coeff:
                coeff[wname] = coeff[wname] + prod
            else:
                const = const + vals[wname] * prod
        rows.append((coeff, const))
    active = [w for w in weights if any(np.any(np.abs(r[0][w].coef) > 0) for r in rows)]
    n = len(active)
    roots = []
    for subset in itertools.combinations(range(len(rows)), n + 1):
        M = [[rows[r][0][w] for w in active] + [rows[r][1]] for r in subset]
        poly = _det(M).trim(1e-300)
        if poly.degree() < 1 or np.max(np.abs(poly.coef)) < 1e-14:
            continue
        roots = [float(z.real) for z in poly.roots() if abs(z.imag) < 1e-9]
        break
    return sorted(roots), rows, active


def _solve_weights(rows, active, t):
    A = np.array([[coeff[w](t) for w in active] for coeff, _ in rows])
    b = -np.array([const(t) for _, const in rows])
    w, *_ = np.linalg.lstsq(A, b, rcond=None)
    return dict(zip(active, w)), float(np.max(np.abs(A @ w - b)))


def _polish(system: ResidualSystem, vals: dict) -> WeightedRule:
    res = damped_newton(system, system.pack(vals), project=True)
    if not res.converged or _admissible(system, res.x):
        raise RuleSolverError("closed-form root did not polish to an admissible solution",
                              best_residual=res.residual)
    return system.to_rule(refine_extended(system, res.x))


def _closed_form_single_node(system: ResidualSystem, tau: str, known: dict, pick: str = "first"):
    lo, hi = system.brackets()[tau]
    roots, rows, active = _single_node_elimination(system, tau, known)
    candidates = []
    for t in roots:
        if not lo < t < hi:
            continue
        w, err = _solve_weights(rows, active, t)
        if err > 1e-10:
            continue
        candidates.append((t, w))
    if not candidates:
        raise RuleSolverError(f"no admissible root of the eliminated polynomial in ({lo}, {hi})")
    t, w = candidates[0] if pick == "first" else candidates[-1]
    return {**known, tau: t, **w}, candidates


@lru_cache(maxsize=None)
def quadratic_mass_rule() -> WeightedRule:
    """Three-node symmetric mass rule for the quadratic cardinal weight, middle node at 3/2."""
    system = ResidualSystem("mass", 2)
    vals, _ = _closed_form_single_node(system, "tau1", {})
    return _polish(system, vals)


def cubic_mass_system() -> ResidualSystem:
    return ResidualSystem("mass", 3)


@lru_cache(maxsize=None)
def cubic_mass_rule() -> WeightedRule:
    """Four-node symmetric mass rule for the cubic cardinal weight (multi-start Newton)."""
    return solve_residual_system(cubic_mass_system())


@lru_cache(maxsize=None)
def quadratic_stiffness_rule() -> WeightedRule:
    """Three-node stiffness rule for the quadratic cardinal weight.

    The middle node sits where ``B_j'`` vanishes, so its weight never enters
    the exactness conditions; it is set equal to the outer weights.
    """
    system = ResidualSystem("stiffness", 2)
    vals, _ = _closed_form_single_node(system, "tau1", {})
    vals["omega2"] = vals["omega1"]
    system = ResidualSystem("stiffness", 2, fixed={"omega2": vals["omega1"]})
    return _polish(system, vals)


def cubic_stiffness_quartic(omega1: float) -> Polynomial:
    """Polynomial whose roots in (0, 1) are the admissible first nodes, from the
    constraint against the farthest interacting function."""
    system = ResidualSystem("stiffness", 3, fixed={"omega1": omega1})
    s = -system.degree
    f = system.patch.piece(0 - s, 1)
    g = system.patch.piece(0, 1)
    t = Polynomial([0.0, 1.0])
    return omega1 * f(t - s) * g(t) - system._moment(s)


@lru_cache(maxsize=None)
def cubic_stiffness_rule(omega1: float = 1.0) -> WeightedRule:
    """Member of the one-parameter family of cubic stiffness rules selected by ``omega1``."""
    if not omega1 > 0:
        raise ValueError("omega1 must be positive")
    quartic = cubic_stiffness_quartic(omega1)
    roots = sorted(float(z.real) for z in quartic.roots() if abs(z.imag) < 1e-9 and 0 < z.real < 1)
    if not roots:
        raise RuleSolverError(
            f"quartic {quartic} has no root in (0, 1) for omega1={omega1}; "
            "admissible roots need omega1 >= 8/15"
        )
    tau1 = roots[0]
    tau1 = tau1 - quartic(tau1) / quartic.deriv()(tau1)
    system = ResidualSystem("stiffness", 3, fixed={"omega1": omega1})
    vals, _ = _closed_form_single_node(system, "tau2", {"tau1": tau1})
    return _polish(system, vals)


def gaussian_rule(kind: str, degree: int, omega1: float = 1.0) -> WeightedRule:
    _check_kind(kind)
    if degree == 2:
        return quadratic_mass_rule() if kind == "mass" else quadratic_stiffness_rule()
    if degree == 3:
        return cubic_mass_rule() if kind == "mass" else cubic_stiffness_rule(float(omega1))
    raise ValueError(f"Gaussian weighted rules exist for degree 2 and 3 only, got {degree}")


def newton_cotes_weighted_rule(space: SplineSpace, j: int, kind: str,
                               max_refine: int = 4) -> WeightedRule:
    """Weighted rule with nodes at the knots and element midpoints of supp(B_j).

    Endpoints where the weight vanishes are dropped. If those nodes cannot
    reproduce all moments (short clamped supports at the boundary), each
    element is subdivided further until the linear system is solvable.
    """
    _check_kind(kind)
    if not space.knots.is_uniform:
        raise ValueError("weighted rules require a uniform knot vector")
    deriv = kind == "stiffness"
    e0, e1 = space.support_elements(j)
    bp = space.breakpoints[e0 : e1 + 1]
    moments = exact_moment_vector(space, j, kind)
    idx = space.interacting_indices(j)
    scale = max(np.max(np.abs(moments)), 1e-300)
    for r in range(1, max_refine + 1):
        sub = 2 * r
        pts = np.unique(np.concatenate(
            [bp[k] + (bp[k + 1] - bp[k]) * np.arange(sub + 1) / sub for k in range(len(bp) - 1)]))
        W = space.eval_deriv(j, pts) if deriv else space.eval_basis(j, pts)
        wmax = np.max(np.abs(W))
        interior = (pts > bp[0]) & (pts < bp[-1])
        keep = interior | (np.abs(W) > 1e-13 * wmax)
        pts, W = pts[keep], W[keep]
        A = space.basis_matrix(pts, derivative=deriv)[:, idx].T * W[None, :]
        w, *_ = np.linalg.lstsq(A, moments, rcond=None)
        # zero effective weight where the weight function vanishes
        w[np.abs(W) <= 1e-13 * wmax] = 0.0
        err = np.max(np.abs(A @ w - moments))
        if err <= 1e-13 * max(scale, 1.0):
            rule = WeightedRule(kind, space.degree, pts, w, W, weight_index=j, family="newton-cotes")
            res = exactness_residuals(rule, space, j, moments)
            return replace(rule, residual_max=float(np.max(np.abs(res))))
    raise RuleSolverError(f"Newton-Cotes weighted system for weight {j} is singular")


@lru_cache(maxsize=None)
def newton_cotes_cardinal_rule(kind: str, degree: int) -> WeightedRule:
    """Newton-Cotes-type rule for the interior cardinal weight, support [0, p+1]."""
    space, j = cardinal_space(degree)
    rule = newton_cotes_weighted_rule(space, j, kind)
    return replace(rule, weight_index="interior-cardinal")


def cardinal_rule(strategy: str, kind: str, degree: int, omega1: float = 1.0) -> WeightedRule:
    if strategy == "gauss-weighted":
        return gaussian_rule(kind, degree, omega1)
    if strategy == "nc-weighted":
        return newton_cotes_cardinal_rule(kind, degree)
    raise ValueError(f"no weighted rules for strategy {strategy!r}")
