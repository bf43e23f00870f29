import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgquad import rule_solver as rs
from wgquad.exact_oracle import exact_moment_vector
from wgquad.spline_core import SplineSpace, cardinal_space


def test_quadratic_mass_closed_form():
    # eliminating the weights leaves 26 t^2 - 48 t + 21 = 0
    rule = rs.quadratic_mass_rule()
    t = rule.nodes[0]
    assert abs(26 * t * t - 48 * t + 21) < 1e-13
    npt.assert_allclose(t, (24 - math.sqrt(30)) / 26, atol=1e-15)
    npt.assert_allclose(rule.weights[0], 1 / (30 * t**2 * (1 - t) ** 2), rtol=1e-14)
    npt.assert_allclose(rule.nodes, [t, 1.5, 3 - t], atol=1e-15)


def test_quadratic_stiffness_is_rational():
    rule = rs.quadratic_stiffness_rule()
    npt.assert_allclose(rule.nodes, [0.75, 1.5, 2.25], atol=1e-15)
    npt.assert_allclose(rule.weights, [8 / 9] * 3, atol=1e-15)
    # middle node carries no effective weight
    assert rule.effective_weights[1] == 0.0


@pytest.mark.parametrize("factory", [rs.quadratic_mass_rule, rs.cubic_mass_rule,
                                     rs.quadratic_stiffness_rule, rs.cubic_stiffness_rule])
def test_rules_are_symmetric_and_bracketed(factory):
    rule = factory()
    p = rule.degree
    assert rule.m == p + 1
    npt.assert_allclose(rule.nodes + rule.nodes[::-1], p + 1, atol=1e-14)
    npt.assert_allclose(rule.weights, rule.weights[::-1], atol=1e-15)
    # one node per element of the support
    assert list(np.floor(rule.nodes).astype(int)) == list(range(p + 1))
    assert np.all(np.abs(rs.exactness_residuals(rule)) <= 1e-13)


def test_cubic_mass_weights_positive():
    assert np.all(rs.cubic_mass_rule().weights > 0)


def test_residual_system_jacobian_matches_finite_differences():
    for sysm in (rs.ResidualSystem("mass", 3), rs.ResidualSystem("stiffness", 3, fixed={"omega1": 1.0}),
                 rs.ResidualSystem("mass", 2)):
        x = np.array([0.4 + 0.3 * k for k in range(len(sysm.free))])
        J = sysm.jacobian(x)
        eps = 1e-7
        for c in range(len(x)):
            dx = np.zeros_like(x)
            dx[c] = eps
            fd = (sysm.residual(x + dx) - sysm.residual(x - dx)) / (2 * eps)
            npt.assert_allclose(J[:, c], fd, atol=1e-7)


def test_frozen_and_true_residuals_agree_inside_brackets():
    sysm = rs.cubic_mass_system()
    rule = rs.cubic_mass_rule()
    x = sysm.pack({"tau1": rule.nodes[0], "tau2": rule.nodes[1],
                   "omega1": rule.weights[0], "omega2": rule.weights[1]})
    full = sysm.full_residual(x)
    npt.assert_allclose(full, rs.exactness_residuals(rule), atol=1e-15)


def test_perturbed_moments_still_solved():
    sysm = rs.cubic_mass_system()
    m = sysm.moments
    s = np.abs(np.arange(-3, 4))
    perturbed = sysm.with_moments(m * (1 + 1e-3 * (1 + s) / 4))
    rule = rs.solve_residual_system(perturbed)
    res = rs.exactness_residuals(rule, moments=perturbed.moments)
    assert np.max(np.abs(res)) <= 1e-13


def test_solver_failure_reports_best_residual():
    sysm = rs.ResidualSystem("mass", 3, moments=-np.ones(7))
    with pytest.raises(rs.RuleSolverError) as err:
        rs.solve_residual_system(sysm)
    assert err.value.best_residual > 0
    assert err.value.diagnostics


def test_cubic_stiffness_family_admissibility():
    with pytest.raises(rs.RuleSolverError):
        rs.cubic_stiffness_rule(0.5)
    rule = rs.cubic_stiffness_rule(8 / 15 + 1e-3)
    assert 0 < rule.nodes[0] < 1


@settings(max_examples=25, deadline=None)
@given(st.floats(0.6, 2.0))
def test_cubic_stiffness_family_exact(omega1):
    rule = rs.cubic_stiffness_rule(omega1)
    assert rule.weights[0] == pytest.approx(omega1)
    assert np.max(np.abs(rs.exactness_residuals(rule))) <= 1e-12
    # closed form of the first node
    y = 1 / math.sqrt(30 * omega1)
    npt.assert_allclose(rule.nodes[0], (1 - math.sqrt(1 - 4 * y)) / 2, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([rs.quadratic_mass_rule, rs.cubic_mass_rule, rs.quadratic_stiffness_rule,
                        rs.cubic_stiffness_rule]),
       st.floats(0.01, 10.0), st.integers(0, 5))
def test_mapped_rule_exact_on_scaled_mesh(factory, h, shift):
    # rules carry over to spacing h when weights scale by h for both kinds
    rule = factory()
    p = rule.degree
    n = 3 * p + 1 + shift
    space = SplineSpace.uniform(p, n, 0.0, h * n)
    j = 2 * p + shift // 2  # weight and all its neighbours unclamped
    mapped = rule.mapped(h, space.breakpoints[j - p])
    res = rs.exactness_residuals(mapped, space, j)
    scale = 1.0 / h if rule.kind == "stiffness" else h
    assert np.max(np.abs(res)) <= 1e-12 * max(scale, 1.0)


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("kind", ["mass", "stiffness"])
def test_newton_cotes_cardinal(p, kind):
    rule = rs.newton_cotes_cardinal_rule(kind, p)
    assert rule.m == 2 * p + 1
    npt.assert_allclose(rule.nodes, np.arange(1, 2 * p + 2) / 2)
    assert np.max(np.abs(rs.exactness_residuals(rule))) <= 1e-13


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("kind", ["mass", "stiffness"])
def test_newton_cotes_boundary_weights(p, kind):
    space = SplineSpace.uniform(p, 7)
    for j in range(space.dim):
        rule = rs.newton_cotes_weighted_rule(space, j, kind)
        res = rs.exactness_residuals(rule, space, j)
        assert np.max(np.abs(res)) <= 1e-12 * 7


def test_unconstrained_newton_diverges_from_reference_start():
    sysm = rs.cubic_mass_system()
    res = rs.newton_raphson(sysm, sysm.named_start("reference"))
    assert not res.converged


def test_bracketed_solver_from_reference_start():
    sysm = rs.cubic_mass_system()
    rule = rs.solve_residual_system(sysm, [sysm.named_start("reference")])
    npt.assert_allclose(rule.nodes[:2], [0.72289886179270511319, 1.58789880583487289415], atol=1e-12)


def test_rule_serialization_round_trip():
    d = rs.cubic_mass_rule().to_dict()
    assert d["kind"] == "mass" and d["degree"] == 3
    assert len(d["nodes"]) == 4
    assert float(repr(d["nodes"][0])) == d["nodes"][0]


def test_unknown_start_and_kind():
    with pytest.raises(ValueError):
        rs.cubic_mass_system().named_start("nope")
    with pytest.raises(ValueError):
        rs.ResidualSystem("torsion", 2)
    with pytest.raises(ValueError):
        rs.gaussian_rule("mass", 4)


def test_cardinal_space_rule_moments():
    space, j = cardinal_space(3)
    m = exact_moment_vector(space, j, "mass")
    npt.assert_allclose(rs.cubic_mass_system().moments, m, atol=1e-16)
