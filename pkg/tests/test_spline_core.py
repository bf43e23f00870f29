import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgquad.spline_core import CardinalPatch, KnotVector, SplineSpace, cardinal_space


def random_space(p, breaks):
    bp = np.cumsum(np.concatenate([[0.0], breaks]))
    return SplineSpace(KnotVector(p, bp))


spaces = st.builds(
    random_space,
    st.integers(1, 4),
    st.lists(st.floats(0.05, 2.0), min_size=1, max_size=8),
)


@settings(max_examples=60, deadline=None)
@given(spaces, st.lists(st.floats(0, 1), min_size=1, max_size=10))
def test_partition_of_unity_and_nonnegativity(space, fracs):
    a, b = space.domain
    x = a + (b - a) * np.array(fracs)
    B = space.basis_matrix(x)
    assert np.all(B >= -1e-15)
    npt.assert_allclose(B.sum(axis=1), 1.0, atol=1e-14)
    dB = space.basis_matrix(x, derivative=True)
    scale = 1.0 / np.min(np.diff(space.breakpoints))
    npt.assert_allclose(dB.sum(axis=1), 0.0, atol=1e-12 * scale)


@settings(max_examples=40, deadline=None)
@given(spaces, st.data())
def test_local_evaluation_matches_global(space, data):
    e = data.draw(st.integers(0, space.n_elements - 1))
    u = np.array(data.draw(st.lists(st.floats(0, 0.999), min_size=1, max_size=5)))
    bp = space.breakpoints
    x = bp[e] + u * (bp[e + 1] - bp[e])
    f1, N1, d1 = space.eval_local(e, u, derivative=True)
    f2, N2, d2 = space.eval_span(x, derivative=True)
    npt.assert_array_equal(f1, f2)
    npt.assert_allclose(N1, N2, atol=1e-13)
    npt.assert_allclose(d1, d2, atol=1e-11 / np.min(np.diff(bp)))


def test_dimension_and_support():
    s = SplineSpace.uniform(2, 4)
    assert s.dim == 6
    assert s.support(0) == (0.0, 0.25)
    assert s.support(2) == (0.0, 0.75)
    assert s.support(5) == (0.75, 1.0)
    assert s.interacting_indices(0) == [0, 1, 2]
    assert s.interacting_indices(3) == [1, 2, 3, 4, 5]
    # values vanish outside the support
    x = np.linspace(0, 1, 41)
    for i in range(s.dim):
        lo, hi = s.support(i)
        outside = (x < lo) | (x > hi)
        assert np.all(s.eval_basis(i, x)[outside] == 0)


def test_endpoint_interpolation_and_left_continuity():
    s = SplineSpace.uniform(3, 5)
    assert s.eval_basis(0, 0.0) == 1.0
    assert s.eval_basis(s.dim - 1, 1.0) == 1.0
    assert s.eval_basis(s.dim - 2, 1.0) == 0.0


def test_cardinal_detection():
    s = SplineSpace.uniform(3, 8)
    assert [j for j in range(s.dim) if s.is_cardinal(j)] == [3, 4, 5, 6, 7]
    assert s.interior_indices() == [3, 4, 5, 6, 7]


@pytest.mark.parametrize("p", [2, 3])
def test_cardinal_patch_matches_cox_de_boor(p):
    space, j = cardinal_space(p)
    patch = CardinalPatch(p)
    x = np.linspace(0, p + 1, 97)
    npt.assert_allclose(patch(x), space.eval_basis(j, x), atol=1e-14)
    npt.assert_allclose(patch.deriv(x), space.eval_deriv(j, x), atol=1e-14)
    # neighbours are shifts
    npt.assert_allclose(patch(x, shift=1.0), space.eval_basis(j + 1, x), atol=1e-14)


def test_errors():
    with pytest.raises(ValueError):
        KnotVector(2, [0.0, 0.5, 0.5, 1.0])
    with pytest.raises(ValueError):
        KnotVector(0, [0.0, 1.0])
    s = SplineSpace.uniform(2, 3)
    with pytest.raises(IndexError):
        s.eval_basis(5, 0.5)
    with pytest.raises(ValueError):
        s.eval_basis(0, 1.5)
    with pytest.raises(ValueError):
        CardinalPatch(4)


def test_uniform_detection_tolerates_rounding():
    kv = KnotVector.uniform(2, 1000)
    assert kv.is_uniform
    assert abs(kv.spacing - 1e-3) < 1e-18
    assert not KnotVector(2, [0, 0.3, 1.0]).is_uniform
