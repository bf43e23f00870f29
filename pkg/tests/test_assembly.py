import json
import warnings

import numpy as np
import numpy.testing as npt
import pytest
import scipy.io
import scipy.sparse as sps

from wgquad import assembly as asm
from wgquad.exact_oracle import exact_mass_entry, oracle_matrix, oracle_matrix_1d
from wgquad.spline_core import KnotVector, SplineSpace


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("n", [4, 8, 16])
@pytest.mark.parametrize("strategy", ["gauss-weighted", "nc-weighted", "standard"])
def test_oracle_equivalence(p, d, n, strategy):
    space = asm.TensorSpace.uniform(p, n, d)
    amap = asm.AffineMap(tuple(1.0 + 0.5 * k for k in range(d)))
    for kind in ("mass", "stiffness"):
        A = asm.assemble(space, kind, strategy, amap)
        O = oracle_matrix(space.spaces, kind, amap.scales)
        assert asm.max_entry_difference(A, O) <= 1e-12


def test_interior_rows_1d():
    n = 1000
    h = 1.0 / n
    space = asm.TensorSpace.uniform(2, n)
    M = asm.assemble_mass_rowwise(space).toarray()
    K = asm.assemble_stiffness_rowwise(space).toarray()
    j = 500
    npt.assert_allclose(M[j, j - 2 : j + 3], h * np.array([1 / 120, 13 / 60, 11 / 20, 13 / 60, 1 / 120]),
                        atol=1e-18)
    npt.assert_allclose(K[j, j - 2 : j + 3], np.array([-1 / 6, -1 / 3, 1, -1 / 3, -1 / 6]) / h, atol=1e-12)


def test_mass_2d_is_kronecker():
    space = asm.TensorSpace.uniform(3, 10, 2)
    M = asm.assemble_mass_rowwise(space)
    M1 = oracle_matrix_1d(space.spaces[0], "mass")
    assert asm.max_entry_difference(M, sps.kron(M1, M1)) <= 1e-12


def test_anisotropic_mesh_and_map():
    space = asm.TensorSpace.uniform(2, [5, 9])
    amap = asm.AffineMap((3.0, 0.25))
    K = asm.assemble_stiffness_rowwise(space, amap)
    O = oracle_matrix(space.spaces, "stiffness", amap.scales)
    assert asm.max_entry_difference(K, O) <= 1e-12


def test_structure_and_row_sums():
    p, n = 3, 12
    space = asm.TensorSpace.uniform(p, n, 2)
    K = asm.assemble_stiffness_rowwise(space)
    M = asm.assemble_mass_rowwise(space)
    for A in (K, M):
        assert asm.max_entry_difference(A, A.T) == 0.0
        coo = A.tocoo()
        ri = np.array(np.unravel_index(coo.row, space.shape))
        ci = np.array(np.unravel_index(coo.col, space.shape))
        assert np.all(np.abs(ri - ci) <= p)
    h = 1.0 / n
    interior = [i for i in range(space.n_dof)
                if all(1 <= k <= s.dim - 2 for k, s in zip(np.unravel_index(i, space.shape), space.spaces))]
    rs = np.asarray(K.sum(axis=1)).ravel()
    # constants: rows whose support avoids the boundary functions sum to zero
    mi = np.array(np.unravel_index(np.arange(space.n_dof), space.shape)).T
    far = np.all((mi >= p) & (mi <= np.array(space.shape) - 1 - p), axis=1)
    assert np.max(np.abs(rs[far])) <= 1e-12 / h
    mrs = np.asarray(M.sum(axis=1)).ravel()
    card = np.all((mi >= p) & (mi <= n - 1), axis=1)
    npt.assert_allclose(mrs[card], h * h, rtol=1e-12)
    assert len(interior) > 0


def test_small_case_dimensions():
    A = asm.assemble_standard_gauss(asm.TensorSpace.uniform(2, 4), kind="mass")
    assert A.shape == (6, 6)
    coo = A.tocoo()
    assert np.max(np.abs(coo.row - coo.col)) == 2


def test_standard_gauss_counts():
    c = asm.EvalCounter()
    p, n, d = 2, 5, 2
    asm.assemble_standard_gauss(asm.TensorSpace.uniform(p, n, d), kind="mass", counter=c)
    assert c.get("standard", "value_evals") == n**d * (p + 1) ** d * (p + 1) ** d


def test_counter_determinism_and_workers():
    space = asm.TensorSpace.uniform(3, 20, 2)
    c1, c2 = asm.EvalCounter(), asm.EvalCounter()
    A = asm.assemble_stiffness_rowwise(space, counter=c1)
    B = asm._assemble_rowwise(space, None, None, c2, "stiffness", workers=4, chunk=37)
    assert c1.report() == c2.report()
    assert np.array_equal(A.indptr, B.indptr) and np.array_equal(A.indices, B.indices)
    assert np.array_equal(A.data, B.data)


def test_counter_is_monotone_and_resettable():
    c = asm.EvalCounter()
    space = asm.TensorSpace.uniform(2, 6)
    asm.assemble_mass_rowwise(space, counter=c)
    first = c.get("gauss-weighted", "value_evals")
    asm.assemble_mass_rowwise(space, counter=c)
    assert c.get("gauss-weighted", "value_evals") == 2 * first
    with pytest.raises(ValueError):
        c.add("gauss-weighted", value_evals=-1)
    c.reset()
    assert c.report() == []
    data = json.loads(asm.EvalCounter().to_json())
    assert data == []


def test_count_ratios_per_row():
    # interior rows only: per-row ratio is (NC count / Gauss count)^d
    for p, expect in ((2, (13 / 9) ** 2), (3, (25 / 16) ** 2)):
        (st, nc), c = asm.measure_count_ratio(asm.TensorSpace.uniform(p, 12, 2), "mass")
        assert nc == pytest.approx(expect, rel=1e-14)
        assert nc < ((2 * p + 1) / (p + 1)) ** 2
        assert c.get("gauss-weighted", "rows") + c.get("gauss-weighted", "fallback_rows") == (12 + p) ** 2


def test_count_ratio_needs_counters():
    with pytest.raises(ValueError):
        asm.count_ratio(asm.EvalCounter())


def test_redundant_counting_switch():
    on, off = asm.EvalCounter(True), asm.EvalCounter(False)
    space = asm.TensorSpace.uniform(2, 6)
    asm.assemble(space, "stiffness", "nc-weighted", counter=on)
    asm.assemble(space, "stiffness", "nc-weighted", counter=off)
    assert on.get("nc-weighted", "deriv_evals") < off.get("nc-weighted", "deriv_evals")


def test_degenerate_mesh_falls_back():
    space = asm.TensorSpace.uniform(3, 2)
    with pytest.warns(RuntimeWarning):
        A = asm.assemble_mass_rowwise(space)
    assert asm.max_entry_difference(A, oracle_matrix(space.spaces, "mass")) <= 1e-14


def test_rejects_nonuniform_and_missing_rules():
    space = asm.TensorSpace((SplineSpace(KnotVector(2, [0, 0.2, 0.5, 0.7, 1.0])),))
    with pytest.raises(ValueError):
        asm.assemble_mass_rowwise(space)
    with pytest.raises(ValueError):
        asm.assemble_mass_rowwise(asm.TensorSpace.uniform(4, 10))
    # the baseline handles any degree
    A = asm.assemble_standard_gauss(asm.TensorSpace.uniform(4, 10), kind="stiffness")
    O = oracle_matrix(asm.TensorSpace.uniform(4, 10).spaces, "stiffness")
    assert asm.max_entry_difference(A, O) <= 1e-12


@pytest.mark.parametrize("p", [2, 3])
def test_load_vector(p):
    n = 12
    h = 1.0 / n
    space = asm.TensorSpace.uniform(p, n)
    s = space.spaces[0]
    b = asm.assemble_load(space, None, lambda x: np.ones(len(x)))
    npt.assert_allclose(b[p:n], h, rtol=1e-13)
    npt.assert_allclose(b.sum(), 1.0, rtol=1e-13)
    i = p + 3
    b = asm.assemble_load(space, None, lambda x: s.eval_basis(i, x[:, 0]))
    ref = [exact_mass_entry(s, i, j) for j in range(s.dim)]
    npt.assert_allclose(b, ref, atol=1e-12)
    b = asm.assemble_load(space, None, lambda x: x[:, 0])
    gx, gw = np.polynomial.legendre.leggauss(p + 2)
    ref = np.zeros(s.dim)
    for e in range(n):
        x = (e + (gx + 1) / 2) * h
        for j in range(s.dim):
            ref[j] += np.sum(gw / 2 * h * x * s.eval_basis(j, x))
    npt.assert_allclose(b, ref, atol=1e-12)


def test_load_2d_with_map():
    space = asm.TensorSpace.uniform(2, 6, 2)
    amap = asm.AffineMap((2.0, 3.0))
    b = asm.assemble_load(space, amap, lambda x: np.ones(len(x)))
    npt.assert_allclose(b.sum(), 6.0, rtol=1e-13)


def test_matrix_market_and_band_export(tmp_path):
    space = asm.TensorSpace.uniform(2, 5, 2)
    K = asm.assemble_stiffness_rowwise(space)
    path = tmp_path / "k.mtx"
    asm.write_matrix_market(path, K, "test")
    R = scipy.io.mmread(str(path))
    assert asm.max_entry_difference(sps.csr_matrix(R), K) == 0.0
    band = asm.band_dict(K, space)
    assert band["n"] == space.n_dof and band["p"] == 2 and band["d"] == 2
    diag = next(b for b in band["bands"] if b["offset"] == [0, 0])
    npt.assert_array_equal(diag["values"], K.diagonal())
    # upper half of the stencil, including the diagonal
    assert len(band["bands"]) == (25 + 1) // 2


def test_affine_map_validation():
    with pytest.raises(ValueError):
        asm.AffineMap((1.0, -1.0))
    m = asm.AffineMap((2.0, 4.0), (1.0, 0.0))
    assert m.det == 8.0
    npt.assert_allclose(m([0.5, 0.5]), [2.0, 2.0])
    npt.assert_allclose(m.inverse_transpose, np.diag([0.5, 0.25]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        asm.TensorSpace.uniform(2, 3)
