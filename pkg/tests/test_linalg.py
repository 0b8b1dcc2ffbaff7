import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from magstrict.linalg import (SolverConfig, SolverError, as_csr, bicgstab, saddle_matrix, solve_constrained,
                              solve_spd, spmv, tangent_basis)

from conftest import random_unit


def test_spmv_examples():
    x = np.array([1.0, -2.0, 3.5])
    assert np.array_equal(spmv(sp.identity(3, format="csr"), x), x)
    assert np.array_equal(spmv(sp.csr_matrix((3, 3)), x), np.zeros(3))
    A = as_csr([[2.0, 1.0], [0.0, 3.0]])
    assert np.array_equal(spmv(A, np.ones(2)), [3.0, 3.0])
    with pytest.raises(ValueError, match="dimension"):
        spmv(A, x)


def test_as_csr_canonical():
    A = as_csr(sp.coo_matrix(([1.0, 2.0, 3.0], ([0, 0, 0], [2, 0, 2])), shape=(1, 3)))
    assert list(A.indices) == [0, 2] and list(A.data) == [2.0, 4.0]
    with pytest.raises(ValueError):
        as_csr([[np.nan]])


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol_rel=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    assert SolverConfig().iter_cap(7) == 70


def test_spd_identity_one_iteration():
    b = np.array([1.0, -4.0, 2.5])
    x, it = solve_spd(sp.identity(3, format="csr"), b, return_iterations=True)
    assert np.allclose(x, b) and it == 1


def test_spd_examples():
    x = solve_spd(sp.diags([1.0, 2.0, 4.0]).tocsr(), np.array([1.0, 2.0, 4.0]))
    assert np.allclose(x, 1.0, rtol=1e-12)
    L = sp.diags([[-1.0] * 2, [2.0] * 3, [-1.0] * 2], [-1, 0, 1]).tocsr()
    assert np.allclose(solve_spd(L, np.array([1.0, 0.0, 0.0])), [0.75, 0.5, 0.25], rtol=1e-10)
    # dense oracle
    assert np.allclose(np.linalg.solve(L.toarray(), [1.0, 0.0, 0.0]), [0.75, 0.5, 0.25])


def test_spd_residual_contract(rng):
    n = 60
    B = rng.normal(size=(n, n))
    A = sp.csr_matrix(B @ B.T + n * np.eye(n))
    b = rng.normal(size=n)
    cfg = SolverConfig(1e-10)
    x = solve_spd(A, b, cfg)
    assert np.linalg.norm(A @ x - b) <= cfg.tol_rel * np.linalg.norm(b)


def test_spd_failure_reports_residual(rng):
    n = 40
    B = rng.normal(size=(n, n))
    A = sp.csr_matrix(B @ B.T + 1e-3 * np.eye(n))
    with pytest.raises(SolverError) as exc:
        solve_spd(A, rng.normal(size=n), SolverConfig(1e-14, max_iter=2))
    assert exc.value.residual > 0 and exc.value.iterations == 2


def test_spd_nan_rhs():
    with pytest.raises(SolverError, match="NaN"):
        solve_spd(sp.identity(2, format="csr"), np.array([1.0, np.nan]))


def test_bicgstab_nonsymmetric(rng):
    n = 50
    A = sp.csr_matrix(np.eye(n) * 4 + rng.normal(size=(n, n)) * 0.2)
    b = rng.normal(size=n)
    x = bicgstab(A, b, SolverConfig(1e-12))
    assert np.linalg.norm(A @ x - b) <= 1e-12 * np.linalg.norm(b)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_tangent_basis_orthonormal(vec):
    m = np.array([vec]) / np.linalg.norm(vec)
    t1, t2 = tangent_basis(m)
    Q = np.stack([m[0], t1[0], t2[0]])
    assert np.allclose(Q @ Q.T, np.eye(3), atol=1e-14)
    assert np.allclose(np.cross(m[0], t1[0]), t2[0])


def _saddle_oracle(A, b, m):
    K = saddle_matrix(sp.csr_matrix(A), m).toarray()
    rhs = np.concatenate([b, np.zeros(len(m))])
    return np.linalg.solve(K, rhs)[: len(b)]


def test_constraint_inactive(rng):
    m = random_unit(rng, 4)
    t1, _ = tangent_basis(m)
    b = (t1 * rng.normal(size=(4, 1))).ravel()
    alpha = 0.7
    v = solve_constrained(alpha * sp.identity(12, format="csr"), b, m)
    assert np.allclose(v, b / alpha, rtol=1e-10)


def test_constraint_blocks_normal_load(rng):
    m = random_unit(rng, 3)
    b = np.zeros(9)
    b[3:6] = m[1]
    v = solve_constrained(2.0 * sp.identity(9, format="csr"), b, m)
    assert np.allclose(v, 0.0, atol=1e-14)


def random_system(rng, n):
    m = random_unit(rng, n)
    B = rng.normal(size=(3 * n, 3 * n))
    skew = B - B.T
    spd = B @ B.T / (3 * n) + np.eye(3 * n)
    return sp.csr_matrix(spd + 0.5 * skew), rng.normal(size=3 * n), m


@pytest.mark.parametrize("seed", range(5))
def test_constrained_matches_dense_saddle(seed):
    rng = np.random.default_rng(seed)
    A, b, m = random_system(rng, 3)
    v = solve_constrained(A, b, m, SolverConfig(1e-13))
    ref = _saddle_oracle(A, b, m)
    assert np.linalg.norm(v - ref) <= 1e-10 * np.linalg.norm(ref)


@pytest.mark.parametrize("n", [5, 20, 50])
def test_tangent_and_multiplier_paths_agree(rng, n):
    A, b, m = random_system(rng, n)
    cfg = SolverConfig(1e-12)
    v1 = solve_constrained(A, b, m, cfg, method="tangent")
    v2 = solve_constrained(A, b, m, cfg, method="multiplier")
    assert np.linalg.norm(v1 - v2) <= 1e-8 * np.linalg.norm(v2)
    vmax = np.max(np.abs(v1))
    assert np.max(np.abs(np.einsum("ij,ij->i", m, v1.reshape(-1, 3)))) <= 10 * cfg.tol_rel * vmax


def test_constrained_rejects_non_unit(rng):
    m = random_unit(rng, 2)
    m[1] *= 1 + 1e-8
    with pytest.raises(ValueError, match="node 1"):
        solve_constrained(sp.identity(6, format="csr"), np.ones(6), m)
