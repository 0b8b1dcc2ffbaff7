import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magstrict.material import (Rank4Tensor, TensorError, diagonal_tensor, isotropic_tensor, magnetic_strain,
                                magnetostrictive_field, p1_strain, random_tensor, stress)


def test_diagonal_tensor_entries():
    lam = diagonal_tensor(40)
    assert lam.entries[0, 0, 0, 0] == lam.entries[1, 1, 1, 1] == 40
    assert lam.entries[0, 0, 1, 1] == lam.entries[0, 1, 0, 1] == 0
    assert np.count_nonzero(lam.entries) == 2
    assert lam.mode == "experimental" and lam.bound == 40
    assert diagonal_tensor(0).is_zero
    assert diagonal_tensor(10).quadratic(np.eye(2)) == 20
    with pytest.raises(TensorError):
        diagonal_tensor(-1)


def test_strict_mode_rejects_semidefinite():
    with pytest.raises(TensorError, match="positive definite"):
        Rank4Tensor(diagonal_tensor(1).entries, mode="strict")
    assert isotropic_tensor(1.0, 0.5).coercivity() == pytest.approx(1.0)


def test_asymmetric_tensor_rejected(rng):
    lam = isotropic_tensor(1.0, 1.0).entries.copy()
    lam[0, 1, 0, 0] += 0.1
    with pytest.raises(TensorError, match="symmetry"):
        Rank4Tensor(lam)


def test_random_tensors_valid(rng):
    for _ in range(5):
        lam = random_tensor(rng)
        assert lam.coercivity() > 0
        e = lam.entries
        assert np.array_equal(e, e.transpose(1, 0, 2, 3))
        assert np.array_equal(e, e.transpose(2, 3, 0, 1))


def test_magnetic_strain_examples():
    lam = diagonal_tensor(10, label="magnetic")
    assert np.allclose(magnetic_strain(lam, [0.6, 0.8, 0.0]), np.diag([3.6, 6.4]))
    assert np.array_equal(magnetic_strain(lam, [0.0, 0.0, 1.0]), np.zeros((2, 2)))
    assert np.array_equal(magnetic_strain(diagonal_tensor(0), [0.6, 0.8, 0.0]), np.zeros((2, 2)))


def test_stress_examples():
    lam = diagonal_tensor(40)
    assert np.allclose(stress(lam, np.diag([0.1, 0.2]), np.diag([0.05, 0.0])), np.diag([2.0, 8.0]))
    eps = np.array([[0.1, 0.3], [0.3, -0.2]])
    assert np.array_equal(stress(isotropic_tensor(2, 1), eps, eps), np.zeros((2, 2)))
    assert np.array_equal(stress(diagonal_tensor(0), eps, np.zeros((2, 2))), np.zeros((2, 2)))


def test_magnetostrictive_field_examples():
    lam = diagonal_tensor(10, label="magnetic")
    assert np.allclose(magnetostrictive_field(lam, np.diag([2.0, -1.0]), [0.6, 0.8, 0.0]), [12.0, -8.0, 0.0])
    assert np.array_equal(magnetostrictive_field(lam, np.zeros((2, 2)), [0.6, 0.8, 0.0]), np.zeros(3))
    assert np.array_equal(magnetostrictive_field(lam, np.eye(2), [0.0, 0.0, 1.0]), np.zeros(3))


def _sym(rng):
    a = rng.normal(size=(2, 2))
    return a + a.T


def test_reordering_identity(rng):
    # (lam_e eps^m(m)) : xi == (lam_e xi) : (lam_m m m^T) by major symmetry
    for _ in range(20):
        le, lm = random_tensor(rng), random_tensor(rng)
        m = rng.normal(size=3)
        xi = _sym(rng)
        lhs = np.sum(le.contract(magnetic_strain(lm, m)) * xi)
        mm = np.outer(m[:2], m[:2])
        rhs = np.sum(le.contract(xi) * lm.contract(mm))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_field_superposition(rng):
    lm = random_tensor(rng)
    s1, s2 = _sym(rng), _sym(rng)
    m1, m2 = rng.normal(size=3), rng.normal(size=3)
    a, b = 0.3, -1.7
    assert np.allclose(magnetostrictive_field(lm, a * s1 + b * s2, m1),
                       a * magnetostrictive_field(lm, s1, m1) + b * magnetostrictive_field(lm, s2, m1))
    assert np.allclose(magnetostrictive_field(lm, s1, a * m1 + b * m2),
                       a * magnetostrictive_field(lm, s1, m1) + b * magnetostrictive_field(lm, s1, m2))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_field_bound(mvec, evec):
    # |h_m| <= C (|eps(u)| + 1) for |m| <= 1 with C from the entry bound
    m = np.array(mvec)
    if np.linalg.norm(m) > 1:
        m = m / np.linalg.norm(m)
    eps = np.array([[evec[0], evec[1]], [evec[1], evec[2]]])
    le, lm = diagonal_tensor(40), diagonal_tensor(10, label="magnetic")
    h = magnetostrictive_field(lm, stress(le, eps, magnetic_strain(lm, m)), m)
    C = 16 * le.bound * lm.bound * (1 + 16 * lm.bound)
    assert np.linalg.norm(h) <= C * (np.linalg.norm(eps) + 1)


def test_p1_strain_linear_fields(mesh2):
    x = mesh2.nodes
    u = np.column_stack([x[:, 0], np.zeros(len(x))])
    assert np.allclose(p1_strain(mesh2, u), np.diag([1.0, 0.0]))
    u = np.column_stack([x[:, 1], x[:, 0]])
    assert np.allclose(p1_strain(mesh2, u, 5), [[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(p1_strain(mesh2, np.zeros_like(x)), np.zeros((mesh2.n_elements, 2, 2)))
