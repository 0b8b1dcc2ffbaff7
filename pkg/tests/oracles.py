"""Independent dense reference constructions used by several test modules."""
import numpy as np
import scipy.linalg as la


def dense_p1_matrices(mesh):
    """Stiffness (cotangent-free, via gradients of the affine map) and lumped weights."""
    N = mesh.n_nodes
    K = np.zeros((N, N))
    w = np.zeros(N)
    ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    for tri in mesh.elements:
        x = mesh.nodes[tri]
        J = np.column_stack([x[1] - x[0], x[2] - x[0]])
        area = abs(np.linalg.det(J)) / 2
        G = ref @ np.linalg.inv(J)
        K[np.ix_(tri, tri)] += area * G @ G.T
        w[tri] += area / 3
    return K, w


def cross(a):
    return np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])


def dense_llg_saddle_solve(mesh, m, alpha, theta, k, c_exch):
    """Solve the tangent-plane step as a dense Lagrange system with LU."""
    N = mesh.n_nodes
    K, w = dense_p1_matrices(mesh)
    K3 = np.kron(K, np.eye(3))
    A = alpha * np.kron(np.diag(w), np.eye(3)) + theta * k * c_exch * K3
    for z in range(N):
        A[3 * z:3 * z + 3, 3 * z:3 * z + 3] += w[z] * cross(m[z])
    b = -c_exch * K3 @ m.ravel()
    C = np.zeros((N, 3 * N))
    for z in range(N):
        C[z, 3 * z:3 * z + 3] = m[z]
    S = np.block([[A, C.T], [C, np.zeros((N, N))]])
    sol = la.lu_solve(la.lu_factor(S), np.concatenate([b, np.zeros(N)]))
    return sol[:3 * N].reshape(N, 3)


def random_unit(rng, n):
    m = rng.normal(size=(n, 3))
    return m / np.linalg.norm(m, axis=1)[:, None]
