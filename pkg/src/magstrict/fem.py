"""P1 assembly of the bilinear forms and load vectors of the coupled system.

Vector-valued unknowns are stored node-major: the degree of freedom of
component ``c`` at node ``z`` is ``z * n_comp + c``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .material import Rank4Tensor, magnetic_strain, magnetostrictive_field, p1_strain
from .mesh import Mesh

KINDS = ("magnetization", "tangent", "displacement", "velocity", "general")
UNIT_TOL = 1e-12


class FieldError(ValueError):
    pass


@dataclass
class NodalVectorField:
    """Nodal values of a P1 vector field with a kind tag."""

    mesh: Mesh
    values: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.kind not in KINDS:
            raise FieldError(f"unknown kind {self.kind!r}")
        if self.values.ndim != 2 or self.values.shape[0] != self.mesh.n_nodes:
            raise FieldError(f"values must have shape ({self.mesh.n_nodes}, n_comp)")
        if self.kind in ("magnetization", "tangent") and self.n_comp != 3:
            raise FieldError(f"{self.kind} fields have 3 components")
        if self.kind in ("displacement", "velocity") and self.n_comp != self.mesh.dim:
            raise FieldError(f"{self.kind} fields have {self.mesh.dim} components")
        self.validate()

    @property
    def n_comp(self) -> int:
        return self.values.shape[1]

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def validate(self, tol: float = UNIT_TOL) -> None:
        if not np.all(np.isfinite(self.values)):
            raise FieldError("non-finite nodal value")
        if self.kind == "magnetization":
            dev = np.abs(np.linalg.norm(self.values, axis=1) - 1.0)
            bad = np.flatnonzero(dev > tol)
            if bad.size:
                raise FieldError(f"node {int(bad[0])}: |m| deviates from 1 by {dev[bad[0]]:.3e}")
        elif self.kind in ("displacement", "velocity"):
            bnd = np.flatnonzero(self.mesh.boundary_mask & np.any(self.values != 0, axis=1))
            if bnd.size:
                raise FieldError(f"node {int(bnd[0])}: {self.kind} must vanish on the boundary")


def free_dofs(mesh: Mesh, n_comp: int) -> np.ndarray:
    nodes = mesh.free_nodes
    return (nodes[:, None] * n_comp + np.arange(n_comp)[None, :]).ravel()


def _scatter(mesh: Mesh, local: np.ndarray, n_comp: int = 1) -> sp.csr_matrix:
    """Sum element matrices ``local[e, a*c, b*c]`` into a global CSR matrix."""
    k = mesh.elements.shape[1]
    dofs = (mesh.elements[:, :, None] * n_comp + np.arange(n_comp)[None, None, :]).reshape(len(mesh.elements), k * n_comp)
    rows = np.repeat(dofs, k * n_comp, axis=1).ravel()
    cols = np.tile(dofs, (1, k * n_comp)).ravel()
    n = mesh.n_nodes * n_comp
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def _replicate(A: sp.spmatrix, n_comp: int) -> sp.csr_matrix:
    if n_comp == 1:
        return sp.csr_matrix(A)
    return sp.kron(A, sp.identity(n_comp), format="csr")


def lumped_weights(mesh: Mesh) -> np.ndarray:
    """Row sums of the P1 mass matrix (nodal patch area over three)."""
    _, area = mesh.gradients()
    w = np.zeros(mesh.n_nodes)
    np.add.at(w, mesh.elements.ravel(), np.repeat(area / 3.0, 3))
    return w


def assemble_mass(mesh: Mesh, n_comp: int = 1, lumped: bool = False) -> sp.csr_matrix:
    if lumped:
        return _replicate(sp.diags(lumped_weights(mesh)), n_comp)
    _, area = mesh.gradients()
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return _replicate(_scatter(mesh, area[:, None, None] * ref), n_comp)


def assemble_stiffness(mesh: Mesh, n_comp: int = 1) -> sp.csr_matrix:
    grads, area = mesh.gradients()
    local = area[:, None, None] * np.einsum("eai,ebi->eab", grads, grads)
    return _replicate(_scatter(mesh, local), n_comp)


def basis_strains(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Strains ``E[e, a, c]`` (d x d) of the vector hat function (node a, component c)."""
    grads, area = mesh.gradients()
    d = mesh.dim
    eye = np.eye(d)
    # E[e,a,c,i,j] = 1/2 (delta_ic g_aj + delta_jc g_ai)
    E = 0.5 * (np.einsum("ci,eaj->eacij", eye, grads) + np.einsum("cj,eai->eacij", eye, grads))
    return E, area


def assemble_elasticity(mesh: Mesh, lam_e: Rank4Tensor) -> sp.csr_matrix:
    """``(lam_e eps(u), eps(psi))`` over all ``d * N`` displacement dofs."""
    E, area = basis_strains(mesh)
    d = mesh.dim
    local = area[:, None, None, None, None] * np.einsum("eacij,ijpq,ebfpq->eacbf", E, lam_e.entries, E)
    k = mesh.elements.shape[1]
    return _scatter(mesh, local.reshape(len(area), k * d, k * d), n_comp=d)


def cross_matrix(m: np.ndarray) -> np.ndarray:
    """Batched ``[m]_x`` with ``[m]_x v = m x v``."""
    X = np.zeros(m.shape[:-1] + (3, 3))
    X[..., 0, 1], X[..., 0, 2] = -m[..., 2], m[..., 1]
    X[..., 1, 0], X[..., 1, 2] = m[..., 2], -m[..., 0]
    X[..., 2, 0], X[..., 2, 1] = -m[..., 1], m[..., 0]
    return X


def assemble_skew(mesh: Mesh, m, weights: np.ndarray | None = None) -> sp.csr_matrix:
    """Lumped ``((m x v), phi)``: block ``w_z [m(z)]_x`` per node."""
    mv = m.values if isinstance(m, NodalVectorField) else np.asarray(m, dtype=float)
    w = lumped_weights(mesh) if weights is None else weights
    blocks = w[:, None, None] * cross_matrix(mv)
    return _block_diag(blocks)


def _block_diag(blocks: np.ndarray) -> sp.csr_matrix:
    n, b, _ = blocks.shape
    rows = (np.arange(n)[:, None, None] * b + np.arange(b)[None, :, None]).repeat(b, axis=2)
    cols = (np.arange(n)[:, None, None] * b + np.arange(b)[None, None, :]).repeat(b, axis=1)
    A = sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(n * b, n * b))
    A.sort_indices()
    return A


def _bary_moment(powers) -> float:
    """Integral of a barycentric monomial over a triangle of unit area."""
    num = math.prod(math.factorial(p) for p in powers)
    return 2.0 * num / math.factorial(sum(powers) + 2)


def _moment_tensor(order: int) -> np.ndarray:
    """``T[a, b, ...] = (1/|T|) int lambda_a lambda_b ...`` for ``order`` factors."""
    T = np.zeros((3,) * order)
    for idx in itertools.product(range(3), repeat=order):
        T[idx] = _bary_moment([idx.count(a) for a in range(3)])
    return T


_M2 = _moment_tensor(2)
_M4 = _moment_tensor(4)


def _values(f):
    return f.values if isinstance(f, NodalVectorField) else np.asarray(f, dtype=float)


def assemble_h_load(mesh: Mesh, u, m, lam_e: Rank4Tensor, lam_m: Rank4Tensor,
                    quadrature: str = "vertex") -> np.ndarray:
    """Load vector ``(h_m(u, m), phi)`` over the 3N magnetization dofs."""
    mv, uv = _values(m), _values(u)
    N = mesh.n_nodes
    if lam_m.is_zero:
        return np.zeros(3 * N)
    _, area = mesh.gradients()
    eps_u = p1_strain(mesh, uv)                       # (M, d, d)
    me = mv[mesh.elements]                            # (M, 3, 3)
    load = np.zeros((N, 3))
    if quadrature == "vertex":
        eps_m = magnetic_strain(lam_m, me)            # (M, 3, d, d)
        sigma = lam_e.contract(eps_u[:, None] - eps_m)
        h = magnetostrictive_field(lam_m, sigma, me)  # (M, 3, 3)
        np.add.at(load, mesh.elements.ravel(), (area[:, None, None] / 3.0 * h).reshape(-1, 3))
    elif quadrature == "consistent":
        d = lam_m.dim
        L, Le = lam_m.entries, lam_e.entries
        md = me[..., :d]
        # linear part: lam_m (lam_e eps_u) m
        C = np.einsum("ijpq,ijrs,ers->eqp", L, Le, eps_u)
        lin = np.einsum("eqp,ebp,ab->eaq", C, md, _M2)
        # cubic part: lam_m (lam_e lam_m m m) m
        Q = np.einsum("ijpq,ijrs,rstu->qptu", L, Le, L)
        cub = np.einsum("qptu,ebp,ect,efu,abcf->eaq", Q, md, md, md, _M4)
        hq = np.zeros(me.shape)
        hq[..., :d] = area[:, None, None] * (lin - cub)
        np.add.at(load, mesh.elements.ravel(), hq.reshape(-1, 3))
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    return load.ravel()


def element_magnetic_strain(mesh: Mesh, m, lam_m: Rank4Tensor, quadrature: str = "vertex") -> np.ndarray:
    """Element averages of ``eps^m(m_h)``, shape (M, d, d)."""
    me = _values(m)[mesh.elements]
    d = lam_m.dim
    if quadrature == "vertex":
        return magnetic_strain(lam_m, me).mean(axis=1)
    if quadrature == "consistent":
        md = me[..., :d]
        mm = np.einsum("eat,ebu,ab->etu", md, md, _M2)
        return np.einsum("ijtu,etu->eij", lam_m.entries, mm)
    raise ValueError(f"unknown quadrature {quadrature!r}")


def assemble_elastic_rhs(mesh: Mesh, m, lam_e: Rank4Tensor, lam_m: Rank4Tensor,
                         quadrature: str = "vertex") -> np.ndarray:
    """``(lam_e eps^m(m), eps(psi))`` over all ``d * N`` displacement dofs."""
    d = mesh.dim
    N = mesh.n_nodes
    if lam_m.is_zero or lam_e.is_zero:
        return np.zeros(d * N)
    E, area = basis_strains(mesh)
    sig = lam_e.contract(element_magnetic_strain(mesh, m, lam_m, quadrature))   # (M, d, d)
    local = area[:, None, None] * np.einsum("eij,eacij->eac", sig, E)
    rhs = np.zeros((N, d))
    np.add.at(rhs, mesh.elements.ravel(), local.reshape(-1, d))
    return rhs.ravel()


def initial_magnetization(x: np.ndarray, s: float) -> np.ndarray:
    """Blow-up benchmark profile evaluated at points ``x`` (n, 2)."""
    if not s > 0:
        raise ValueError(f"profile parameter s must be positive, got {s}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r2 = np.sum(x**2, axis=1)
    r = np.sqrt(r2)
    A = (1.0 - 2.0 * r) ** 4 / s
    denom = A**2 + r2
    m = np.empty((len(x), 3))
    m[:, 0] = 2 * x[:, 0] * A / denom
    m[:, 1] = 2 * x[:, 1] * A / denom
    m[:, 2] = (A**2 - r2) / denom
    outside = r >= 0.5
    m[outside] = (0.0, 0.0, -1.0)
    return m


def interpolate_initial_m(mesh: Mesh, s: float) -> NodalVectorField:
    m = initial_magnetization(mesh.nodes, s)
    m /= np.linalg.norm(m, axis=1)[:, None]
    return NodalVectorField(mesh, m, "magnetization")
