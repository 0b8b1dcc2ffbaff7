"""Fourth-order material tensors and the pointwise magnetoelastic algebra.

Strain-space indices run over the spatial dimension ``d``; magnetizations
always carry three components and only the first ``d`` of them enter the
quadratic magnetic strain.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


class TensorError(ValueError):
    pass


def _symmetric_basis(d: int) -> list[np.ndarray]:
    basis = []
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
    return basis


@dataclass(frozen=True, eq=False)
class Rank4Tensor:
    """Symmetric tensor ``lam[i, j, p, q]``.

    ``mode="strict"`` demands positive definiteness on symmetric matrices;
    ``mode="experimental"`` accepts a positive semidefinite tensor whose
    normal block (``lam[i, i, j, j]``) is positive definite or zero.
    """

    entries: np.ndarray
    label: str = "elastic"
    mode: str = "strict"

    def __post_init__(self):
        lam = np.array(self.entries, dtype=float)
        if lam.ndim != 4 or len(set(lam.shape)) != 1:
            raise TensorError(f"expected a d x d x d x d array, got shape {lam.shape}")
        if not np.all(np.isfinite(lam)):
            raise TensorError("non-finite tensor entry")
        lam.setflags(write=False)
        object.__setattr__(self, "entries", lam)
        check_symmetries(lam)
        if self.mode not in ("strict", "experimental"):
            raise TensorError(f"unknown mode {self.mode!r}")
        lo = self.coercivity()
        if self.mode == "strict" and lo <= 0:
            raise TensorError(f"tensor is not positive definite (lambda* = {lo:.3e})")
        if self.mode == "experimental":
            if lo < -1e-12 * max(self.bound, 1.0):
                raise TensorError("tensor is indefinite")
            normal = np.einsum("iijj->ij", lam)
            if np.any(normal) and np.linalg.eigvalsh(normal).min() <= 0:
                raise TensorError("normal block is not positive definite")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def bound(self) -> float:
        """Largest entry modulus."""
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0

    @property
    def is_zero(self) -> bool:
        return not np.any(self.entries)

    def contract(self, xi: np.ndarray) -> np.ndarray:
        """``(lam : xi)_ij = sum_pq lam_ijpq xi_pq``; ``xi`` may be batched."""
        return np.einsum("ijpq,...pq->...ij", self.entries, xi)

    def quadratic(self, xi: np.ndarray) -> float:
        return float(np.einsum("ij,ijpq,pq->", xi, self.entries, xi))

    def coercivity(self) -> float:
        """Smallest value of ``lam xi xi / |xi|^2`` over symmetric ``xi``."""
        basis = _symmetric_basis(self.dim)
        gram = np.array([[self.quadratic_pair(a, b) for b in basis] for a in basis])
        metric = np.array([[np.sum(a * b) for b in basis] for a in basis])
        # generalized eigenproblem gram x = mu metric x
        L = np.linalg.cholesky(metric)
        Linv = np.linalg.inv(L)
        return float(np.linalg.eigvalsh(Linv @ gram @ Linv.T).min())

    def quadratic_pair(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.einsum("ij,ijpq,pq->", a, self.entries, b))


def check_symmetries(lam: np.ndarray, tol: float = 0.0) -> None:
    """Raise unless minor and major symmetries hold (exactly by default)."""
    for perm, name in (((1, 0, 2, 3), "ij"), ((0, 1, 3, 2), "pq"), ((2, 3, 0, 1), "major")):
        if np.max(np.abs(lam - lam.transpose(perm)), initial=0.0) > tol:
            raise TensorError(f"tensor violates {name} symmetry")


def diagonal_tensor(c: float, dim: int = 2, label: str = "elastic") -> Rank4Tensor:
    """Tensor with ``lam_iiii = c`` for all i and every other entry zero."""
    if c < 0:
        raise TensorError(f"tensor constant must be non-negative, got {c}")
    lam = np.zeros((dim,) * 4)
    for i in range(dim):
        lam[i, i, i, i] = c
    return Rank4Tensor(lam, label=label, mode="experimental")


def isotropic_tensor(lame_lambda: float, mu: float, dim: int = 2, label: str = "elastic") -> Rank4Tensor:
    eye = np.eye(dim)
    lam = (lame_lambda * np.einsum("ij,pq->ijpq", eye, eye)
           + mu * (np.einsum("ip,jq->ijpq", eye, eye) + np.einsum("iq,jp->ijpq", eye, eye)))
    return Rank4Tensor(lam, label=label, mode="strict")


def random_tensor(rng: np.random.Generator, dim: int = 2, label: str = "elastic") -> Rank4Tensor:
    """Random strictly positive definite symmetric tensor (tests, sweeps)."""
    basis = _symmetric_basis(dim)
    nb = len(basis)
    G = rng.normal(size=(nb, nb))
    G = G @ G.T + nb * np.eye(nb)
    # basis matrices are orthogonal; normalize them to make G the Gram matrix
    nbasis = [b / np.linalg.norm(b) for b in basis]
    lam = np.zeros((dim,) * 4)
    for a, b in itertools.product(range(nb), repeat=2):
        lam += G[a, b] * np.einsum("ij,pq->ijpq", nbasis[a], nbasis[b])
    lam = 0.5 * (lam + lam.transpose(2, 3, 0, 1))
    return Rank4Tensor(lam, label=label, mode="strict")


def magnetic_strain(lam_m: Rank4Tensor, m: np.ndarray) -> np.ndarray:
    """``eps^m_ij = sum_pq lam_ijpq m_p m_q`` (batched over leading axes)."""
    m = np.asarray(m, dtype=float)
    d = lam_m.dim
    md = m[..., :d]
    return np.einsum("ijpq,...p,...q->...ij", lam_m.entries, md, md)


def stress(lam_e: Rank4Tensor, eps_u: np.ndarray, eps_m: np.ndarray) -> np.ndarray:
    """Hooke's law on the elastic part ``eps_u - eps_m`` of the strain."""
    return lam_e.contract(np.asarray(eps_u) - np.asarray(eps_m))


def magnetostrictive_field(lam_m: Rank4Tensor, sigma: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``(h_m)_q = sum_ijp lam_ijpq sigma_ij m_p`` as a 3-vector.

    Components with ``q > d`` vanish.
    """
    m = np.asarray(m, dtype=float)
    d = lam_m.dim
    h = np.zeros(np.broadcast_shapes(m.shape[:-1], np.shape(sigma)[:-2]) + (3,))
    h[..., :d] = np.einsum("ijpq,...ij,...p->...q", lam_m.entries, sigma, m[..., :d])
    return h


def p1_strain(mesh, u: np.ndarray, element_index=None) -> np.ndarray:
    """Constant symmetric gradient of the P1 interpolant of ``u``.

    ``u`` is (N, d).  Returns (d, d) for one element or (M, d, d) for all.
    """
    grads, _ = mesh.gradients()
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_nodes, mesh.dim):
        raise ValueError(f"displacement must have shape ({mesh.n_nodes}, {mesh.dim})")
    if element_index is None:
        ue = u[mesh.elements]                       # (M, 3, d)
        G = np.einsum("eai,eaj->eij", ue, grads)    # du_i/dx_j
    else:
        ue = u[mesh.elements[element_index]]
        G = np.einsum("ai,aj->ij", ue, grads[element_index])
    return 0.5 * (G + np.swapaxes(G, -1, -2))
