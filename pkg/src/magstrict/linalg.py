"""Sparse storage and the two Krylov solves used per time step.

Matrices are ``scipy.sparse.csr_matrix`` with canonical (sorted, duplicate
free) indices.  The SPD momentum system is solved by Jacobi-preconditioned
conjugate gradients; the nonsymmetric tangent-plane system by
Jacobi-preconditioned BiCGSTAB after eliminating the nodal constraints.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

UNIT_TOL = 1e-10


class SolverError(RuntimeError):
    """Iteration failed to reach the requested residual."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")


@dataclass(frozen=True)
class SolverConfig:
    tol_rel: float = 1e-10
    max_iter: int | None = None  # None -> 10 * n

    def __post_init__(self):
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def iter_cap(self, n: int) -> int:
        return self.max_iter if self.max_iter is not None else max(10 * n, 1)


def as_csr(A) -> sp.csr_matrix:
    """Canonical CSR copy of ``A``; rejects non-finite entries."""
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    if not np.all(np.isfinite(A.data)):
        raise ValueError("matrix has non-finite entries")
    return A


def spmv(A, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape} times vector {x.shape}")
    return A @ x


def _jacobi(A) -> np.ndarray:
    d = A.diagonal().astype(float)
    inv = np.ones_like(d)
    nz = np.abs(d) > 0
    inv[nz] = 1.0 / d[nz]
    return inv


def _check_rhs(A, b):
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
        raise ValueError(f"dimension mismatch: matrix {A.shape}, rhs {b.shape}")
    if not np.all(np.isfinite(b)):
        raise SolverError("NaN or inf in right-hand side")
    return b


def solve_spd(A, b, cfg: SolverConfig = SolverConfig(), x0=None, return_iterations: bool = False):
    """Preconditioned CG with stopping rule ``||Ax - b|| <= tol_rel ||b||``."""
    b = _check_rhs(A, b)
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        x = np.zeros(n)
        return (x, 0) if return_iterations else x
    dinv = _jacobi(A)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    target = cfg.tol_rel * bnorm
    res = np.linalg.norm(r)
    it = 0
    if res > target:
        z = dinv * r
        p = z.copy()
        rz = r @ z
        for it in range(1, cfg.iter_cap(n) + 1):
            Ap = A @ p
            pAp = p @ Ap
            if not np.isfinite(pAp) or pAp <= 0:
                raise SolverError("matrix is not positive definite", res / bnorm, it)
            step = rz / pAp
            x += step * p
            r -= step * Ap
            res = np.linalg.norm(r)
            if not np.isfinite(res):
                raise SolverError("NaN detected", res, it)
            if res <= target:
                break
            z = dinv * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        else:
            raise SolverError("CG did not converge", res / bnorm, it)
        # recurrence residual drifts; confirm with the true residual
        res = np.linalg.norm(b - A @ x)
        if res > target:
            x, extra = solve_spd(A, b, cfg, x0=x, return_iterations=True)
            it += extra
    return (x, it) if return_iterations else x


def bicgstab(A, b, cfg: SolverConfig = SolverConfig(), x0=None, return_iterations: bool = False):
    """Right-preconditioned BiCGSTAB for nonsymmetric systems."""
    b = _check_rhs(A, b)
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        x = np.zeros(n)
        return (x, 0) if return_iterations else x
    dinv = _jacobi(A)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    target = cfg.tol_rel * bnorm
    cap = cfg.iter_cap(n)
    it = 0
    for _restart in range(3):
        r = b - A @ x
        res = np.linalg.norm(r)
        if res <= target:
            break
        r_hat = r.copy()
        rho = alpha = omega = 1.0
        v = np.zeros(n)
        p = np.zeros(n)
        converged = False
        while it < cap:
            it += 1
            rho_new = r_hat @ r
            if rho_new == 0.0 or omega == 0.0:
                break  # breakdown, restart from current iterate
            beta = (rho_new / rho) * (alpha / omega)
            rho = rho_new
            p = r + beta * (p - omega * v)
            phat = dinv * p
            v = A @ phat
            denom = r_hat @ v
            if denom == 0.0:
                break
            alpha = rho / denom
            s = r - alpha * v
            if np.linalg.norm(s) <= target:
                x += alpha * phat
                converged = True
                break
            shat = dinv * s
            t = A @ shat
            tt = t @ t
            omega = (t @ s) / tt if tt > 0 else 0.0
            x += alpha * phat + omega * shat
            r = s - omega * t
            res = np.linalg.norm(r)
            if not np.isfinite(res):
                raise SolverError("NaN detected", res, it)
            if res <= target:
                converged = True
                break
        res = np.linalg.norm(b - A @ x)
        if converged and res <= target:
            break
        if it >= cap:
            break
    res = np.linalg.norm(b - A @ x)
    if res > target:
        raise SolverError("BiCGSTAB did not converge", res / bnorm, it)
    return (x, it) if return_iterations else x


def tangent_basis(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair spanning the plane orthogonal to each row of ``m``.

    ``t1`` is ``m`` crossed with the coordinate axis least aligned with it,
    normalized; ``t2 = m x t1``.
    """
    m = np.asarray(m, dtype=float)
    axis = np.argmin(np.abs(m), axis=1)
    e = np.zeros_like(m)
    e[np.arange(len(m)), axis] = 1.0
    t1 = np.cross(m, e)
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(m, t1)
    return t1, t2


def tangent_projector(m: np.ndarray) -> sp.csr_matrix:
    """Block-diagonal 3N x 2N matrix whose columns are the tangent bases."""
    t1, t2 = tangent_basis(m)
    n = m.shape[0]
    rows = np.repeat(np.arange(3 * n), 2)
    cols = (2 * np.arange(n)[:, None, None] + np.arange(2)[None, None, :]).repeat(3, axis=1).ravel()
    vals = np.stack([t1, t2], axis=2).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(3 * n, 2 * n))


def _check_constraints(m: np.ndarray, n_unknowns: int) -> np.ndarray:
    m = np.asarray(m, dtype=float).reshape(-1, 3)
    if 3 * m.shape[0] != n_unknowns:
        raise ValueError("constraint count does not match 3N unknowns")
    dev = np.abs(np.linalg.norm(m, axis=1) - 1.0)
    if np.any(dev > UNIT_TOL):
        z = int(np.argmax(dev))
        raise ValueError(f"constraint vector at node {z} deviates from unit norm by {dev[z]:.3e}")
    return m


def saddle_matrix(A, m: np.ndarray) -> sp.csr_matrix:
    """``[[A, B^T], [B, 0]]`` with row z of B equal to m(z) on node z."""
    n = m.shape[0]
    B = sp.csr_matrix((m.ravel(), (np.repeat(np.arange(n), 3), np.arange(3 * n))), shape=(n, 3 * n))
    return sp.bmat([[A, B.T], [B, None]], format="csr")


def solve_constrained(A, b, m, cfg: SolverConfig = SolverConfig(), method: str = "tangent",
                      return_iterations: bool = False):
    """Solve ``A v + B^T lam = b, B v = 0`` for the 3N-vector ``v``.

    ``method="tangent"`` eliminates the constraints on a per-node orthonormal
    tangent basis and runs BiCGSTAB on the reduced 2N system.
    ``method="multiplier"`` solves the full saddle-point system with GMRES and
    is meant for validation on small meshes.
    """
    A = sp.csr_matrix(A)
    b = _check_rhs(A, b)
    m = _check_constraints(m, b.shape[0])
    if method == "tangent":
        P = tangent_projector(m)
        red = (P.T @ A @ P).tocsr()
        w, it = bicgstab(red, P.T @ b, cfg, return_iterations=True)
        v = P @ w
    elif method == "multiplier":
        K = saddle_matrix(A, m)
        rhs = np.concatenate([b, np.zeros(m.shape[0])])
        n = rhs.shape[0]
        counter = [0]

        def cb(_):
            counter[0] += 1

        sol, info = spla.gmres(K, rhs, rtol=cfg.tol_rel * 1e-2, atol=0.0, restart=n,
                               maxiter=cfg.iter_cap(n), callback=cb, callback_type="pr_norm")
        res = np.linalg.norm(K @ sol - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
        if info != 0 or res > cfg.tol_rel:
            raise SolverError("GMRES on saddle system did not converge", res, counter[0])
        v, it = sol[: b.shape[0]], counter[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    return (v, it) if return_iterations else v
