"""Scalar diagnostics of discrete magnetizations and displacements."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import fem
from .mesh import Mesh

CSV_HEADER = ("t", "E_exchange", "W1inf", "E_elastic", "m1_L2", "m3_L2",
              "mod_dev", "tangency_res", "iters_llg", "iters_mom")


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    E_exchange: float
    W1inf: float
    E_elastic: float
    m1_L2: float
    m3_L2: float
    mod_dev: float
    tangency_res: float
    iters_llg: int
    iters_mom: int

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


def _vals(m):
    return m.values if isinstance(m, fem.NodalVectorField) else np.asarray(m, dtype=float)


def compute_energy(mesh: Mesh, m, K=None) -> float:
    """Exchange energy ``1/2 ||grad m_h||^2``."""
    mv = _vals(m)
    K = fem.assemble_stiffness(mesh) if K is None else K
    return 0.5 * float(np.einsum("ic,ic->", mv, K @ mv))


def element_gradients(mesh: Mesh, m, grads=None) -> np.ndarray:
    """Constant Jacobians ``d m_c / d x_i`` per element, shape (M, c, d)."""
    mv = _vals(m)
    if grads is None:
        grads, _ = mesh.gradients()
    return np.einsum("eac,eai->eci", mv[mesh.elements], grads)


def compute_w1inf(mesh: Mesh, m, grads=None, norm: str = "frobenius") -> float:
    """``max_T |grad m_h|_T`` for the piecewise constant gradient."""
    J = element_gradients(mesh, m, grads)
    if norm == "frobenius":
        per = np.sqrt(np.einsum("eci,eci->e", J, J))
    elif norm == "max_row_sum":
        per = np.abs(J).sum(axis=2).max(axis=1)
    else:
        raise ValueError(f"unknown matrix norm {norm!r}")
    return float(per.max(initial=0.0))


def compute_component_average(mesh: Mesh, m, j: int, M=None) -> float:
    """``(1/|Omega|) ||m_j||_{L^2}`` with the consistent mass matrix; ``j`` is 1-based."""
    if j not in (1, 2, 3):
        raise ValueError("component index must be 1, 2 or 3")
    mv = _vals(m)
    M = fem.assemble_mass(mesh) if M is None else M
    col = mv[:, j - 1]
    area = float(mesh.areas().sum())
    return float(np.sqrt(max(col @ (M @ col), 0.0))) / area


def elastic_energy(u: np.ndarray, dtu: np.ndarray, Mu, Ke, rho: float) -> float:
    """``rho ||d_t u||^2 + (lam_e eps(u), eps(u))`` on free dofs."""
    return float(rho * dtu @ (Mu @ dtu) + u @ (Ke @ u))


def modulus_deviation(m) -> float:
    return float(np.max(np.abs(np.linalg.norm(_vals(m), axis=1) - 1.0), initial=0.0))


def blow_up_time(times, w1inf) -> float | None:
    """Time of the interior maximum of the W^{1,inf} seminorm.

    ``None`` when the maximum sits at the first or last record (no blow-up
    observed within the horizon) or the seminorm is identically zero.
    """
    w = np.asarray(w1inf, dtype=float)
    t = np.asarray(times, dtype=float)
    if w.size < 3 or not np.any(w > 0):
        return None
    i = int(np.argmax(w))
    if i == 0 or i == w.size - 1:
        return None
    return float(t[i])
