"""Decoupled linear-implicit tangent-plane integrator.

One step consists of

1. a linear solve for the nodal tangent update ``v`` of the magnetization,
2. nodal projection ``m <- (m + k v) / |m + k v|``,
3. an implicit (backward second difference) solve of the momentum equation
   driven by the magnetic strain of the *new* magnetization.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import fem
from .contributions import Contribution, evaluate_pi
from .linalg import SolverConfig, solve_constrained, solve_spd
from .material import Rank4Tensor, diagonal_tensor
from .mesh import Mesh

MODULUS_DRIFT = 1e-9
ENERGY_REL_TOL = 1e-10


class InvariantError(RuntimeError):
    """A structural property of the discrete solution was violated."""


@dataclass(frozen=True)
class Params:
    alpha: float = 1.0
    theta: float = 1.0
    c_exch: float = 1.0
    rho: float = 1.0
    lam_e: Rank4Tensor = field(default_factory=lambda: diagonal_tensor(0.0))
    lam_m: Rank4Tensor = field(default_factory=lambda: diagonal_tensor(0.0, label="magnetic"))
    contribution: Contribution = field(default_factory=Contribution)
    lumped_llg: bool = True
    lumped_momentum: bool = False
    quadrature: str = "vertex"
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if not self.c_exch > 0:
            raise ValueError("exchange constant must be positive")
        if not self.rho > 0:
            raise ValueError("mass density must be positive")
        if self.lam_e.dim != self.lam_m.dim:
            raise ValueError("elastic and magnetic tensors differ in dimension")


class Operators:
    """Time-independent matrices of one mesh/parameter set."""

    def __init__(self, mesh: Mesh, params: Params):
        if mesh.dim != 2:
            raise ValueError("integrators support 2D meshes only")
        if params.lam_e.dim != mesh.dim:
            raise ValueError("material tensors must match the mesh dimension")
        self.mesh = mesh
        self.weights = fem.lumped_weights(mesh)
        self.K = fem.assemble_stiffness(mesh)
        self.K3 = fem.assemble_stiffness(mesh, 3)
        self.M = fem.assemble_mass(mesh)
        self.M3 = fem.assemble_mass(mesh, 3, lumped=params.lumped_llg)
        d = mesh.dim
        self.free = fem.free_dofs(mesh, d)
        Md = fem.assemble_mass(mesh, d, lumped=params.lumped_momentum)
        Ke = fem.assemble_elasticity(mesh, params.lam_e)
        self.Mu = Md[self.free][:, self.free].tocsr()
        self.Ke = Ke[self.free][:, self.free].tocsr()
        self._momentum = {}

    def momentum_matrix(self, rho: float, k: float) -> sp.csr_matrix:
        key = (rho, k)
        if key not in self._momentum:
            self._momentum[key] = (rho / k**2 * self.Mu + self.Ke).tocsr()
        return self._momentum[key]

    def grad_norm2(self, m: np.ndarray) -> float:
        """``||grad m_h||^2`` of a nodal field (N, c)."""
        return float(np.einsum("ic,ic->", m, self.K @ m))


@dataclass
class StepInfo:
    v: np.ndarray
    iters_llg: int
    iters_mom: int
    tangency: float
    grad_after: float
    grad_before_projection: float


@dataclass
class SimulationState:
    mesh: Mesh
    m: np.ndarray
    u: np.ndarray
    dtu: np.ndarray
    k: float
    params: Params
    step: int = 0
    t0: float = 0.0
    last: StepInfo | None = None
    ops: Operators | None = field(default=None, repr=False)

    @property
    def t(self) -> float:
        return self.t0 + self.step * self.k

    @property
    def operators(self) -> Operators:
        if self.ops is None:
            self.ops = Operators(self.mesh, self.params)
        return self.ops

    def copy(self) -> "SimulationState":
        return replace(self, m=self.m.copy(), u=self.u.copy(), dtu=self.dtu.copy())


def _array(f, shape, what):
    vals = f.values if isinstance(f, fem.NodalVectorField) else np.array(f, dtype=float)
    if vals.shape != shape:
        raise ValueError(f"{what} must have shape {shape}, got {vals.shape}")
    return vals


def init_state(mesh: Mesh, m0, u0=None, dtu0=None, params: Params | None = None,
               k: float = 1e-5) -> SimulationState:
    """Initial state with ``d_t u^0 := dtu0`` and invariant checks per node."""
    params = params or Params()
    if not k > 0:
        raise ValueError("time step must be positive")
    N, d = mesh.n_nodes, mesh.dim
    m = _array(m0, (N, 3), "m0")
    u = np.zeros((N, d)) if u0 is None else _array(u0, (N, d), "u0")
    dtu = np.zeros((N, d)) if dtu0 is None else _array(dtu0, (N, d), "dtu0")
    fem.NodalVectorField(mesh, m, "magnetization")
    fem.NodalVectorField(mesh, u, "displacement")
    fem.NodalVectorField(mesh, dtu, "velocity")
    state = SimulationState(mesh, m, u, dtu, float(k), params)
    adv = stability_advisory(params.theta, min_edge_length(mesh), k)
    if not adv.ok:
        warnings.warn(adv.message, stacklevel=2)
    return state


def min_edge_length(mesh: Mesh) -> float:
    p = mesh.nodes[mesh.elements]
    k = mesh.elements.shape[1]
    return float(min(np.linalg.norm(p[:, a] - p[:, b], axis=1).min()
                     for a in range(k) for b in range(a + 1, k)))


def llg_system(state: SimulationState) -> tuple[sp.csr_matrix, np.ndarray]:
    """Matrix and right-hand side of the tangent-plane step on all 3N dofs."""
    ops, p = state.operators, state.params
    mesh, m, k = state.mesh, state.m, state.k
    S = fem.assemble_skew(mesh, m, ops.weights)
    A = (p.alpha * ops.M3 + S + (p.theta * k * p.c_exch) * ops.K3).tocsr()
    b = -p.c_exch * (ops.K3 @ m.ravel())
    if not p.lam_m.is_zero:
        b += fem.assemble_h_load(mesh, state.u, m, p.lam_e, p.lam_m, p.quadrature)
    if not p.contribution.is_zero:
        b -= ops.M3 @ evaluate_pi(p.contribution, m).ravel()
    return A, b


def project(m: np.ndarray, v: np.ndarray, k: float) -> np.ndarray:
    """Nodal projection of ``m + k v`` onto the unit sphere."""
    w = m + k * v
    norm = np.linalg.norm(w, axis=1)
    if np.any(norm < 1.0 - MODULUS_DRIFT):
        z = int(np.argmin(norm))
        raise InvariantError(f"node {z}: |m + k v| = {norm[z]!r} < 1")
    return w / norm[:, None]


def step_llg(state: SimulationState, return_iterations: bool = False):
    """Tangent update ``v`` and projected magnetization; both (N, 3)."""
    A, b = llg_system(state)
    v, iters = solve_constrained(A, b, state.m, state.params.solver, return_iterations=True)
    v = v.reshape(-1, 3)
    m_next = project(state.m, v, state.k)
    return (v, m_next, iters) if return_iterations else (v, m_next)


def step_momentum(state: SimulationState, m_next: np.ndarray, return_iterations: bool = False):
    """Implicit momentum step; returns ``(u_next, dtu_next)``."""
    ops, p, k = state.operators, state.params, state.k
    N, d = state.mesh.n_nodes, state.mesh.dim
    free = ops.free
    rhs = fem.assemble_elastic_rhs(state.mesh, m_next, p.lam_e, p.lam_m, p.quadrature)[free]
    u_free = state.u.ravel()[free]
    rhs += ops.Mu @ ((p.rho / k) * state.dtu.ravel()[free] + (p.rho / k**2) * u_free)
    x, iters = solve_spd(ops.momentum_matrix(p.rho, k), rhs, p.solver, x0=u_free, return_iterations=True)
    u_next = np.zeros(N * d)
    u_next[free] = x
    u_next = u_next.reshape(N, d)
    dtu_next = (u_next - state.u) / k
    return ((u_next, dtu_next, iters) if return_iterations else (u_next, dtu_next))


def tangency_residual(m: np.ndarray, v: np.ndarray) -> float:
    return float(np.max(np.abs(np.einsum("ij,ij->i", m, v)), initial=0.0))


def advance(state: SimulationState, debug: bool = True) -> SimulationState:
    """One full step; mutates and returns ``state``."""
    ops = state.operators
    v, m_next, it_llg = step_llg(state, return_iterations=True)
    tang = tangency_residual(state.m, v)
    before = ops.grad_norm2(state.m + state.k * v)
    after = ops.grad_norm2(m_next)
    u_next, dtu_next, it_mom = step_momentum(state, m_next, return_iterations=True)
    state.m, state.u, state.dtu = m_next, u_next, dtu_next
    state.step += 1
    state.last = StepInfo(v, it_llg, it_mom, tang, after, before)
    if debug:
        vmax = float(np.max(np.abs(v), initial=0.0))
        if tang > 10 * state.params.solver.tol_rel * max(vmax, 1.0):
            raise InvariantError(f"step {state.step}: tangency residual {tang:.3e}")
        if after > before * (1 + ENERGY_REL_TOL):
            raise InvariantError(f"step {state.step}: projection increased the Dirichlet energy "
                                 f"({after!r} > {before!r})")
        check_invariants(state)
    return state


def check_invariants(state: SimulationState, modulus_tol: float = 1e-12) -> None:
    dev = np.abs(np.linalg.norm(state.m, axis=1) - 1.0)
    if dev.max() > modulus_tol:
        z = int(np.argmax(dev))
        raise InvariantError(f"step {state.step}: node {z} has modulus deviation {dev[z]:.3e}")
    bnd = state.mesh.boundary_mask
    if np.any(state.u[bnd]) or np.any(state.dtu[bnd]):
        raise InvariantError(f"step {state.step}: displacement does not vanish on the boundary")
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.dtu))):
        raise InvariantError(f"step {state.step}: non-finite displacement")


@dataclass(frozen=True)
class Advisory:
    ok: bool
    message: str = ""


def stability_advisory(theta: float, h: float, k: float) -> Advisory:
    """Heuristic time-step advice for the theta-weighted exchange term."""
    if h <= 0 or k <= 0:
        raise ValueError("h and k must be positive")
    if theta > 0.5:
        return Advisory(True)
    if theta == 0.5:
        if k / h > 1:
            return Advisory(False, f"theta = 1/2 needs k/h -> 0; k/h = {k / h:.3g}")
        return Advisory(True)
    if k / h**2 > 1:
        return Advisory(False, f"theta < 1/2 needs k/h^2 -> 0; k/h^2 = {k / h**2:.3g}")
    return Advisory(True)
