"""Implicit midpoint comparator solved by fixed-point iteration.

Nodewise relation for ``d = (m^+ - m) / k`` with ``m_half = (m + m^+) / 2``::

    d - alpha * m_half x d = -m_half x H(m_half)

where ``H = c_exch * Lap_h m_half + h_m(u, m_half) - pi(m_half)`` and
``Lap_h = -W^{-1} K`` uses the lumped mass weights ``W``.  For a frozen
``m_half`` the 3x3 system is solved exactly, so ``d . m_half = 0`` and the
nodal modulus is conserved up to the fixed-point tolerance.  The momentum
equation is stepped afterwards exactly as in the tangent-plane scheme.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import fem
from .contributions import evaluate_pi
from .tangent import SimulationState, StepInfo, min_edge_length, step_momentum, tangency_residual


class FixedPointError(RuntimeError):
    def __init__(self, message: str, increment: float, sweeps: int):
        self.increment = increment
        self.sweeps = sweeps
        super().__init__(f"{message} (last increment {increment:.3e} after {sweeps} sweeps)")


@dataclass(frozen=True)
class FixedPointConfig:
    eps: float = 1e-10
    max_sweeps: int = 500
    damping: float = 1.0
    contraction_start: float = 1e-2

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


def default_timestep(mesh) -> float:
    """``h^2 / 10`` with ``h`` the shortest edge."""
    return min_edge_length(mesh) ** 2 / 10.0


def effective_field(state: SimulationState, m: np.ndarray) -> np.ndarray:
    ops, p = state.operators, state.params
    H = -p.c_exch * (ops.K @ m) / ops.weights[:, None]
    if not p.lam_m.is_zero:
        load = fem.assemble_h_load(state.mesh, state.u, m, p.lam_e, p.lam_m, p.quadrature)
        H += load.reshape(-1, 3) / ops.weights[:, None]
    if not p.contribution.is_zero:
        H -= evaluate_pi(p.contribution, m)
    return H


def _solve_nodal(m_half: np.ndarray, rhs: np.ndarray, alpha: float) -> np.ndarray:
    """Solve ``d - alpha m_half x d = rhs`` per node."""
    A = np.eye(3)[None] - alpha * fem.cross_matrix(m_half)
    return np.linalg.solve(A, rhs[..., None])[..., 0]


def step_midpoint(state: SimulationState, cfg: FixedPointConfig = FixedPointConfig(),
                  debug: bool = True) -> SimulationState:
    """One midpoint step; mutates and returns ``state``."""
    m0, k, alpha = state.m, state.k, state.params.alpha
    m_new = m0.copy()
    prev = np.inf
    inc = np.inf
    for sweep in range(1, cfg.max_sweeps + 1):
        m_half = 0.5 * (m0 + m_new)
        H = effective_field(state, m_half)
        if not np.all(np.isfinite(H)):
            raise FixedPointError("fixed-point iteration diverged", inc, sweep)
        try:
            d = _solve_nodal(m_half, -np.cross(m_half, H), alpha)
        except np.linalg.LinAlgError:
            raise FixedPointError("singular nodal system", inc, sweep) from None
        candidate = m0 + k * d
        inc = float(np.max(np.abs(candidate - m_new)))
        if not np.isfinite(inc):
            raise FixedPointError("fixed-point iteration diverged", inc, sweep)
        m_new = m_new + cfg.damping * (candidate - m_new)
        if inc < cfg.eps:
            break
        if prev < cfg.contraction_start and inc > prev:
            raise FixedPointError("fixed-point iteration stopped contracting", inc, sweep)
        prev = inc
    else:
        raise FixedPointError("fixed-point iteration did not converge", inc, cfg.max_sweeps)

    v = (m_new - m0) / k
    u_next, dtu_next, it_mom = step_momentum(state, m_new, return_iterations=True)
    ops = state.operators
    tang = tangency_residual(0.5 * (m0 + m_new), v)
    state.m, state.u, state.dtu = m_new, u_next, dtu_next
    state.step += 1
    state.last = StepInfo(v, sweep, it_mom, tang, ops.grad_norm2(m_new), float("nan"))
    if debug and not np.all(np.isfinite(m_new)):
        raise FixedPointError("non-finite magnetization", inc, sweep)
    return state


def check_timestep(state: SimulationState) -> None:
    limit = default_timestep(state.mesh)
    if state.k > limit * (1 + 1e-12):
        warnings.warn(f"midpoint time step {state.k:.3g} exceeds h^2/10 = {limit:.3g}; "
                      "the fixed-point iteration may fail to converge", stacklevel=2)
