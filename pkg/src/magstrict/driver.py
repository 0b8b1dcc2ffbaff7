"""Blow-up benchmark driver and parameter sweeps."""
from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import diagnostics as dg
from .config import RunConfig
from .contributions import Contribution
from .fem import interpolate_initial_m
from .linalg import SolverError
from .material import diagonal_tensor
from .mesh import build_structured_mesh
from .midpoint import FixedPointConfig, FixedPointError, check_timestep, default_timestep, step_midpoint
from .tangent import InvariantError, Params, SimulationState, advance, init_state

log = logging.getLogger(__name__)


class RunError(RuntimeError):
    """Integrator failure annotated with the step and time it occurred at."""

    def __init__(self, cause: Exception, step: int, t: float):
        self.cause = cause
        self.step = step
        self.t = t
        super().__init__(f"step {step} (t = {t:.6g}): {cause}")

    @property
    def exit_code(self) -> int:
        return 4 if isinstance(self.cause, InvariantError) else 3


def params_from_config(cfg: RunConfig) -> Params:
    contribution = Contribution(kind=cfg.pi_kind, f=cfg.pi_f, axis=cfg.pi_axis, c_ani=cfg.pi_c_ani,
                                bound=cfg.pi_bound, sign=cfg.pi_sign)
    return Params(alpha=cfg.alpha, theta=cfg.theta, c_exch=cfg.c_exch, rho=cfg.rho,
                  lam_e=diagonal_tensor(cfg.c_e, label="elastic"),
                  lam_m=diagonal_tensor(cfg.c_m, label="magnetic"),
                  contribution=contribution, lumped_llg=cfg.lumped_llg, quadrature=cfg.quadrature)


def resolve_timestep(cfg: RunConfig, mesh) -> float:
    if cfg.k is not None:
        return cfg.k
    return default_timestep(mesh) if cfg.scheme == "midpoint" else 1e-5


def build_state(cfg: RunConfig) -> SimulationState:
    mesh = build_structured_mesh(cfg.r)
    k = resolve_timestep(cfg, mesh)
    return init_state(mesh, interpolate_initial_m(mesh, cfg.s), params=params_from_config(cfg), k=k)


class Recorder:
    """Computes :class:`DiagnosticsRow` values with cached operators."""

    def __init__(self, state: SimulationState, norm: str = "frobenius"):
        ops = state.operators
        self.mesh = state.mesh
        self.grads, _ = state.mesh.gradients()
        self.ops = ops
        self.norm = norm
        self.rows: list[dg.DiagnosticsRow] = []

    def record(self, state: SimulationState) -> dg.DiagnosticsRow:
        ops, p = self.ops, state.params
        free = ops.free
        last = state.last
        row = dg.DiagnosticsRow(
            t=state.t,
            E_exchange=dg.compute_energy(self.mesh, state.m, ops.K),
            W1inf=dg.compute_w1inf(self.mesh, state.m, self.grads, self.norm),
            E_elastic=dg.elastic_energy(state.u.ravel()[free], state.dtu.ravel()[free], ops.Mu, ops.Ke, p.rho),
            m1_L2=dg.compute_component_average(self.mesh, state.m, 1, ops.M),
            m3_L2=dg.compute_component_average(self.mesh, state.m, 3, ops.M),
            mod_dev=dg.modulus_deviation(state.m),
            tangency_res=last.tangency if last else 0.0,
            iters_llg=last.iters_llg if last else 0,
            iters_mom=last.iters_mom if last else 0,
        )
        self.rows.append(row)
        return row


def run_benchmark(cfg: RunConfig, state: SimulationState | None = None, progress=None):
    """Integrate to ``cfg.T``; returns ``(rows, blow_up_time)``.

    Rows are recorded at t = 0, every ``cfg.cadence`` steps, and at the final
    step.  ``blow_up_time`` is ``None`` when the W^{1,inf} seminorm has no
    interior maximum.
    """
    cfg.validate()
    state = build_state(cfg) if state is None else state
    n_steps = math.ceil(cfg.T / state.k - 1e-9)
    rec = Recorder(state, cfg.w1inf_norm)
    rec.record(state)
    fp = FixedPointConfig(cfg.midpoint_eps, cfg.midpoint_max_sweeps, cfg.midpoint_damping)
    if cfg.scheme == "midpoint":
        check_timestep(state)
    for n in range(1, n_steps + 1):
        try:
            if cfg.scheme == "tangent":
                advance(state, debug=cfg.debug)
            else:
                step_midpoint(state, fp, debug=cfg.debug)
        except (SolverError, InvariantError, FixedPointError) as exc:
            raise RunError(exc, state.step + 1, state.t + state.k) from exc
        if n % cfg.cadence == 0 or n == n_steps:
            row = rec.record(state)
            if progress is not None:
                progress(n, n_steps, row)
    rows = rec.rows
    tb = dg.blow_up_time([r.t for r in rows], [r.W1inf for r in rows])
    return rows, tb


def parse_vary(text: str) -> tuple[str, list[str]]:
    if "=" not in text:
        raise ValueError(f"--vary expects key=v1,v2,..., got {text!r}")
    key, values = text.split("=", 1)
    vals = [v.strip() for v in values.split(",") if v.strip()]
    if not vals:
        raise ValueError(f"no values given for {key}")
    return key.strip(), vals


def sweep(cfg: RunConfig, key: str, values, workers: int | None = None):
    """Run one benchmark per value of ``key`` in worker threads.

    Each run writes to ``<out>_<key>-<value>``; returns a list of
    ``(config, rows, blow_up_time)`` in the order of ``values``.
    """
    from .config import apply
    from .report import emit_outputs

    configs = []
    for val in values:
        c = apply(cfg, {key: val})
        safe = str(val).replace("/", "_")
        c = dataclasses.replace(c, out=f"{cfg.out}_{key.replace('.', '_')}-{safe}").validate()
        configs.append(c)

    def one(c):
        rows, tb = run_benchmark(c)
        emit_outputs(rows, c.out, figures=c.figures, blow_up=tb)
        return c, rows, tb

    with ThreadPoolExecutor(max_workers=workers or min(len(configs), 4)) as pool:
        return list(pool.map(one, configs))


def early_time_difference(rows_a, rows_b, t_max: float) -> dict:
    """Max absolute gap of the component averages for ``t <= t_max``.

    The second series is linearly interpolated onto the times of the first.
    """
    ta = np.array([r.t for r in rows_a])
    tb = np.array([r.t for r in rows_b])
    sel = ta <= t_max + 1e-15
    out = {}
    for name in ("m1_L2", "m3_L2"):
        a = np.array([getattr(r, name) for r in rows_a])[sel]
        b = np.interp(ta[sel], tb, np.array([getattr(r, name) for r in rows_b]))
        out[name] = float(np.max(np.abs(a - b)))
    return out
