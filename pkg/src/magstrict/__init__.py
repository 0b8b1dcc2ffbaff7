"""Finite-element solver for magnetostrictive LLG dynamics.

The tangent-plane integrator lives in :mod:`magstrict.tangent`, the midpoint
comparator in :mod:`magstrict.midpoint` and the benchmark driver and CLI in
:mod:`magstrict.driver` and :mod:`magstrict.cli`.
"""
from .mesh import Mesh, build_structured_mesh, check_angle_condition
from .tangent import Params, SimulationState, advance, init_state

__all__ = ["Mesh", "build_structured_mesh", "check_angle_condition", "Params",
           "SimulationState", "advance", "init_state"]
__version__ = "0.1.0"
