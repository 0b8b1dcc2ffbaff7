import numpy as np
import pytest

from magstrict import fem
from magstrict.material import diagonal_tensor
from magstrict.mesh import build_structured_mesh
from magstrict.midpoint import (FixedPointConfig, FixedPointError, check_timestep, default_timestep,
                                effective_field, step_midpoint)
from magstrict.tangent import Params, init_state


def test_default_timestep():
    mesh = build_structured_mesh(3)
    assert default_timestep(mesh) == pytest.approx((1 / 8) ** 2 / 10, rel=1e-14)


def test_constant_state_single_sweep(mesh2):
    m = np.tile([0.6, 0.0, 0.8], (mesh2.n_nodes, 1))
    st = init_state(mesh2, m, k=default_timestep(mesh2))
    step_midpoint(st)
    assert st.last.iters_llg == 1
    assert np.allclose(st.m, m, atol=1e-14)


def test_modulus_conserved_and_energy_decays():
    mesh = build_structured_mesh(3)
    st = init_state(mesh, fem.interpolate_initial_m(mesh, 4).values, k=default_timestep(mesh))
    E0 = st.operators.grad_norm2(st.m)
    for _ in range(20):
        step_midpoint(st)
        assert np.max(np.abs(np.linalg.norm(st.m, axis=1) - 1)) <= 1e-8
        assert st.last.tangency < 1e-9
    assert st.operators.grad_norm2(st.m) < E0


def test_effective_field_laplacian_of_linear_profile():
    mesh = build_structured_mesh(3)
    x = mesh.nodes[:, 0]
    m = np.column_stack([x, np.zeros_like(x), np.ones_like(x)])
    st = init_state(mesh, np.tile([0, 0, 1.0], (mesh.n_nodes, 1)))
    H = effective_field(st, m)
    assert np.allclose(H[mesh.free_nodes], 0, atol=1e-12)


def test_large_step_raises():
    mesh = build_structured_mesh(3)
    st = init_state(mesh, fem.interpolate_initial_m(mesh, 4).values, k=0.05)
    with pytest.warns(UserWarning, match="h\\^2/10"):
        check_timestep(st)
    with pytest.raises(FixedPointError) as exc:
        step_midpoint(st, FixedPointConfig(max_sweeps=50))
    assert exc.value.sweeps >= 1


def test_coupled_midpoint_step_runs():
    mesh = build_structured_mesh(2)
    p = Params(lam_e=diagonal_tensor(40), lam_m=diagonal_tensor(10, label="magnetic"))
    st = init_state(mesh, fem.interpolate_initial_m(mesh, 4).values, params=p, k=default_timestep(mesh))
    step_midpoint(st)
    assert np.abs(st.u).max() > 0
    assert np.max(np.abs(np.linalg.norm(st.m, axis=1) - 1)) <= 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        FixedPointConfig(eps=0)
    with pytest.raises(ValueError):
        FixedPointConfig(damping=1.5)
