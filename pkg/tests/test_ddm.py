import numpy as np
import pytest

from maxwell_ddm_nn import InvalidArgumentError
from maxwell_ddm_nn.ddm import (
    DDMSolver,
    InterfaceTrace,
    ddm_run,
    extract_tangential_trace,
    interface_jump,
    update_trace,
)
from maxwell_ddm_nn.geometry import build_mesh, interface_edges
from maxwell_ddm_nn.nedelec import BasisOrder
from maxwell_ddm_nn.pipeline import EXAMPLE_FIELD, relative_l2
from maxwell_ddm_nn.system import FEFunction, edge_mass, distribute_dofs, solve_monolithic


def _unit_interface_field(sub, order):
    dm = distribute_dofs(sub, order)
    c = np.zeros(dm.total_dofs, dtype=complex)
    for e in interface_edges(sub):
        c[dm.edge_dofs(e)[0]] = 1.0
    return FEFunction(dm, c)


@pytest.fixture(scope="module")
def solver4(small_split, order, params):
    return DDMSolver(small_split, order, params)


def test_update_of_unit_trace(small_split, order, params):
    E = _unit_interface_field(small_split[0], order)
    g = InterfaceTrace.zeros(4, 4, 0, (1, 0))
    new = update_trace(g, E, params, small_split[1])
    assert new.owner == 1 and new.direction == (0, 1)
    np.testing.assert_allclose(new.values[:, 0], -2 * params.robin)
    np.testing.assert_allclose(new.values[:, 1:], 0)
    assert abs(new.values[0, 0] - (-6.2413j)) < 1e-4


def test_update_includes_previous_data(small_split, order, params, rng):
    E = _unit_interface_field(small_split[0], order)
    g0 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    new = update_trace(InterfaceTrace(g0, 0, (1, 0)), E, params)
    expect = -g0 - 2 * params.robin * extract_tangential_trace(E)
    np.testing.assert_allclose(new.values, expect)


def test_update_shape_mismatch(small_split, order, params):
    E = _unit_interface_field(small_split[0], order)
    with pytest.raises(InvalidArgumentError):
        update_trace(InterfaceTrace.zeros(3, 4, 0, (1, 0)), E, params)


def test_jump_oracle(small_split, order):
    E0 = _unit_interface_field(small_split[0], order)
    E1 = FEFunction(distribute_dofs(small_split[1], order),
                    np.zeros(distribute_dofs(small_split[1], order).total_dofs, dtype=complex))
    # each edge contributes |1|^2 / h, four edges of length 1/4
    assert interface_jump(E0, E1) == pytest.approx(4.0)
    assert interface_jump(E0, _unit_interface_field(small_split[1], order)) == pytest.approx(0.0)


def test_history_layout(solver4):
    hist = solver4.run(EXAMPLE_FIELD, 3)
    assert hist.steps == 3
    assert hist.solutions[0] is None
    assert len(hist.traces) == 4 and len(hist.residuals) == 3
    assert all(np.all(g.values == 0) for g in hist.traces[0])
    assert all(np.isfinite(hist.residuals))
    lines = hist.to_csv().splitlines()
    assert len(lines) == 5
    header = lines[0].split(",")
    assert header[:3] == ["step", "residual", "g0_e0_k0_re"]
    assert len(header) == 2 + 2 * 4 * 4 * 2
    assert lines[1].split(",")[1] == ""


def test_run_rejects_zero_steps(solver4):
    with pytest.raises(InvalidArgumentError):
        solver4.run(EXAMPLE_FIELD, 0)


def test_tolerance_stops_early(solver4):
    hist = solver4.run(EXAMPLE_FIELD, 200, tol=1e-2)
    assert hist.steps < 200
    assert hist.residuals[-1] <= 1e-2


def test_monolithic_solution_is_the_fixed_point(small_split, order, params):
    """Recover the interface data each subdomain needs to reproduce the
    monolithic field; it must satisfy the update rule and solve exactly."""
    mesh = small_split[0].mesh
    solver = DDMSolver(small_split, order, params)
    E = solve_monolithic(mesh, order, params, EXAMPLE_FIELD)
    parts = [E.restrict(s.dof_map) for s in solver.solvers]
    g = []
    for s, Ej in zip(solver.solvers, parts):
        r = s.matrix @ Ej.coefficients
        M = edge_mass(order, mesh.h)
        g.append(np.array([-np.linalg.solve(M, r[s.dof_map.edge_dofs(e)])
                           for e in interface_edges(s.sub)]))
    traces = (InterfaceTrace(g[0], 0, (1, 0)), InterfaceTrace(g[1], 1, (0, 1)))
    new0, new1 = solver.update(traces, parts)
    scale = np.abs(g[0]).max()
    assert np.abs(new1.values - g[1]).max() < 1e-10 * scale
    assert np.abs(new0.values - g[0]).max() < 1e-10 * scale
    sols = solver.solve_pair(EXAMPLE_FIELD, traces)
    assert relative_l2(tuple(parts), sols) < 1e-10


def test_iteration_approaches_monolithic(small_split, order, params):
    mesh = small_split[0].mesh
    hist = ddm_run(small_split, order, params, EXAMPLE_FIELD, 60)
    E = solve_monolithic(mesh, order, params, EXAMPLE_FIELD)
    ref = tuple(E.restrict(s.dof_map) for s in DDMSolver(small_split, order, params).solvers)
    errs = [relative_l2(ref, hist.solutions[k]) for k in (1, 10, 60)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_needs_two_subdomains(small_split, order, params):
    with pytest.raises(InvalidArgumentError):
        DDMSolver(small_split[:1], order, params)
