"""MNA assembly, window solves, perturbation gain."""

import numpy as np
import pytest

from wrcosim.circuit import (CircuitState, assemble_mna, circuit_solve_window,
                             perturbed_response)
from wrcosim.errors import SolverError
from wrcosim.netlist import ElementKind, parse_netlist
from wrcosim.waveform import Waveform, uniform_grid

TOY = "V1 1 0 dc 1\nR1 1 2 1\nF1 2 0 lumped 1\n.end"
TOY_CONSISTENT_Z = np.array([1.0, 0.0, -1.0, 1.0])  # e1, e2, i_V, i_f


def test_dimension_of_minimal_system():
    sys = assemble_mna(parse_netlist("V1 1 0 dc 1\nR1 1 0 1\nF1 1 0 lumped 1\n.end"))
    assert sys.dim == 3  # e1, i_V, i_field


def test_dimension_of_corpus_circuit(systems_a):
    mna, _ = systems_a
    # 4 potentials + 2 inductor currents + 1 source current + coupling current
    assert mna.dim == 8
    assert mna.layout.names == ("e1", "e2", "e3", "e5", "i_L2", "i_L1", "i_Vs", "i_f")


def test_coupling_extractor_matches_field_incidence(systems_a, graph_a):
    mna, _ = systems_a
    a_f = graph_a.incidence(ElementKind.FIELD)[:, 0]
    assert np.array_equal(mna.P[: len(a_f)], a_f)
    assert np.all(mna.P[len(a_f):] == 0.0)
    # P^T z picks the terminal potential difference
    z = np.arange(1.0, mna.dim + 1)
    row5 = graph_a.node_row(5)
    assert mna.P @ z == z[row5]


def test_descriptor_blocks(systems_a, graph_a):
    mna, _ = systems_a
    n = len(graph_a.nodes)
    a_c = graph_a.incidence(ElementKind.CAPACITOR)
    caps = [el.params for el in graph_a.elements_of(ElementKind.CAPACITOR)]
    assert np.allclose(mna.E[:n, :n], a_c @ np.diag(caps) @ a_c.T)
    ls = [el.params for el in graph_a.elements_of(ElementKind.INDUCTOR)]
    assert np.allclose(np.diag(mna.E)[n : n + 2], ls)
    assert np.all(mna.E[mna.layout.coupling_index] == 0.0)


def test_ohms_law_with_imposed_zero_voltage():
    sys = assemble_mna(parse_netlist(TOY))
    grid = uniform_grid(0.0, 1.0, 0.1)
    i_wf, traj = circuit_solve_window(sys, CircuitState(TOY_CONSISTENT_Z, 0.0),
                                      Waveform.constant(grid, 0.0), grid)
    assert np.allclose(i_wf.values, 1.0, atol=1e-12)
    e2 = traj.values[:, 1]
    assert np.allclose(e2, 0.0, atol=1e-12)


def test_ohms_law_with_imposed_half_volt():
    sys = assemble_mna(parse_netlist(TOY))
    grid = uniform_grid(0.0, 1.0, 0.1)
    z0 = np.array([1.0, 0.5, -0.5, 0.5])
    i_wf, _ = circuit_solve_window(sys, CircuitState(z0, 0.0),
                                   Waveform.constant(grid, 0.5), grid)
    assert np.allclose(i_wf.values, 0.5, atol=1e-12)


def test_discrete_residual_small_at_every_step(systems_a):
    mna, _ = systems_a
    dt = 1e-3
    grid = uniform_grid(0.0, 0.5, dt)
    v_in = Waveform(grid, 0.1 * np.sin(2 * np.pi * grid))
    _, traj = circuit_solve_window(mna, CircuitState(np.zeros(mna.dim), 0.0), v_in, grid)
    z = traj.values
    b = mna.rhs_samples(grid[1:], np.asarray(v_in(grid[1:])))
    for n in range(len(grid) - 1):
        r = mna.E @ (z[n + 1] - z[n]) / dt + mna.G @ z[n + 1] - b[n]
        assert np.max(np.abs(r)) <= 1e-9


def test_eval_f_matches_full_equation(systems_a):
    # E z' + f(t,z) + P i = b rows must agree with the assembled arrays
    mna, _ = systems_a
    rng = np.random.default_rng(3)
    z = rng.normal(size=mna.dim)
    t = 0.37
    ic = mna.layout.coupling_index
    full = mna.G @ z - mna.rhs_samples(np.array([t]))[0]
    via_f = mna.eval_f(t, z) + mna.P * z[ic]
    assert np.allclose(full[:ic], via_f[:ic], atol=1e-12)
    assert np.all(mna.eval_E(z) == mna.E)


def test_window_solve_from_mono_voltage_reproduces_mono_current(systems_a):
    import wrcosim as w
    mna, model = systems_a
    dt = 1e-3
    mono = w.monolithic_solve(w.build_coupled(mna, model), dt, 1.0)
    i_wf, _ = circuit_solve_window(mna, CircuitState(np.zeros(mna.dim), 0.0),
                                   mono.v_mono, mono.times)
    di = np.max(np.abs(np.diff(mono.i_coupling.values))) / dt
    bound = 5 * dt * max(di, 1.0)
    assert np.max(np.abs(i_wf.values - mono.i_coupling.values)) <= bound


def test_single_point_window(systems_a):
    mna, _ = systems_a
    z0 = np.zeros(mna.dim)
    i_wf, traj = circuit_solve_window(mna, CircuitState(z0, 0.0),
                                      Waveform([0.0], [0.0]), np.array([0.0]))
    assert i_wf.values.tolist() == [0.0]
    assert traj.values.shape == (1, mna.dim)


def test_structurally_singular_assembly_detected():
    # node 1 touches only a current source: its KCL row cannot be solved
    with pytest.raises(SolverError, match="singular"):
        assemble_mna(parse_netlist("I1 1 0 dc 1\nR1 2 0 1\nF1 2 0 lumped 1\n.end"))


def test_trajectory_csv_header(systems_a):
    mna, _ = systems_a
    grid = uniform_grid(0.0, 0.01, 0.01)
    _, traj = circuit_solve_window(mna, CircuitState(np.zeros(mna.dim), 0.0),
                                   Waveform.constant(grid, 0.0), grid)
    text = traj.csv_text()
    assert text.splitlines()[0] == "t,e1,e2,e3,e5,i_L2,i_L1,i_Vs,i_coupling"


# -- perturbation gain ---------------------------------------------------------


def test_zero_delta_zero_gain(systems_a):
    mna, _ = systems_a
    grid = uniform_grid(0.0, 0.5, 1e-3)
    nu = perturbed_response(mna, CircuitState(np.zeros(mna.dim), 0.0),
                            Waveform.constant(grid, 0.0),
                            Waveform.constant(grid, 0.0), grid)
    assert nu == 0.0


def test_gain_is_amplitude_independent_in_linear_regime(systems_a):
    mna, _ = systems_a
    grid = uniform_grid(0.0, 1.0, 1e-3)
    base = Waveform.constant(grid, 0.0)
    z0 = CircuitState(np.zeros(mna.dim), 0.0)
    nus = []
    for amp in (1e-3, 5e-4):
        delta = Waveform(grid, amp * np.sin(2 * np.pi * grid))
        nus.append(perturbed_response(mna, z0, base, delta, grid))
    assert nus[0] > 0
    assert abs(nus[1] / nus[0] - 1.0) < 0.10


def test_cv_connected_coupling_gain_grows_like_one_over_dt(systems_b):
    mna, _ = systems_b
    nus = []
    dts = [1e-2, 5e-3, 2.5e-3]
    for dt in dts:
        grid = uniform_grid(0.0, 1.0, dt)
        vals = np.zeros(grid.size)
        vals[grid.size // 2] = 1e-3  # hat of width 2*dt
        nu = perturbed_response(mna, CircuitState(np.zeros(mna.dim), 0.0),
                                Waveform.constant(grid, 0.0),
                                Waveform(grid, vals), grid)
        nus.append(nu)
    slope = np.polyfit(np.log(dts), np.log(nus), 1)[0]
    assert -1.2 < slope < -0.8  # nu ~ 1/dt


def test_bounded_gain_for_decoupled_topology(systems_a):
    mna, _ = systems_a
    nus = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        grid = uniform_grid(0.0, 1.0, dt)
        vals = np.zeros(grid.size)
        vals[grid.size // 2] = 1e-3
        nus.append(perturbed_response(mna, CircuitState(np.zeros(mna.dim), 0.0),
                                      Waveform.constant(grid, 0.0),
                                      Waveform(grid, vals), grid))
    for a, b in zip(nus, nus[1:]):
        assert abs(b / a - 1.0) <= 0.2


# -- diodes ---------------------------------------------------------------------


def test_diode_rectifier_newton_path():
    text = "Vs 1 0 sin 1.0 1.0\nR 1 2 1.0\nD 2 3 1e-9 0.025\nF 3 0 lumped 1.0\n.end"
    sys = assemble_mna(parse_netlist(text))
    assert sys.diodes is not None
    dt = 1e-3
    grid = uniform_grid(0.0, 1.0, dt)
    import wrcosim as w
    mono = w.monolithic_solve(w.build_coupled(sys, w.lumped_cap(1.0)), dt, 1.0)
    v_cap = mono.v_mono.values
    # rectified charging: the capacitor only ever charges upward
    assert v_cap[-1] > 0.05
    assert np.min(np.diff(v_cap)) > -1e-9
    # series branch: diode current equals resistor current at every step
    e1 = mono.values[:, 0]
    e2 = mono.values[:, 1]
    i_r = (e1 - e2) / 1.0
    i_d = mono.i_coupling.values
    assert np.max(np.abs(i_r[1:] - i_d[1:])) < 1e-8


def test_diode_jacobian_matches_finite_differences():
    text = "Vs 1 0 sin 1.0 1.0\nR 1 2 1.0\nD 2 0 1e-6 0.05\nF 1 0 lumped 1.0\n.end"
    sys = assemble_mna(parse_netlist(text))
    rng = np.random.default_rng(11)
    z = 0.3 * rng.normal(size=sys.dim)
    out = np.zeros(sys.dim)
    sys.diodes.residual(z, out)
    jac = np.zeros((sys.dim, sys.dim))
    sys.diodes.jacobian(z, jac)
    h = 1e-7
    for j in range(sys.dim):
        zp = z.copy()
        zp[j] += h
        outp = np.zeros(sys.dim)
        sys.diodes.residual(zp, outp)
        assert np.allclose((outp - out) / h, jac[:, j], atol=1e-4)
