"""Waveform-relaxation engine: stopping, divergence, rates, determinism."""

import numpy as np
import pytest

import wrcosim as w
from wrcosim.circuit import CircuitState
from wrcosim.cosim import (Scheme, Verdict, WindowReport, WrConfig, WrReport,
                           estimate_rates, wr_solve, wr_window)
from wrcosim.errors import ConfigError, InconsistentStartError
from wrcosim.field import FieldState


def test_config_validation():
    with pytest.raises(ConfigError):
        WrConfig(h=0.5, dt=0.7)  # dt > H
    with pytest.raises(ConfigError):
        WrConfig(h=6.0, t_end=5.0)  # H > t_end
    with pytest.raises(ConfigError):
        WrConfig(tol=0.0)
    with pytest.raises(ConfigError):
        WrConfig(k_max=0)
    with pytest.raises(ConfigError):
        WrConfig(h=0.5, dt=3e-4)  # H not a multiple of dt
    with pytest.raises(ConfigError):
        WrConfig(scheme="unknown")
    assert WrConfig(scheme="gs").scheme is Scheme.GAUSS_SEIDEL
    assert WrConfig(scheme="jacobi").scheme is Scheme.JACOBI


def test_huge_tolerance_stops_after_one_sweep(systems_a):
    mna, model = systems_a
    cfg = WrConfig(scheme="gs", h=0.5, dt=1e-3, t_end=0.5, k_max=8, tol=1e10)
    wr = wr_solve(model, mna, cfg)
    rep = wr.report.per_window[0]
    assert rep.converged and rep.iterations_used == 1
    assert wr.report.verdict is Verdict.CONVERGED


def test_convergent_corpus_run(systems_a):
    mna, model = systems_a
    wr = wr_solve(model, mna, WrConfig())
    assert wr.report.verdict is Verdict.CONVERGED
    assert len(wr.report.per_window) == 10
    for rep in wr.report.per_window:
        assert rep.converged and rep.iterations_used <= 8
        errs = rep.iteration_errors
        assert all(b < a for a, b in zip(errs[1:], errs[2:]))  # decreasing from k=2


def test_divergent_corpus_run(systems_b):
    mna, model = systems_b
    wr = wr_solve(model, mna, WrConfig())
    assert wr.report.verdict is Verdict.DIVERGED
    rep = wr.report.per_window[0]
    errs = rep.iteration_errors
    growths = sum(1 for a, b in zip(errs[1:], errs[2:]) if b > a)
    assert growths >= 3


def test_jacobi_also_diverges_on_cv_connected_coupling(systems_b):
    mna, model = systems_b
    wr = wr_solve(model, mna, WrConfig(scheme="jacobi", k_max=12, t_end=1.0))
    assert wr.report.verdict is Verdict.DIVERGED


def test_measured_rates_slot_follows_scheme(systems_a):
    mna, model = systems_a
    gs = wr_solve(model, mna, WrConfig(t_end=1.0, tol=1e-12, k_max=10))
    assert gs.report.measured_rates["rho_gs"] is not None
    assert gs.report.measured_rates["rho_jacobi_two_step"] is None
    jac = wr_solve(model, mna, WrConfig(scheme="jacobi", t_end=1.0, tol=1e-12, k_max=16))
    assert jac.report.measured_rates["rho_jacobi_two_step"] is not None
    assert jac.report.measured_rates["rho_gs"] is None


def test_divergence_factor_abort(systems_b):
    mna, model = systems_b
    cfg = WrConfig(k_max=40, divergence_factor=10.0, t_end=0.5)
    wr = wr_solve(model, mna, cfg)
    assert wr.report.verdict is Verdict.DIVERGED
    assert wr.report.per_window[0].iterations_used < 40


def test_kmax_exhaustion_is_not_divergence(systems_a):
    mna, model = systems_a
    cfg = WrConfig(k_max=2, tol=1e-14, t_end=0.5)
    wr = wr_solve(model, mna, cfg)
    assert wr.report.verdict is Verdict.MAX_ITERATIONS
    assert not wr.report.per_window[0].diverged


def test_fixed_point_guess_stays_put(systems_a):
    mna, model = systems_a
    cfg = WrConfig(h=0.5, dt=1e-3, t_end=0.5, k_max=1, tol=1e-300)
    mono = w.monolithic_solve(w.build_coupled(mna, model), cfg.dt, 0.5)
    out = wr_window(model, mna, FieldState.zero(model),
                    CircuitState(np.zeros(mna.dim), 0.0), mono.times, cfg,
                    guess_v=mono.v_mono, guess_i=mono.i_coupling)
    assert out.report.iteration_errors[0] <= 1e-9
    assert out.report.i_errors[0] <= 1e-9


def test_wr_requires_zero_consistent_sources():
    g = w.parse_netlist("V1 1 0 dc 1\nR1 1 2 1\nF1 2 0 lumped 1\n.end")
    mna, model = w.build_systems(g)
    with pytest.raises(InconsistentStartError):
        wr_solve(model, mna, WrConfig(t_end=1.0))


def test_single_window_takes_more_iterations_than_windowed(systems_a):
    mna, model = systems_a
    tight = dict(dt=1e-3, tol=1e-10, k_max=30)
    one = wr_solve(model, mna, WrConfig(scheme="gs", h=1.0, t_end=1.0, **tight))
    many = wr_solve(model, mna, WrConfig(scheme="gs", h=0.25, t_end=1.0, **tight))
    assert one.report.verdict is Verdict.CONVERGED
    assert many.report.verdict is Verdict.CONVERGED
    assert one.report.per_window[0].iterations_used > max(
        r.iterations_used for r in many.report.per_window)


def test_gauss_seidel_asymptotic_one_step_contraction(systems_a):
    mna, model = systems_a
    wr = wr_solve(model, mna, WrConfig(tol=1e-12, k_max=10, t_end=1.0))
    for rep in wr.report.per_window:
        errs = rep.iteration_errors
        ratios = [b / a for a, b in zip(errs[1:], errs[2:]) if a > 0]
        assert all(r < 1 for r in ratios)


def test_jacobi_two_step_contraction(systems_a):
    mna, model = systems_a
    wr = wr_solve(model, mna, WrConfig(scheme="jacobi", tol=1e-12, k_max=14, t_end=1.0))
    assert wr.report.verdict is Verdict.CONVERGED
    for rep in wr.report.per_window:
        errs = rep.iteration_errors
        two = [(a, b) for a, b in zip(errs[1:], errs[3:]) if a > 0]
        assert all(b < a for a, b in two)


def test_jacobi_matches_between_thread_modes(systems_a):
    mna, model = systems_a
    base = dict(scheme="jacobi", h=0.5, dt=1e-3, t_end=1.0, k_max=12, tol=1e-10)
    r1 = wr_solve(model, mna, WrConfig(threads=1, **base))
    r2 = wr_solve(model, mna, WrConfig(threads=2, **base))
    assert np.array_equal(r1.v.values, r2.v.values)
    assert np.array_equal(r1.i.values, r2.i.values)


def test_determinism_bitwise(systems_a):
    mna, model = systems_a
    cfg = WrConfig(t_end=1.0)
    a = wr_solve(model, mna, cfg, record_first_window=True)
    b = wr_solve(model, mna, cfg, record_first_window=True)
    assert np.array_equal(a.v.values, b.v.values)
    assert np.array_equal(a.z_values, b.z_values)
    for x, y in zip(a.first_window_iterates, b.first_window_iterates):
        assert np.array_equal(x, y)


def test_estimate_rates_exact_geometric_sequence():
    rep = WrReport(Scheme.GAUSS_SEIDEL,
                   [WindowReport(0, [1.0, 0.1, 0.01, 0.001], [0.0] * 4, True, 4)],
                   Verdict.CONVERGED, {})
    est = estimate_rates(rep)
    assert est.rho == pytest.approx(0.1, rel=1e-12)
    assert est.two_step_rho == pytest.approx(0.01, rel=1e-12)


def test_estimate_rates_needs_enough_iterations():
    rep = WrReport(Scheme.GAUSS_SEIDEL,
                   [WindowReport(0, [1.0, 0.1], [0.0] * 2, True, 2)],
                   Verdict.CONVERGED, {})
    with pytest.raises(ValueError, match="insufficient"):
        estimate_rates(rep)


def test_horizon_not_multiple_of_window_gets_a_short_tail(systems_a):
    mna, model = systems_a
    cfg = WrConfig(h=0.5, dt=1e-3, t_end=1.25)
    wr = wr_solve(model, mna, cfg)
    assert wr.report.verdict is Verdict.CONVERGED
    assert len(wr.report.per_window) == 3  # 0.5 + 0.5 + 0.25
    assert wr.times[-1] == pytest.approx(1.25)
    assert wr.v.values.size == wr.times.size


def test_wr_converged_solution_matches_monolithic(systems_a):
    mna, model = systems_a
    cfg = WrConfig(t_end=2.0)
    wr = wr_solve(model, mna, cfg)
    mono = w.monolithic_solve(w.build_coupled(mna, model), cfg.dt, cfg.t_end)
    dv = np.max(np.abs(np.diff(mono.v_mono.values))) / cfg.dt
    bound = 10 * cfg.tol + 5 * cfg.dt * dv
    assert np.max(np.abs(wr.v.values - mono.v_mono.values)) <= bound
