"""Waveform-relaxation engine: windowing, sweeps, convergence monitoring.

Each window runs the fixed-point iteration

    device:  solve with the previous coupling-current iterate, produce v_k
    circuit: solve with an imposed terminal voltage, produce i_k

either in Gauss-Seidel order (circuit consumes the fresh v_k) or Jacobi order
(both subsystems consume iterate k-1, and may run concurrently). Iterations
stop when the combined coupling-waveform update ||dv|| + ||di|| drops below
the tolerance. Divergence is declared after three consecutive growths of the
voltage-update norm past the startup sweep (zero-update entries, which Jacobi
produces on alternating sweeps, are skipped in the comparison) or when the
update exceeds divergence_factor times its first value.
"""

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import CircuitState, MnaSystem, circuit_solve_window
from .errors import ConfigError, InconsistentStartError
from .field import FieldModel, FieldState, field_solve_window
from .waveform import Waveform, uniform_grid


class Scheme(enum.Enum):
    GAUSS_SEIDEL = "gauss_seidel"
    JACOBI = "jacobi"


class Verdict(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class WrConfig:
    """Run configuration; H and t_end must be integer multiples of dt."""

    scheme: Scheme = Scheme.GAUSS_SEIDEL
    h: float = 0.5
    dt: float = 1e-3
    k_max: int = 8
    tol: float = 1e-8
    divergence_factor: float = 1e6
    t_end: float = 5.0
    threads: int = 1

    def __post_init__(self):
        if isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", _parse_scheme(self.scheme))
        if not (0 < self.dt <= self.h <= self.t_end):
            raise ConfigError(f"need 0 < dt <= H <= t_end, got dt={self.dt}, H={self.h}, t_end={self.t_end}")
        if not self.tol > 0:
            raise ConfigError("tol must be > 0")
        if self.k_max < 1:
            raise ConfigError("k_max must be >= 1")
        if self.divergence_factor <= 1:
            raise ConfigError("divergence_factor must be > 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        for name, span in (("H", self.h), ("t_end", self.t_end)):
            steps = round(span / self.dt)
            if steps < 1 or abs(steps * self.dt - span) > 1e-9 * self.dt:
                raise ConfigError(f"{name}={span} is not an integer multiple of dt={self.dt}")


def _parse_scheme(name: str) -> Scheme:
    key = name.strip().lower().replace("-", "_")
    if key in ("gs", "gauss_seidel", "gaussseidel", "seidel"):
        return Scheme.GAUSS_SEIDEL
    if key in ("jacobi", "jac"):
        return Scheme.JACOBI
    raise ConfigError(f"unknown scheme {name!r}")


@dataclass
class WindowReport:
    window_index: int
    iteration_errors: list[float] = field(default_factory=list)  # ||v_k - v_{k-1}||_inf
    i_errors: list[float] = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0
    diverged: bool = False

    def to_dict(self) -> dict:
        return {
            "window_index": self.window_index,
            "iteration_errors": self.iteration_errors,
            "i_errors": self.i_errors,
            "converged": self.converged,
            "iterations_used": self.iterations_used,
            "diverged": self.diverged,
        }


@dataclass
class WrReport:
    scheme: Scheme
    per_window: list[WindowReport]
    verdict: Verdict
    measured_rates: dict

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "verdict": self.verdict.value,
            "measured_rates": self.measured_rates,
            "per_window": [w.to_dict() for w in self.per_window],
        }


@dataclass
class WindowOutcome:
    v: Waveform
    i: Waveform
    field_state: FieldState
    circuit_state: CircuitState
    trajectory: np.ndarray
    report: WindowReport
    v_iterates: list[np.ndarray] | None = None


@dataclass
class WrResult:
    v: Waveform
    i: Waveform
    z_values: np.ndarray
    times: np.ndarray
    report: WrReport
    first_window_iterates: list[np.ndarray] | None = None
    first_window_grid: np.ndarray | None = None


def wr_window(field_model: FieldModel, mna: MnaSystem, field_state: FieldState,
              circuit_state: CircuitState, grid: np.ndarray, cfg: WrConfig,
              guess_v: Waveform | None = None, guess_i: Waveform | None = None,
              record_iterates: bool = False, window_index: int = 0) -> WindowOutcome:
    """Run the WR iteration on one window; returns the last iterates.

    The k = 0 guesses default to constant extrapolation of the initial
    coupling values (zero on the very first window of a zero start).
    """
    grid = np.asarray(grid, dtype=float)
    ic = mna.layout.coupling_index
    v_prev = guess_v if guess_v is not None else Waveform.constant(grid, field_state.v)
    i_prev = guess_i if guess_i is not None else Waveform.constant(grid, circuit_state.z[ic])

    rep = WindowReport(window_index=window_index)
    iterates: list[np.ndarray] | None = [] if record_iterates else None
    pool = ThreadPoolExecutor(max_workers=2) if (
        cfg.scheme is Scheme.JACOBI and cfg.threads > 1) else None

    v_k, i_k = v_prev, i_prev
    f_state_k, traj_k = field_state, None
    first_comb = None
    growth_streak = 0
    last_significant = None  # Jacobi sweeps alternate exact-zero v updates
    try:
        for k in range(1, cfg.k_max + 1):
            if cfg.scheme is Scheme.GAUSS_SEIDEL:
                v_k, f_state_k = field_solve_window(field_model, field_state, i_prev, grid)
                i_k, traj_k = circuit_solve_window(mna, circuit_state, v_k, grid)
            else:
                if pool is not None:
                    fut_f = pool.submit(field_solve_window, field_model, field_state, i_prev, grid)
                    fut_c = pool.submit(circuit_solve_window, mna, circuit_state, v_prev, grid)
                    v_k, f_state_k = fut_f.result()
                    i_k, traj_k = fut_c.result()
                else:
                    v_k, f_state_k = field_solve_window(field_model, field_state, i_prev, grid)
                    i_k, traj_k = circuit_solve_window(mna, circuit_state, v_prev, grid)

            ev = v_k.diff_max(v_prev)
            ei = i_k.diff_max(i_prev)
            rep.iteration_errors.append(ev)
            rep.i_errors.append(ei)
            rep.iterations_used = k
            if iterates is not None:
                iterates.append(v_k.values.copy())
            comb = ev + ei
            if first_comb is None:
                first_comb = comb

            if not np.isfinite(comb):
                rep.diverged = True
                break
            if comb <= cfg.tol:
                rep.converged = True
                break
            if comb > cfg.divergence_factor * max(first_comb, 1e-300):
                rep.diverged = True
                break
            if ev > 0.0:
                if k >= 3 and last_significant is not None:
                    if ev > last_significant:
                        growth_streak += 1
                        if growth_streak >= 3:
                            rep.diverged = True
                            break
                    else:
                        growth_streak = 0
                last_significant = ev

            v_prev, i_prev = v_k, i_k
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    traj_values = traj_k.values if traj_k is not None else circuit_state.z[None, :]
    c_state_k = CircuitState(traj_values[-1].copy(), float(grid[-1]))
    return WindowOutcome(v_k, i_k, f_state_k, c_state_k, traj_values, rep, iterates)


def window_bounds(n_total: int, steps_per_window: int) -> list[tuple[int, int]]:
    bounds = []
    a = 0
    while a < n_total:
        b = min(a + steps_per_window, n_total)
        bounds.append((a, b))
        a = b
    return bounds


def wr_solve(field_model: FieldModel, mna: MnaSystem, cfg: WrConfig,
             record_first_window: bool = False) -> WrResult:
    """Windowed waveform relaxation over [0, t_end] from the zero start.

    Windows run in sequence; each window chains the previous window's final
    subsystem states and starts its iteration from constant extrapolation of
    the final coupling values. A diverged window aborts the run (its partial
    data is kept in the report); windows that merely hit k_max continue.
    """
    peak = mna.source_peak_at(0.0)
    if peak > 1e-12:
        raise InconsistentStartError(
            f"sources must vanish at t=0 for the zero start (max |value| = {peak:g})")

    times = uniform_grid(0.0, cfg.t_end, cfg.dt)
    n_total = times.size - 1
    bounds = window_bounds(n_total, round(cfg.h / cfg.dt))

    f_state = FieldState.zero(field_model)
    c_state = CircuitState(np.zeros(mna.dim), 0.0)

    v_all = np.zeros(times.size)
    i_all = np.zeros(times.size)
    z_all = np.zeros((times.size, mna.dim))
    reports: list[WindowReport] = []
    first_iterates = None
    first_grid = None
    verdict = Verdict.CONVERGED

    for w, (a, b) in enumerate(bounds):
        grid = times[a : b + 1]
        outcome = wr_window(field_model, mna, f_state, c_state, grid, cfg,
                            record_iterates=(record_first_window and w == 0),
                            window_index=w)
        reports.append(outcome.report)
        v_all[a : b + 1] = outcome.v.values
        i_all[a : b + 1] = outcome.i.values
        z_all[a : b + 1] = outcome.trajectory
        if w == 0 and record_first_window:
            first_iterates = outcome.v_iterates
            first_grid = grid.copy()
        f_state, c_state = outcome.field_state, outcome.circuit_state
        if outcome.report.diverged:
            verdict = Verdict.DIVERGED
            v_all, i_all, z_all = v_all[: b + 1], i_all[: b + 1], z_all[: b + 1]
            times = times[: b + 1]
            break
        if not outcome.report.converged and verdict is not Verdict.DIVERGED:
            verdict = Verdict.MAX_ITERATIONS

    report = WrReport(scheme=cfg.scheme, per_window=reports, verdict=verdict,
                      measured_rates=_measured_rates(cfg.scheme, reports))
    return WrResult(
        v=Waveform(times, v_all),
        i=Waveform(times, i_all),
        z_values=z_all,
        times=times,
        report=report,
        first_window_iterates=first_iterates,
        first_window_grid=first_grid,
    )


@dataclass(frozen=True)
class RateEstimate:
    rho: float
    two_step_rho: float


def _geomean(vals) -> float:
    return float(np.exp(np.mean(np.log(vals))))


def estimate_rates(report: WrReport, scheme: Scheme | None = None) -> RateEstimate:
    """Measured contraction factors from the iteration-error sequences.

    ``rho`` is the geometric mean of consecutive-error ratios over the
    asymptotic tail (last half of each qualifying window's ratios);
    ``two_step_rho`` is the same for ratios two iterations apart. Windows
    need at least 4 recorded errors to qualify.
    """
    one_step: list[float] = []
    two_step: list[float] = []
    for w in report.per_window:
        e = w.iteration_errors
        if len(e) < 4:
            continue
        ratios = [e[j + 1] / e[j] for j in range(len(e) - 1) if e[j] > 0 and e[j + 1] > 0]
        if ratios:
            one_step.extend(ratios[len(ratios) // 2 :])
        r2 = [e[j + 2] / e[j] for j in range(len(e) - 2) if e[j] > 0 and e[j + 2] > 0]
        if r2:
            two_step.extend(r2[len(r2) // 2 :])
    if not one_step or not two_step:
        raise ValueError("insufficient iterations: no window recorded at least 4 errors")
    return RateEstimate(rho=_geomean(one_step), two_step_rho=_geomean(two_step))


def _measured_rates(scheme: Scheme, reports: list[WindowReport]) -> dict:
    rates = {"rho_gs": None, "rho_jacobi_two_step": None}
    try:
        est = estimate_rates(WrReport(scheme, reports, Verdict.CONVERGED, {}))
    except ValueError:
        return rates
    if scheme is Scheme.GAUSS_SEIDEL:
        rates["rho_gs"] = est.rho
    else:
        rates["rho_jacobi_two_step"] = est.two_step_rho
    return rates
