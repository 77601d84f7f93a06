"""Modified nodal analysis of the circuit with the coupled device's terminal
voltage imposed.

Unknown vector z = (node potentials e, inductor currents, voltage-source
currents, coupling branch current i). The assembled residual is

    E z' + f(t, z) + P * i = 0          (KCL, inductor and source rows)
    P^T z = v_in(t)                     (imposed terminal voltage)

with P carrying the device incidence column, so P^T z is the potential
difference across the device terminals. Positive i flows from the positive
terminal node into the device.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NetlistError, SolverError
from .netlist import CircuitGraph, ElementKind
from .stepping import grid_dt, integrate_linear, integrate_newton
from .waveform import Waveform

_EXP_CLAMP = 350.0  # exp argument cap; keeps intermediate Newton states finite


@dataclass
class CircuitState:
    z: np.ndarray
    t: float

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        if not np.all(np.isfinite(self.z)):
            raise ValueError("circuit state entries must be finite")


@dataclass(frozen=True)
class ZLayout:
    """Index bookkeeping for the MNA unknown vector."""

    node_ids: tuple[int, ...]
    inductor_names: tuple[str, ...]
    source_names: tuple[str, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def dim(self) -> int:
        return len(self.node_ids) + len(self.inductor_names) + len(self.source_names) + 1

    @property
    def coupling_index(self) -> int:
        return self.dim - 1

    @property
    def names(self) -> tuple[str, ...]:
        return (
            tuple(f"e{n}" for n in self.node_ids)
            + tuple(f"i_{n}" for n in self.inductor_names)
            + tuple(f"i_{n}" for n in self.source_names)
            + ("i_f",)
        )


class _DiodeStamp:
    def __init__(self, rows, i_s, v_t):
        self.rows = rows  # list of (p_row | None, m_row | None)
        self.i_s = np.asarray(i_s, dtype=float)
        self.v_t = np.asarray(v_t, dtype=float)

    def _voltages(self, z):
        u = np.zeros(len(self.rows))
        for j, (p, m) in enumerate(self.rows):
            if p is not None:
                u[j] += z[p]
            if m is not None:
                u[j] -= z[m]
        return u

    def residual(self, z, out):
        u = self._voltages(z)
        cur = self.i_s * np.expm1(np.minimum(u / self.v_t, _EXP_CLAMP))
        for j, (p, m) in enumerate(self.rows):
            if p is not None:
                out[p] += cur[j]
            if m is not None:
                out[m] -= cur[j]

    def jacobian(self, z, out):
        u = self._voltages(z)
        gd = self.i_s / self.v_t * np.exp(np.minimum(u / self.v_t, _EXP_CLAMP))
        for j, (p, m) in enumerate(self.rows):
            if p is not None:
                out[p, p] += gd[j]
            if m is not None:
                out[m, m] += gd[j]
            if p is not None and m is not None:
                out[p, m] -= gd[j]
                out[m, p] -= gd[j]


class MnaSystem:
    """Assembled descriptor system for one circuit graph."""

    def __init__(self, graph: CircuitGraph):
        self.graph = graph
        lay = ZLayout(
            node_ids=graph.nodes,
            inductor_names=tuple(el.name for el in graph.elements_of(ElementKind.INDUCTOR)),
            source_names=tuple(el.name for el in graph.elements_of(ElementKind.VOLTAGE_SOURCE)),
        )
        self.layout = lay
        dim = lay.dim
        self.dim = dim
        n = lay.n_nodes

        def row(node):
            return None if node == 0 else graph.node_row(node)

        e_mat = np.zeros((dim, dim))
        g_mat = np.zeros((dim, dim))
        p_vec = np.zeros(dim)
        i_sources = []  # (rows-with-sign, SourceSpec)
        v_sources = []  # (row, SourceSpec)

        il = n
        iv = n + len(lay.inductor_names)
        for el in graph.elements:
            p, m = row(el.node_plus), row(el.node_minus)
            kind = el.kind
            if kind is ElementKind.RESISTOR:
                g = 1.0 / el.params
                _stamp_pair(g_mat, p, m, g)
            elif kind is ElementKind.CAPACITOR:
                _stamp_pair(e_mat, p, m, el.params)
            elif kind is ElementKind.INDUCTOR:
                if p is not None:
                    g_mat[p, il] += 1.0
                    g_mat[il, p] -= 1.0
                if m is not None:
                    g_mat[m, il] -= 1.0
                    g_mat[il, m] += 1.0
                e_mat[il, il] = el.params
                il += 1
            elif kind is ElementKind.VOLTAGE_SOURCE:
                if p is not None:
                    g_mat[p, iv] += 1.0
                    g_mat[iv, p] += 1.0
                if m is not None:
                    g_mat[m, iv] -= 1.0
                    g_mat[iv, m] -= 1.0
                v_sources.append((iv, el.params))
                iv += 1
            elif kind is ElementKind.CURRENT_SOURCE:
                rows = []
                if p is not None:
                    rows.append((p, +1.0))
                if m is not None:
                    rows.append((m, -1.0))
                i_sources.append((rows, el.params))
            elif kind is ElementKind.FIELD:
                ic = lay.coupling_index
                if p is not None:
                    g_mat[p, ic] += 1.0
                    g_mat[ic, p] += 1.0
                    p_vec[p] = 1.0
                if m is not None:
                    g_mat[m, ic] -= 1.0
                    g_mat[ic, m] -= 1.0
                    p_vec[m] = -1.0

        diode_rows, d_is, d_vt = [], [], []
        for el in graph.elements_of(ElementKind.DIODE):
            diode_rows.append((row(el.node_plus), row(el.node_minus)))
            d_is.append(el.params.i_s)
            d_vt.append(el.params.v_t)
        self.diodes = _DiodeStamp(diode_rows, d_is, d_vt) if diode_rows else None

        self.E = e_mat
        self.G = g_mat
        self.P = p_vec
        self._i_sources = i_sources
        self._v_sources = v_sources
        self._check_structure()

    def _check_structure(self):
        # Probe the pencil of the coupled form (device modeled as a unit
        # capacitance) so that only genuinely defective circuits are flagged,
        # e.g. a current-source cutset leaving a KCL row empty. Degeneracies
        # specific to the imposed-voltage solve (a voltage source directly in
        # parallel with the device) surface later as singular solves.
        ic = self.layout.coupling_index
        probe = np.zeros((self.dim + 1, self.dim + 1))
        probe[: self.dim, : self.dim] = self.E + self.G
        probe[ic, self.dim] = -1.0  # constraint row ties P^T z to the device v
        probe[self.dim, ic] = -1.0  # device row: v' - i = 0
        probe[self.dim, self.dim] = 1.0
        if self.diodes is not None:
            self.diodes.jacobian(np.zeros(self.dim), probe[: self.dim, : self.dim])
        try:
            _kernels.active().lu_factor(probe)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"structurally singular MNA system: {exc}") from exc

    # -- contract surface --------------------------------------------------

    def eval_E(self, z) -> np.ndarray:
        """Descriptor matrix; constant for the quasilinear elements here."""
        return self.E

    def eval_f(self, t: float, z) -> np.ndarray:
        """f(t, z) of the residual E z' + f + P i = 0 (no coupling column)."""
        z = np.asarray(z, dtype=float)
        g0 = self.G.copy()
        ic = self.layout.coupling_index
        g0[:, ic] = 0.0
        g0[ic, :] = 0.0
        out = g0 @ z
        if self.diodes is not None:
            self.diodes.residual(z, out)
        for rows, spec in self._i_sources:
            val = float(spec.value(t))
            for r, sgn in rows:
                out[r] += sgn * val
        for r, spec in self._v_sources:
            out[r] -= float(spec.value(t))
        return out

    # -- right-hand side ----------------------------------------------------

    def rhs_samples(self, times: np.ndarray, v_in: np.ndarray | None = None) -> np.ndarray:
        """b(t) samples for the solve  E z' + G z + nl(z) = b(t)."""
        times = np.asarray(times, dtype=float)
        b = np.zeros((times.size, self.dim))
        for rows, spec in self._i_sources:
            vals = spec.value(times)
            for r, sgn in rows:
                b[:, r] -= sgn * vals
        for r, spec in self._v_sources:
            b[:, r] += spec.value(times)
        if v_in is not None:
            b[:, self.layout.coupling_index] = v_in
        return b

    def source_peak_at(self, t: float) -> float:
        """Largest source magnitude at one instant (consistency checks)."""
        vals = [abs(float(spec.value(t))) for _, spec in self._i_sources]
        vals += [abs(float(spec.value(t))) for _, spec in self._v_sources]
        return max(vals, default=0.0)


def _stamp_pair(mat, p, m, w):
    if p is not None:
        mat[p, p] += w
    if m is not None:
        mat[m, m] += w
    if p is not None and m is not None:
        mat[p, m] -= w
        mat[m, p] -= w


def assemble_mna(graph: CircuitGraph) -> MnaSystem:
    """Stamp the circuit graph into its descriptor system."""
    if len(graph.elements_of(ElementKind.FIELD)) != 1:
        raise NetlistError("assembly needs exactly one F element")
    return MnaSystem(graph)


class CircuitTrajectory:
    """Dense window trajectory with per-step state access."""

    def __init__(self, times: np.ndarray, values: np.ndarray, layout: ZLayout):
        self.times = times
        self.values = values
        self.layout = layout

    def __len__(self):
        return self.times.size

    def state(self, n: int) -> CircuitState:
        return CircuitState(self.values[n].copy(), float(self.times[n]))

    def __iter__(self):
        return (self.state(n) for n in range(len(self)))

    def csv_text(self) -> str:
        """Rows of t, non-coupling unknowns, coupling current."""
        names = self.layout.names
        header = "t," + ",".join(names[:-1]) + ",i_coupling"
        lines = [header]
        for n in range(len(self)):
            vals = [repr(float(self.times[n]))] + [repr(float(v)) for v in self.values[n]]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"


def circuit_solve_window(sys: MnaSystem, initial: CircuitState, v_input: Waveform,
                         grid: np.ndarray) -> tuple[Waveform, CircuitTrajectory]:
    """Integrate the circuit over one window with the device voltage imposed.

    Returns the coupling-current samples and the full trajectory.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a non-empty 1-d array")
    slack = 1e-9 * max(1.0, float(grid[-1] - grid[0]))
    if v_input.t0 > grid[0] + slack or v_input.t1 < grid[-1] - slack:
        raise ValueError("imposed voltage waveform does not cover the window span")
    z0 = np.asarray(initial.z, dtype=float)
    if z0.shape != (sys.dim,):
        raise ValueError(f"initial state has dim {z0.shape}, system needs {sys.dim}")
    ic = sys.layout.coupling_index
    if grid.size == 1:
        traj = CircuitTrajectory(grid, z0[None, :].copy(), sys.layout)
        return Waveform(grid, [z0[ic]]), traj

    dt = grid_dt(grid)
    b = sys.rhs_samples(grid[1:], np.asarray(v_input(grid[1:]), dtype=float))
    if sys.diodes is None:
        z = integrate_linear(sys.E, sys.G, b, z0, dt)
    else:
        z = integrate_newton(
            sys.E, sys.G, b, z0, dt, grid,
            nl_res=lambda t, zz, zp: _diode_res(sys, zz),
            nl_jac=lambda t, zz, zp: _diode_jac(sys, zz),
        )
    return Waveform(grid, z[:, ic].copy()), CircuitTrajectory(grid, z, sys.layout)


def _diode_res(sys, z):
    out = np.zeros(sys.dim)
    sys.diodes.residual(z, out)
    return out


def _diode_jac(sys, z):
    out = np.zeros((sys.dim, sys.dim))
    sys.diodes.jacobian(z, out)
    return out


def perturbed_response(sys: MnaSystem, initial: CircuitState, v_input: Waveform,
                       delta: Waveform, grid: np.ndarray) -> float:
    """Measured gain of a terminal-voltage perturbation.

    Solves with v_input and with v_input + delta and returns
    max_t |(z, i)_pert - (z, i)| / max(max_t |delta|, 1e-14), the ratio of
    sup norms over the window (the response can outlive a transient
    perturbation, so a pointwise ratio would be ill-posed).
    """
    grid = np.asarray(grid, dtype=float)
    _, base = circuit_solve_window(sys, initial, v_input, grid)
    pert_vals = np.asarray(v_input(grid), dtype=float) + np.asarray(delta(grid), dtype=float)
    _, pert = circuit_solve_window(sys, initial, Waveform(grid, pert_vals), grid)
    diff = float(np.max(np.abs(pert.values - base.values)))
    dmax = float(np.max(np.abs(np.asarray(delta(grid), dtype=float))))
    return diff / max(dmax, 1e-14)
