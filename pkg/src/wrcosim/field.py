"""Capacitance-like coupled device models.

The contract: a device with internal state x and terminal voltage v, driven
by the terminal current i, evolving as

    x' = chi(x, i, v, t) + R_chi(i) * i'
    v' = g(x, i, v, t)

where g takes no derivative of the input current. Positive i flows from the
device's positive terminal node into the device (it charges the device).

Two concrete models are provided: a single lumped capacitor, and a
conductive-capacitive ladder, the classic one-dimensional semi-discretization
of a lossy distributed insulation structure (e.g. a cable termination). Both
are linear and expose their descriptor matrices for fast window integration.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .netlist import FieldSpec
from .stepping import NEWTON_MAX, NEWTON_TOL, grid_dt, integrate_linear
from .waveform import Waveform


@dataclass
class FieldState:
    """Device state at one instant: internal values x, terminal voltage v."""

    x: np.ndarray
    v: float
    t: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if not (np.all(np.isfinite(self.x)) and np.isfinite(self.v)):
            raise ValueError("field state entries must be finite")

    @classmethod
    def zero(cls, model: "FieldModel", t: float = 0.0) -> "FieldState":
        return cls(np.zeros(model.state_dim), 0.0, t)

    @property
    def y(self) -> np.ndarray:
        """Stacked [v, x] vector used by the integrators."""
        return np.concatenate(([self.v], self.x))


class FieldModel:
    """Base contract; subclasses implement chi, r_chi and g."""

    state_dim: int = 0

    def chi(self, x, i, v, t):
        """Time derivative contribution of the internal state."""
        raise NotImplementedError

    def r_chi(self, i):
        """Coefficient of i' in the internal-state equation."""
        raise NotImplementedError

    def g(self, x, i, v, t):
        """Time derivative of the terminal voltage (never sees i')."""
        raise NotImplementedError


class LinearCapField(FieldModel):
    """Linear capacitance-like device in descriptor form.

    With y = [v, x], the device satisfies  cap @ y' + cond @ y = e0 * i,
    where cap is symmetric positive definite (checked by an attempted
    Cholesky factorization) and cond symmetric positive semidefinite.
    The contract functions are derived views of this descriptor system and
    R_chi is identically zero.
    """

    def __init__(self, cap_matrix, cond_matrix):
        cap = np.array(cap_matrix, dtype=float)
        cond = np.array(cond_matrix, dtype=float)
        if cap.shape != cond.shape or cap.ndim != 2 or cap.shape[0] != cap.shape[1]:
            raise ValueError("cap and cond must be square matrices of equal shape")
        if not np.allclose(cap, cap.T, atol=1e-12):
            raise ValueError("cap matrix must be symmetric")
        if not np.allclose(cond, cond.T, atol=1e-12):
            raise ValueError("cond matrix must be symmetric")
        try:
            np.linalg.cholesky(cap)
        except np.linalg.LinAlgError as exc:
            raise ValueError("cap matrix must be positive definite") from exc
        eig = np.linalg.eigvalsh(cond)
        if eig.size and eig.min() < -1e-12 * max(1.0, eig.max()):
            raise ValueError("cond matrix must be positive semidefinite")
        self.cap_matrix = cap
        self.cond_matrix = cond
        self.state_dim = cap.shape[0] - 1
        self._e0 = np.zeros(cap.shape[0])
        self._e0[0] = 1.0

    def _ydot(self, x, i, v, t):
        y = np.concatenate(([v], np.atleast_1d(np.asarray(x, dtype=float)))) if self.state_dim else np.array([v], dtype=float)
        rhs = self._e0 * float(i) - self.cond_matrix @ y
        return np.linalg.solve(self.cap_matrix, rhs)

    def chi(self, x, i, v, t):
        return self._ydot(x, i, v, t)[1:]

    def r_chi(self, i):
        return np.zeros(self.state_dim)

    def g(self, x, i, v, t):
        return float(self._ydot(x, i, v, t)[0])


def lumped_cap(c: float) -> LinearCapField:
    """Single linear capacitor: v' = i / C, no internal state."""
    if not c > 0:
        raise ValueError("capacitance must be > 0")
    return LinearCapField([[float(c)]], [[0.0]])


def ladder(sections: int, c_total: float, g_total: float) -> LinearCapField:
    """Conductive-capacitive ladder with ``sections`` internal nodes.

    A chain of ``sections + 1`` identical segments joins the terminal to
    ground; each segment is a capacitance in parallel with a conductance,
    sized so the series totals equal ``c_total`` and ``g_total``. The matrices
    are the reduced weighted graph Laplacians of the chain.
    """
    if sections < 1:
        raise ValueError("ladder needs at least one internal node")
    if not c_total > 0 or g_total < 0:
        raise ValueError("ladder needs c_total > 0 and g_total >= 0")
    n = sections + 1  # number of segments; node 0 is the terminal
    c_seg = n * c_total
    g_seg = n * g_total
    cap = np.zeros((n, n))
    cond = np.zeros((n, n))
    for j in range(n):  # segment j joins node j to node j+1 (node n = ground)
        for mat, w in ((cap, c_seg), (cond, g_seg)):
            mat[j, j] += w
            if j + 1 < n:
                mat[j + 1, j + 1] += w
                mat[j, j + 1] -= w
                mat[j + 1, j] -= w
    return LinearCapField(cap, cond)


def field_from_spec(spec: FieldSpec) -> FieldModel:
    """Instantiate the device model named by a netlist F element."""
    if spec.model == "lumped":
        return lumped_cap(spec.capacitance)
    return ladder(spec.sections, spec.c_total, spec.g_total)


def _fd_jac(res_fn, y, eps: float = 1e-7) -> np.ndarray:
    r0 = res_fn(y)
    jac = np.empty((r0.size, y.size))
    for j in range(y.size):
        yp = y.copy()
        h = eps * max(1.0, abs(y[j]))
        yp[j] += h
        jac[:, j] = (res_fn(yp) - r0) / h
    return jac


def field_solve_window(model: FieldModel, initial: FieldState, i_input: Waveform,
                       grid: np.ndarray) -> tuple[Waveform, FieldState]:
    """Integrate the device over one window with the current imposed.

    The input current is interpolated from ``i_input`` (piecewise linear, so
    its derivative is the segment slope). Implicit Euler on the grid; returns
    the terminal-voltage samples and the final state.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("grid must be a non-empty 1-d array")
    slack = 1e-9 * max(1.0, float(grid[-1] - grid[0]))
    if i_input.t0 > grid[0] + slack or i_input.t1 < grid[-1] - slack:
        raise ValueError("input current waveform does not cover the window span")
    if grid.size == 1:
        return Waveform(grid, [initial.v]), FieldState(initial.x.copy(), initial.v, float(grid[0]))

    dt = grid_dt(grid)
    i_vals = i_input(grid)
    if isinstance(model, LinearCapField):
        b = np.outer(i_vals[1:], model._e0)
        traj = integrate_linear(model.cap_matrix, model.cond_matrix, b, initial.y, dt)
    else:
        traj = _solve_generic(model, initial, i_input, grid, i_vals, dt)
    v_out = Waveform(grid, traj[:, 0])
    final = FieldState(traj[-1, 1:].copy(), float(traj[-1, 0]), float(grid[-1]))
    return v_out, final


def _solve_generic(model, initial, i_input, grid, i_vals, dt):
    """Newton path for contract models without descriptor matrices."""
    slopes = i_input.slope(grid[1:])
    slopes = np.atleast_1d(slopes)
    dim = 1 + model.state_dim
    traj = np.empty((grid.size, dim))
    traj[0] = initial.y
    for s in range(grid.size - 1):
        t1 = grid[s + 1]
        i1 = i_vals[s + 1]
        di = slopes[s]
        y0 = traj[s]
        rterm = np.concatenate(([0.0], model.r_chi(i1) * di)) * dt

        def res(y1):
            rate = np.concatenate((
                [model.g(y1[1:], i1, y1[0], t1)],
                np.atleast_1d(model.chi(y1[1:], i1, y1[0], t1)) if model.state_dim else np.empty(0),
            ))
            return y1 - y0 - dt * rate - rterm

        y = y0.copy()
        converged = False
        for _ in range(NEWTON_MAX):
            r = res(y)
            if not np.all(np.isfinite(r)):
                raise SolverError("non-finite device residual", step=s)
            if np.max(np.abs(r)) <= NEWTON_TOL:
                converged = True
                break
            y = y - np.linalg.solve(_fd_jac(res, y), r)
        if not converged:
            raise SolverError("device Newton did not converge", step=s,
                              residual=float(np.max(np.abs(res(y)))))
        traj[s + 1] = y
    return traj
