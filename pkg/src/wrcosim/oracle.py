"""Monolithic reference solver for the fully coupled circuit + device system.

Solves circuit and device simultaneously on one grid with the same implicit
Euler scheme the subsystem solvers use, so differences between co-simulated
and monolithic solutions measure the iteration error alone. Also provides
the consistent zero start used by every run.
"""

from dataclasses import dataclass

import numpy as np

from .circuit import CircuitState, MnaSystem
from .errors import InconsistentStartError
from .field import FieldModel, FieldState, LinearCapField
from .stepping import integrate_linear, integrate_newton
from .waveform import Waveform, uniform_grid


class CoupledSystem:
    """Combined unknown vector (z, v, x); z ends with the coupling current i.

    The coupling identities P^T z = v and "device input current equals the
    circuit's coupling branch current" are assembled into the rows, so they
    hold at every accepted step by construction.
    """

    def __init__(self, mna: MnaSystem, field: FieldModel):
        self.mna = mna
        self.field = field
        dz = mna.dim
        nx = field.state_dim
        self.dim = dz + 1 + nx
        self.dz = dz
        self.v_index = dz
        self.i_index = mna.layout.coupling_index
        self.names = mna.layout.names + ("v_f",) + tuple(f"x{j+1}" for j in range(nx))
        self.is_linear_field = isinstance(field, LinearCapField)

        e_c = np.zeros((self.dim, self.dim))
        g_c = np.zeros((self.dim, self.dim))
        e_c[:dz, :dz] = mna.E
        g_c[:dz, :dz] = mna.G
        # The imposed-voltage row of the circuit now ties P^T z to the device v.
        g_c[self.i_index, self.v_index] = -1.0
        if self.is_linear_field:
            e_c[dz:, dz:] = field.cap_matrix
            g_c[dz:, dz:] = field.cond_matrix
            g_c[dz, self.i_index] -= 1.0
        else:
            # Contract-only model: device rows enter the Newton iteration as
            # y' - rate(y, i, t) - R_chi(i) * i' = 0 with unit descriptor rows.
            e_c[dz:, dz:] = np.eye(1 + nx)
        self.e_full = e_c
        self.g_full = g_c

    def rhs_samples(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        b = np.zeros((times.size, self.dim))
        b[:, : self.dz] = self.mna.rhs_samples(times)
        return b

    # -- nonlinear contributions -------------------------------------------

    def _device_rate(self, t, z):
        v, x = float(z[self.dz]), z[self.dz + 1 :]
        i1 = float(z[self.i_index])
        return np.concatenate((
            [self.field.g(x, i1, v, t)],
            np.atleast_1d(self.field.chi(x, i1, v, t)) if self.field.state_dim else np.empty(0),
        ))

    def make_nl(self, dt: float):
        """Residual/Jacobian closures for the per-step Newton iteration."""
        has_diodes = self.mna.diodes is not None
        generic = not self.is_linear_field

        def nl_res(t, z, zp):
            out = np.zeros(self.dim)
            if has_diodes:
                self.mna.diodes.residual(z, out)
            if generic:
                i1, i0 = float(z[self.i_index]), float(zp[self.i_index])
                rch = np.concatenate(([0.0], self.field.r_chi(i1) * ((i1 - i0) / dt)))
                out[self.dz :] -= self._device_rate(t, z) + rch
            return out

        def nl_jac(t, z, zp):
            out = np.zeros((self.dim, self.dim))
            if has_diodes:
                self.mna.diodes.jacobian(z, out)
            if generic:
                cols = [self.i_index] + list(range(self.dz, self.dim))
                r0 = nl_res(t, z, zp)[self.dz :]
                for j in cols:
                    zpert = z.copy()
                    h = 1e-7 * max(1.0, abs(z[j]))
                    zpert[j] += h
                    out[self.dz :, j] += (nl_res(t, zpert, zp)[self.dz :] - r0) / h
            return out

        return nl_res, nl_jac

    def algebraic_rows(self) -> np.ndarray:
        """Rows with no differential term; these constrain initial values."""
        return np.where(~self.e_full.any(axis=1))[0]


def build_coupled(mna: MnaSystem, field: FieldModel) -> CoupledSystem:
    return CoupledSystem(mna, field)


@dataclass
class MonolithicResult:
    times: np.ndarray
    values: np.ndarray
    names: tuple[str, ...]
    v_mono: Waveform
    i_coupling: Waveform
    coupled: CoupledSystem

    def csv_text(self) -> str:
        c = self.coupled
        z_cols = [j for j in range(c.dz) if j != c.i_index]
        x_cols = list(range(c.dz + 1, c.dim))
        header = "t,v_mono," + ",".join(c.names[j] for j in z_cols)
        if x_cols:
            header += "," + ",".join(c.names[j] for j in x_cols)
        header += ",i"
        lines = [header]
        for n in range(self.times.size):
            row = [repr(float(self.times[n])), repr(float(self.values[n, c.v_index]))]
            row += [repr(float(self.values[n, j])) for j in z_cols]
            row += [repr(float(self.values[n, j])) for j in x_cols]
            row.append(repr(float(self.values[n, c.i_index])))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def consistent_start(coupled: CoupledSystem, state: np.ndarray | None = None,
                     t0: float = 0.0) -> tuple[CircuitState, FieldState]:
    """Consistent initial data at t0, by construction or by verification.

    Without ``state``: all sources must vanish at t0, which makes the all-zero
    state consistent; the residual is verified to 1e-12 regardless. With
    ``state``: the supplied combined vector is accepted iff every algebraic
    row (KCL rows without capacitive stamps, source rows, the terminal-voltage
    constraint) holds to 1e-12.
    """
    if state is None:
        peak = coupled.mna.source_peak_at(t0)
        if peak > 1e-12:
            raise InconsistentStartError(
                f"a source is nonzero at t0={t0} (max |value| = {peak:g}); "
                "the zero start is inconsistent"
            )
        state = np.zeros(coupled.dim)
    else:
        state = np.asarray(state, dtype=float)
        if state.shape != (coupled.dim,):
            raise InconsistentStartError(
                f"state has shape {state.shape}, coupled system needs ({coupled.dim},)"
            )
    nl_res, _ = coupled.make_nl(dt=1.0)
    b0 = coupled.rhs_samples([t0])[0]
    res = coupled.g_full @ state + nl_res(t0, state, state) - b0
    rows = coupled.algebraic_rows()
    worst = float(np.max(np.abs(res[rows]))) if rows.size else 0.0
    if worst > 1e-12:
        raise InconsistentStartError(
            f"algebraic constraint residual {worst:g} exceeds 1e-12 at t0={t0}"
        )
    z = state[: coupled.dz]
    return (
        CircuitState(z.copy(), t0),
        FieldState(state[coupled.dz + 1 :].copy(), float(state[coupled.v_index]), t0),
    )


def monolithic_solve(coupled: CoupledSystem, dt: float, t_end: float,
                     initial: np.ndarray | None = None) -> MonolithicResult:
    """Implicit Euler on the simultaneous circuit + device system."""
    cz, fz = consistent_start(coupled, initial)
    y0 = np.concatenate((cz.z, [fz.v], fz.x))
    times = uniform_grid(0.0, t_end, dt)
    b = coupled.rhs_samples(times[1:])
    if coupled.mna.diodes is None and coupled.is_linear_field:
        values = integrate_linear(coupled.e_full, coupled.g_full, b, y0, dt)
    else:
        nl_res, nl_jac = coupled.make_nl(dt)
        values = integrate_newton(coupled.e_full, coupled.g_full, b, y0, dt, times,
                                  nl_res=nl_res, nl_jac=nl_jac)
    return MonolithicResult(
        times=times,
        values=values,
        names=coupled.names,
        v_mono=Waveform(times, values[:, coupled.v_index].copy()),
        i_coupling=Waveform(times, values[:, coupled.i_index].copy()),
        coupled=coupled,
    )
