"""Implicit-Euler time stepping shared by the field, circuit and coupled solvers.

Systems are written in descriptor form E z' + G z + nl(t, z) = b(t) with a
constant E and constant linear part G. Linear systems go through the kernel
descriptor sweep (one matrix factorization per window); systems with a
nonlinear part use a per-step Newton iteration.
"""

import numpy as np

from . import _kernels
from .errors import SolverError

NEWTON_TOL = 1e-10
NEWTON_MAX = 50


def grid_dt(grid: np.ndarray) -> float:
    """Step of a uniform grid; raises for non-uniform spacing."""
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must have at least two points")
    dt = float(grid[1] - grid[0])
    if dt <= 0 or np.max(np.abs(np.diff(grid) - dt)) > 1e-9 * dt:
        raise ValueError("grid must be uniform and increasing")
    return dt


def integrate_linear(e_mat, g_mat, b_steps, z0, dt):
    """Trajectory of E z' + G z = b by implicit Euler on a uniform grid.

    ``b_steps[s]`` is b evaluated at the end of step ``s``. Returns the array
    of shape ``(len(b_steps)+1, dim)`` including the initial state.
    """
    lane = _kernels.active()
    e_dt = e_mat / dt
    try:
        return lane.descriptor_sweep(e_dt, e_dt + g_mat, np.ascontiguousarray(b_steps), np.asarray(z0, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular implicit-Euler matrix: {exc}") from exc


def integrate_newton(e_mat, g_mat, b_steps, z0, dt, t_grid, nl_res, nl_jac,
                     tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX):
    """Implicit Euler with a per-step Newton solve for the nonlinear part.

    ``nl_res(t, z, z_prev)`` and ``nl_jac(t, z, z_prev)`` add the nonlinear
    residual contribution and its Jacobian with respect to ``z``.
    """
    lane = _kernels.active()
    e_dt = e_mat / dt
    m_lin = e_dt + g_mat
    m = b_steps.shape[0]
    z = np.empty((m + 1, z0.shape[0]))
    z[0] = np.asarray(z0, dtype=float)
    for s in range(m):
        t1 = t_grid[s + 1]
        zp = z[s]
        zn = zp.copy()
        converged = False
        for _ in range(max_iter):
            r = e_dt @ (zn - zp) + g_mat @ zn + nl_res(t1, zn, zp) - b_steps[s]
            res = float(np.max(np.abs(r)))
            if not np.isfinite(res):
                raise SolverError("non-finite residual in Newton iteration", step=s, residual=res)
            if res <= tol:
                converged = True
                break
            jac = m_lin + nl_jac(t1, zn, zp)
            try:
                lu, piv = lane.lu_factor(jac)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"singular Newton matrix: {exc}", step=s) from exc
            zn = zn - lane.lu_solve(lu, piv, r)
        if not converged:
            raise SolverError("Newton did not reach tolerance", step=s, residual=res)
        z[s + 1] = zn
    return z
