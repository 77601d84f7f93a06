"""Pure-python (numpy) lane for the dense stepping kernels.

Same API as the compiled lane in ``_stepcore.pyx``; used when the extension
is not built or when forced via ``WRCOSIM_KERNELS=python``.
"""

import numpy as np

NAME = "python"


def lu_factor(a):
    """Factor a square matrix with partial pivoting, PA = LU.

    Returns ``(lu, piv)`` where ``lu`` packs the unit-lower and upper factors
    and ``piv`` records the row swap done at each elimination stage.
    Raises ``np.linalg.LinAlgError`` for a (numerically) singular matrix.
    """
    lu = np.array(a, dtype=float, order="C", copy=True)
    n = lu.shape[0]
    piv = np.zeros(n, dtype=np.int64)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if lu[p, k] == 0.0:
            raise np.linalg.LinAlgError(f"singular matrix: zero pivot at column {k}")
        piv[k] = p
        if p != k:
            lu[[k, p], :] = lu[[p, k], :]
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, piv


def lu_solve(lu, piv, b):
    """Solve A x = b given a factorization from :func:`lu_factor`."""
    x = np.array(b, dtype=float, copy=True)
    n = lu.shape[0]
    for k in range(n):
        p = piv[k]
        if p != k:
            x[k], x[p] = x[p], x[k]
    for k in range(n):
        x[k + 1 :] -= lu[k + 1 :, k] * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1 :] @ x[k + 1 :]) / lu[k, k]
    return x


def descriptor_sweep(e_dt, m_mat, b_steps, z0):
    """Implicit-Euler sweep for a constant-coefficient descriptor system.

    Steps ``M z[n+1] = (E/dt) z[n] + b[n+1]`` where ``m_mat = E/dt + G`` and
    ``e_dt = E/dt``; ``b_steps[s]`` holds the right-hand side of step ``s``.
    Returns the trajectory array of shape ``(len(b_steps) + 1, dim)``.
    """
    lu, piv = lu_factor(m_mat)
    m = b_steps.shape[0]
    z = np.empty((m + 1, z0.shape[0]))
    z[0] = z0
    for s in range(m):
        z[s + 1] = lu_solve(lu, piv, e_dt @ z[s] + b_steps[s])
    return z
