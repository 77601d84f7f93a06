"""Sampled time functions exchanged between the coupled subsystems.

A waveform is a strictly increasing time grid with one sample per grid point
and piecewise-linear interpolation in between. Evaluation outside the covered
span is an error; the derivative is the piecewise-constant segment slope.
"""

import numpy as np


class Waveform:
    """Piecewise-linear function of time on a fixed grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 1:
            raise ValueError("grid and values must be 1-d arrays of equal length >= 1")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        self.grid = grid
        self.values = values

    @classmethod
    def constant(cls, grid, value: float) -> "Waveform":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid, fn) -> "Waveform":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray([fn(t) for t in grid], dtype=float))

    @property
    def t0(self) -> float:
        return float(self.grid[0])

    @property
    def t1(self) -> float:
        return float(self.grid[-1])

    def _check_span(self, t):
        slack = 1e-9 * max(self.t1 - self.t0, 1.0)
        if np.any(t < self.t0 - slack) or np.any(t > self.t1 + slack):
            raise ValueError(
                f"evaluation at t outside waveform span [{self.t0}, {self.t1}]"
            )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        self._check_span(t)
        out = np.interp(t, self.grid, self.values)
        return float(out) if out.ndim == 0 else out

    def slope(self, t):
        """Piecewise-constant derivative; the segment (t[j], t[j+1]] owns t."""
        t = np.asarray(t, dtype=float)
        self._check_span(t)
        if self.grid.size < 2:
            return 0.0 if t.ndim == 0 else np.zeros(t.shape)
        idx = np.clip(np.searchsorted(self.grid, t, side="left"), 1, self.grid.size - 1)
        seg = (self.values[idx] - self.values[idx - 1]) / (self.grid[idx] - self.grid[idx - 1])
        return float(seg) if seg.ndim == 0 else seg

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def same_grid(self, other: "Waveform") -> bool:
        return self.grid.shape == other.grid.shape and np.array_equal(self.grid, other.grid)

    def diff_max(self, other: "Waveform") -> float:
        """Sup-norm of the difference; both waveforms must share the grid."""
        if not self.same_grid(other):
            raise ValueError("waveforms are on different grids")
        return float(np.max(np.abs(self.values - other.values)))

    def add(self, other: "Waveform") -> "Waveform":
        if not self.same_grid(other):
            raise ValueError("waveforms are on different grids")
        return Waveform(self.grid, self.values + other.values)

    def restrict(self, a: int, b: int) -> "Waveform":
        """Sub-waveform on grid indices [a, b] inclusive."""
        return Waveform(self.grid[a : b + 1], self.values[a : b + 1])

    def __repr__(self):
        return f"Waveform(n={self.grid.size}, span=[{self.t0:g}, {self.t1:g}])"


def uniform_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    """Uniform grid t0 + n*dt covering [t0, t1]; (t1-t0) must be a multiple of dt."""
    span = t1 - t0
    n = int(round(span / dt))
    if n < 0 or abs(n * dt - span) > 1e-9 * max(dt, 1.0):
        raise ValueError(f"span {span} is not an integer multiple of dt={dt}")
    return t0 + dt * np.arange(n + 1)
