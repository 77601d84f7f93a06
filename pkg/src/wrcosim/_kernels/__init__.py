"""Dense stepping kernels, in two interchangeable lanes.

``_stepcore`` is a small compiled extension (Cython) holding the hot inner
loops: LU factor/solve with partial pivoting and the implicit-Euler
descriptor sweep. ``pylane`` is a numpy implementation of the same API used
as fallback when the extension is absent. The active lane is chosen at
import; set ``WRCOSIM_KERNELS=python`` (or ``compiled``) to force one, or use
:func:`use_lane` in tests and benchmarks.
"""

import contextlib
import os

from . import pylane

try:
    from . import _stepcore as _compiled
except ImportError:
    _compiled = None

_env = os.environ.get("WRCOSIM_KERNELS", "").strip().lower()
if _env == "python":
    _active = pylane
elif _env == "compiled":
    if _compiled is None:
        raise ImportError("WRCOSIM_KERNELS=compiled but the extension is not built")
    _active = _compiled
else:
    _active = _compiled if _compiled is not None else pylane


def available():
    """Mapping of lane name to module for every importable lane."""
    lanes = {"python": pylane}
    if _compiled is not None:
        lanes["compiled"] = _compiled
    return lanes


def active():
    """The lane module currently used by the solvers."""
    return _active


def lane_name() -> str:
    return _active.NAME


def set_lane(name: str):
    """Switch the active lane; returns the previously active module."""
    global _active
    lanes = available()
    if name not in lanes:
        raise ValueError(f"kernel lane {name!r} not available (have {sorted(lanes)})")
    prev = _active
    _active = lanes[name]
    return prev


@contextlib.contextmanager
def use_lane(name: str):
    global _active
    prev = set_lane(name)
    try:
        yield _active
    finally:
        _active = prev
