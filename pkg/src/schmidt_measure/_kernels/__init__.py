"""ALS kernel backends.

Two interchangeable implementations of the sweep loop live here: a plain
numpy one (``als_py``) and a compiled Cython one (``als_cy``).  Import
picks the compiled kernel when it is available; setting the environment
variable ``SCHMIDT_MEASURE_KERNEL`` to ``python`` or ``cython`` forces a
choice, and ``auto`` (the default) keeps the automatic behaviour.
"""

import os

from ..errors import InputError
from . import als_py
from .als_py import (STATUS_CONVERGED, STATUS_DIVERGED, STATUS_MAX_ITERS,
                     STATUS_STALLED)

try:
    from . import als_cy
except ImportError:
    als_cy = None

_choice = os.environ.get("SCHMIDT_MEASURE_KERNEL", "auto").strip().lower()
if _choice == "python":
    _active = als_py
elif _choice == "cython":
    if als_cy is None:
        raise ImportError(
            "SCHMIDT_MEASURE_KERNEL=cython, but the compiled kernel did not "
            "build; reinstall or switch to the python backend")
    _active = als_cy
elif _choice == "auto":
    _active = als_cy if als_cy is not None else als_py
else:
    raise InputError(
        f"SCHMIDT_MEASURE_KERNEL must be auto, python or cython, "
        f"not {_choice!r}")


def backend_name() -> str:
    """Which kernel actually runs: ``"cython"`` or ``"python"``."""
    return "cython" if _active is als_cy else "python"


def available_backends():
    return ("python", "cython") if als_cy is not None else ("python",)


def als_sweeps(tensor, factors, max_iters, eps_fit, norm_cap,
               stall_rtol, stall_window):
    return _active.als_sweeps(tensor, factors, max_iters, eps_fit,
                              norm_cap, stall_rtol, stall_window)
