"""Backend selection for the hot kernels.

HEATLAB_BACKEND=numpy forces the pure-numpy path, =numba requires the JIT
path, anything else (or unset) tries numba and falls back silently.
HEATLAB_NO_NUMBA=1 is an alias for the numpy choice.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_cached = None


def backend_name() -> str:
    if os.environ.get("HEATLAB_NO_NUMBA"):
        return "numpy"
    want = os.environ.get("HEATLAB_BACKEND", "auto").lower()
    if want in ("numpy", "numba"):
        return want
    return "auto"


def kernels():
    """Module providing fill_bridge / path_weights / cn_propagate."""
    global _cached
    name = backend_name()
    if _cached is not None and _cached[0] == name:
        return _cached[1]
    if name == "numpy":
        mod = _kernels_numpy
    else:
        try:
            from . import _kernels_numba as mod
        except ImportError:
            if name == "numba":
                raise
            mod = _kernels_numpy
    _cached = (name, mod)
    return mod


def active_backend() -> str:
    mod = kernels()
    return "numpy" if mod is _kernels_numpy else "numba"
