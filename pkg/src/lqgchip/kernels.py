"""Kernel selection.

The compiled extension is used when importable; set ``LQGCHIP_PURE_PYTHON=1``
to force the fallback (the benchmark and the cross-check tests do this
explicitly through :data:`pure`).
"""

import os

import numpy as np

from . import _kernels_py as pure

try:
    if os.environ.get("LQGCHIP_PURE_PYTHON"):
        raise ImportError("pure Python kernels requested")
    from . import _kernels as compiled
except ImportError:
    compiled = None

BACKEND = "cython" if compiled is not None else "python"
_impl = compiled if compiled is not None else pure


def permanent_ryser(a):
    return _impl.permanent_ryser(np.ascontiguousarray(a, dtype=np.complex128))


def sandwich_amplitudes(m, kets, bras):
    return _impl.sandwich_amplitudes(
        np.ascontiguousarray(m, dtype=np.complex128),
        np.ascontiguousarray(kets, dtype=np.complex128),
        np.ascontiguousarray(bras, dtype=np.complex128),
    )
