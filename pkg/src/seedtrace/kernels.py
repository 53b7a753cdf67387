"""Hot-loop kernels with backend selection at import time.

The compiled extension ``seedtrace._ckernels`` is used when it was built;
otherwise the pure-Python module ``seedtrace._pykernels`` is used. Setting
``SEEDTRACE_PURE_PYTHON=1`` forces the fallback. Both backends return
bit-identical results.
"""

import os

from seedtrace import _pykernels

if os.environ.get("SEEDTRACE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from seedtrace import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

subtree_sizes = _impl.subtree_sizes
g_total = _impl.g_total
g_totals = _impl.g_totals
diameter = _impl.diameter
f_tau_float = _impl.f_tau_float

# exact integer counting is always done in Python (arbitrary precision)
f_tau_count = _pykernels.f_tau_count
falling = _pykernels.falling


def available_backends():
    """Map backend name to kernel module for every backend that imports."""
    out = {"python": _pykernels}
    try:
        from seedtrace import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
