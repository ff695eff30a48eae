"""Kernel dispatch.

Set ``QET_DISABLE_NUMBA=1`` to run the pure-numpy path; numba is used
otherwise whenever it imports.
"""
import importlib
import os

from . import _numpy

NUMBA_DISABLED = os.environ.get("QET_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

_numba = None
if not NUMBA_DISABLED:
    try:
        _numba = importlib.import_module(__name__ + "._numba")
    except ImportError:  # pragma: no cover - numba missing
        pass

BACKEND = "numba" if _numba is not None else "numpy"
_impl = _numba if _numba is not None else _numpy

qr_batch = _impl.qr_batch
hermitian_eig = _impl.hermitian_eig
gk_log_integral = _impl.gk_log_integral
time_average_sum = _impl.time_average_sum

__all__ = ["BACKEND", "qr_batch", "hermitian_eig", "gk_log_integral", "time_average_sum"]
