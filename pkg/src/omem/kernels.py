"""Select the compiled kernels when available, else the NumPy fallback.

Set ``OMEM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
em_segment = _pykernels.em_segment
lyapunov_rk4 = _pykernels.lyapunov_rk4

if os.environ.get("OMEM_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        em_segment = _ckernels.em_segment
        lyapunov_rk4 = _ckernels.lyapunov_rk4

__all__ = ["BACKEND", "em_segment", "lyapunov_rk4"]
