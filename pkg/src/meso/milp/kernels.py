"""Select the compiled simplex kernels when available, else the numpy ones.

Set ``MESO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernel_py

BACKEND = "python"
pivot, price, ratio_test = _kernel_py.pivot, _kernel_py.price, _kernel_py.ratio_test

if os.environ.get("MESO_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernel
    except ImportError:  # extension not built
        pass
    else:
        pivot, price, ratio_test = _kernel.pivot, _kernel.price, _kernel.ratio_test
        BACKEND = "cython"

AT_LOWER = _kernel_py.AT_LOWER
AT_UPPER = _kernel_py.AT_UPPER
BASIC = _kernel_py.BASIC
