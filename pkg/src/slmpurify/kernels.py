"""Kernel backend selection.

The compiled extension is used when it was built; set
``SLMPURIFY_PURE_PYTHON=1`` to force the NumPy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
weighted_phase_sum = _kernels_py.weighted_phase_sum
poisson_nll_grad = _kernels_py.poisson_nll_grad

if os.environ.get("SLMPURIFY_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        _ckernels = None
    else:
        BACKEND = "cython"
        weighted_phase_sum = _ckernels.weighted_phase_sum
        poisson_nll_grad = _ckernels.poisson_nll_grad


def available_backends():
    backends = {"python": _kernels_py}
    try:
        from . import _ckernels as ck
    except ImportError:
        pass
    else:
        backends["cython"] = ck
    return backends
