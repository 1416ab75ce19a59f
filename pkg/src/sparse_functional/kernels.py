"""Backend selection for the hot kernels.

The compiled extension is used when it imports cleanly; setting
``SPARSE_FUNCTIONAL_PURE=1`` forces the NumPy fallback.  The coherence scan
always uses NumPy because the BLAS Gram product beats the compiled loop.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("SPARSE_FUNCTIONAL_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

soft_threshold = _impl.soft_threshold
thresholded_iteration = _impl.thresholded_iteration
coherence_scan = _pykernels.coherence_scan
taylor_eval_r0 = _impl.taylor_eval_r0


def backends():
    """Return the available kernel modules keyed by name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
