"""Chooses the rejection kernel: compiled MPFR core if importable, else pure Python.

Set BINOMTV_PURE=1 to force the pure-Python kernel.
"""
import os

from . import _kernel_py

COMPILED = False
if os.environ.get("BINOMTV_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel as _compiled  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        _compiled = None
else:
    _compiled = None

PureKernel = _kernel_py.RejectionKernel
RejectionKernel = _compiled.RejectionKernel if COMPILED else PureKernel
BACKEND = "mpfr" if COMPILED else "python"


def compiled_kernel_class():
    """The compiled kernel class, or None when it is unavailable."""
    try:
        from . import _kernel  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernel.RejectionKernel
