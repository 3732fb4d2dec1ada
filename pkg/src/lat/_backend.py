"""Selects the compiled merge kernels when available.

Set ``LAT_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

kernels = _pykernels
NAME = "python"

if os.environ.get("LAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable, using pure Python")
    else:
        kernels = _ckernels
        NAME = "cython"


def get(name=None):
    """Return a kernel module by name ("cython", "python") or the default."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
