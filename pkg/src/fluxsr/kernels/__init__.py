"""Hot kernels for the block Lindblad integrator.

The compiled extension is used when it imports; otherwise the numpy
fallback is selected.  Setting ``FLUXSR_BACKEND=python`` forces the
fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("FLUXSR_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        pass


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for the default)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


block_rhs = _impl.block_rhs
block_jpjm = _impl.block_jpjm
