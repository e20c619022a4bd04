"""Kernel backend selection.

The compiled Cython core is used when it was built; otherwise the numpy
fallback is loaded. Setting ``DNLS_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("DNLS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
    except ImportError:
        _impl = _pykernels
    else:
        BACKEND = "cython"

power_nonlinearity = _impl.power_nonlinearity
if_stage = _impl.if_stage
ifrk4_update = _impl.ifrk4_update
inverse_k_energy = _impl.inverse_k_energy


def compiled_available():
    """Whether the Cython extension can be imported at all."""
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
