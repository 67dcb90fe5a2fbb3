"""Select the compiled kernels when available.

Set ``MACROAUC_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("MACROAUC_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_kernels(name=None):
    """Kernel module by name (``"cython"`` or ``"python"``); ``None`` gives the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
