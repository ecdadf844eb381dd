"""Kernel selection.

The compiled extension is used when it imports; ``FALLSIFT_PURE_PYTHON=1``
forces the fallback. ``use()`` switches at runtime (tests and benchmarks).
"""
import os

from fallsift import _pykernels

try:
    from fallsift import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_NAMES = ("directed_hd_1d", "directed_hd_2d", "rod_rk4")


def available():
    return ["python"] + (["cython"] if _compiled is not None else [])


def use(name):
    """Route the kernel entry points to ``"cython"`` or ``"python"``."""
    global BACKEND, directed_hd_1d, directed_hd_2d, rod_rk4
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        mod = _compiled
    elif name == "python":
        mod = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    directed_hd_1d = mod.directed_hd_1d
    directed_hd_2d = mod.directed_hd_2d
    rod_rk4 = mod.rod_rk4
    BACKEND = name


def kernels(name):
    """Return the kernel module for ``name`` without switching globally."""
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    return _pykernels


BACKEND = "python"
directed_hd_1d = directed_hd_2d = rod_rk4 = None
use("python" if _compiled is None or os.environ.get("FALLSIFT_PURE_PYTHON") else "cython")
