"""Select the kernel backend at import time.

The compiled extension is used when it imports; otherwise the numpy
fallback takes over. Set ``SKYLINK_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

FLAT, CONFORMAL, SPHERE = _fallback.FLAT, _fallback.CONFORMAL, _fallback.SPHERE

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("SKYLINK_PURE_PYTHON"):
    kernels = _compiled
else:
    kernels = _fallback

BACKEND = kernels.NAME


def available():
    """Names of the backends importable in this environment."""
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get(name):
    """Return a backend module by name (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled skylink kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
