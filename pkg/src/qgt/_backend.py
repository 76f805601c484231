"""Kernel backend selection.

The compiled extension is preferred; ``QGT_BACKEND=python`` forces the
pure-Python twins (also used automatically when the extension is missing).
"""
import os

from qgt import _pyfallback

_forced = os.environ.get("QGT_BACKEND", "").lower()

if _forced == "python":
    kernels = _pyfallback
else:
    try:
        from qgt import _core as kernels
    except ImportError:
        if _forced == "cython":
            raise
        kernels = _pyfallback

BACKEND = "python" if kernels is _pyfallback else "cython"


def available():
    """Backends importable in this environment, compiled first."""
    out = {}
    try:
        from qgt import _core
        out["cython"] = _core
    except ImportError:
        pass
    out["python"] = _pyfallback
    return out
