"""Pick the compiled kernels when available, else the numpy fallback.

Set ``HJHALF_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("HJHALF_PURE", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "python" if _impl is _fallback else "cython"

pl_eval = _impl.pl_eval
rk4_march = _impl.rk4_march
hj_advance = _impl.hj_advance
psi_envelope = _impl.psi_envelope


def available():
    """Names of the importable backends."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    return names


def get(name):
    """Module implementing the kernels for backend ``name``."""
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
