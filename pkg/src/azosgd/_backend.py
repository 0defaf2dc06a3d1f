"""Select the kernel implementation at import time.

The compiled ``_kernels`` module is preferred. Setting ``AZOSGD_BACKEND=python``
forces the numpy fallback, which is also used when the extension was not built.
"""
import os

from . import _fallback

NOISE_CODES = {
    "zero": _fallback.NOISE_ZERO,
    "constant_sign": _fallback.NOISE_CONSTANT,
    "coordinate_oscillation": _fallback.NOISE_OSCILLATION,
    "machine_epsilon": _fallback.NOISE_MACHINE,
}

kernels = _fallback
name = "python"

if os.environ.get("AZOSGD_BACKEND", "").lower() not in ("python", "fallback"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _kernels
        name = "cython"


def available():
    """All importable backends keyed by name (for tests and benchmarks)."""
    found = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        return found
    found["cython"] = _kernels
    return found
