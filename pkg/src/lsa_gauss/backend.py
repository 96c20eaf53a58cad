"""Kernel backend selection.

The batched path recursions are the only hot loops in the package. They exist
in two interchangeable implementations:

* ``_kernels_numba`` -- ``@njit`` kernels, compiled on first use;
* ``_kernels_numpy`` -- pure-numpy kernels vectorized over the batch axis.

The environment variable ``LSA_GAUSS_BACKEND`` picks one of ``auto`` (default,
numba when importable), ``numba`` or ``numpy``. Both backends consume the same
pre-drawn random arrays, so results agree to floating-point roundoff and the
choice never affects random-stream consumption.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

ENV_FLAG = "LSA_GAUSS_BACKEND"
_CHOICES = ("auto", "numba", "numpy")

try:
    from . import _kernels_numba

    _HAVE_NUMBA = True
except ImportError:
    _kernels_numba = None
    _HAVE_NUMBA = False


def requested_backend() -> str:
    value = os.environ.get(ENV_FLAG, "auto").strip().lower()
    if value not in _CHOICES:
        raise ValueError(
            f"{ENV_FLAG}={value!r} is not one of {', '.join(_CHOICES)}"
        )
    return value


def active_backend() -> str:
    """Resolved backend name, honouring the env flag and numba availability."""
    value = requested_backend()
    if value == "auto":
        return "numba" if _HAVE_NUMBA else "numpy"
    if value == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("LSA_GAUSS_BACKEND=numba but numba is not installed")
    return value


def get_kernels():
    """Kernel namespace for the active backend."""
    if active_backend() == "numba":
        return _kernels_numba
    return _kernels_numpy
