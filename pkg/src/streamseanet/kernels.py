"""Kernel backend selection.

The compiled Cython kernels are used when the extension is importable;
otherwise the numpy fallback is selected. Setting the environment variable
``STREAMSEANET_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _kernels as _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("cython", "python")

_active: ModuleType = _pykernels
BACKEND = "python"


def available_backends() -> tuple[str, ...]:
    return BACKENDS if _ckernels is not None else ("python",)


def use_backend(name: str) -> None:
    """Switch the process-wide kernel backend."""
    global _active, BACKEND
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not available; build the extension first")
        _active = _ckernels
    elif name == "python":
        _active = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    BACKEND = name


def conv1d(xp, w, wt, b, stride, dilation, groups, n_out):
    """Strided, dilated, grouped convolution over a left-padded input.

    ``xp`` holds ``H = (kernel_size - 1) * dilation`` history columns followed
    by the current samples; output step ``j`` sums
    ``w[o, c, k] * xp[c, H + j*stride - k*dilation]``. ``wt`` is ``w``
    transposed to ``[in/groups, kernel, out]``.
    """
    return _active.conv1d(xp, w, wt, b, stride, dilation, groups, n_out)


def conv_transpose1d(x, wt, b, carry, stride):
    """Transposed conv with kernel ``2 * stride`` given as ``wt[in, k, out]``; returns ``(out, carry)``."""
    return _active.conv_transpose1d(x, wt, b, carry, stride)


if _ckernels is not None and os.environ.get("STREAMSEANET_PURE_PYTHON", "") in ("", "0"):
    use_backend("cython")
