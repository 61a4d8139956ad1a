"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy twins in ``_pykernels`` are used. ``KDEKNN_PURE_PYTHON=1`` forces the
fallback.
"""

import os

from kdeknn import _pykernels

kernels = _pykernels
BACKEND = "python"

if not os.environ.get("KDEKNN_PURE_PYTHON"):
    try:
        from kdeknn import _kernels as kernels  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    found = {"python": _pykernels}
    try:
        from kdeknn import _kernels
        found["cython"] = _kernels
    except ImportError:
        pass
    return found
