"""Numeric kernel backend selection.

The compiled extension is preferred when it imports; the pure-NumPy
twin is the fallback.  ``IDEPCAG_BACKEND=python`` forces the fallback
(used by the benchmark and for debugging); ``IDEPCAG_BACKEND=compiled``
fails loudly if the extension is missing.
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("IDEPCAG_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _kernels_py
        BACKEND = "python"

propagate_matrix_ode = _impl.propagate_matrix_ode
picard_iterate = _impl.picard_iterate


def backend_name() -> str:
    """Which kernel implementation was selected at import time."""
    return BACKEND
