"""Kernel dispatch: the compiled extension when built, numpy/Python otherwise.

Set ``OVERBOOK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("OVERBOOK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

tile_counts = _impl.tile_counts
window_counts = _impl.window_counts
scan_replay = _impl.scan_replay
