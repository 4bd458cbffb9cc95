"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``CCTEXT_PURE_PYTHON=1``
to force the pure-Python fallback.
"""
import os

from . import _purepy

BACKEND = "python"
label_bfs = _purepy.label_bfs
smo_solve = _purepy.smo_solve

if not os.environ.get("CCTEXT_PURE_PYTHON"):
    try:
        from . import _speedups
    except ImportError:
        _speedups = None
    else:
        BACKEND = "cython"
        label_bfs = _speedups.label_bfs
        smo_solve = _speedups.smo_solve
