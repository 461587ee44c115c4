"""Select the segment kernel at import time.

The compiled extension is used when it was built; otherwise the pure-Python
kernel is used. ``CYCLICAL_MCMC_BACKEND=python`` forces the fallback.
"""
import os

from . import _core_py

_requested = os.environ.get("CYCLICAL_MCMC_BACKEND", "auto").lower()

if _requested == "python":
    core = _core_py
else:
    try:
        from . import _core as core
    except ImportError:
        if _requested == "cython":
            raise
        core = _core_py

BACKEND = core.BACKEND
run_segment = core.run_segment
