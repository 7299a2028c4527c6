"""Backend selection for the hot per-iteration kernels.

The compiled Cython module is used when it was built and importable; otherwise
the numpy fallback is used.  Setting ``DHPR_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("DHPR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

soft_threshold = _impl.soft_threshold
group_shrink = _impl.group_shrink
logistic_prox = _impl.logistic_prox
neighbor_mix = _impl.neighbor_mix

__all__ = [
    "BACKEND",
    "soft_threshold",
    "group_shrink",
    "logistic_prox",
    "neighbor_mix",
]
