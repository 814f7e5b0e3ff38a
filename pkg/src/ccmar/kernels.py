"""Backend selection for the inner loops.

The compiled extension is used when it imports; setting the environment
variable ``CCMAR_PURE_PYTHON=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("CCMAR_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

martingale_gap_max = _impl.martingale_gap_max
marked_partial_sum_max = _impl.marked_partial_sum_max
sup_abs_walk = _impl.sup_abs_walk

__all__ = ["BACKEND", "martingale_gap_max", "marked_partial_sum_max", "sup_abs_walk"]
