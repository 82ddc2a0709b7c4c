"""Kernel backend selection.

The compiled extension is used when it imports; set ``WIENER_IMDD_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("WIENER_IMDD_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"

gram_terms = _impl.gram_terms
sliding_estimate = _impl.sliding_estimate
accumulate_moments = _impl.accumulate_moments

__all__ = ["BACKEND", "gram_terms", "sliding_estimate", "accumulate_moments"]
