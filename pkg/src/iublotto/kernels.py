"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``IUBLOTTO_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy fallback is used. ``BACKEND`` names the active choice.
"""

from __future__ import annotations

import os

from . import _fallback

fallback = _fallback

if os.environ.get("IUBLOTTO_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else _fallback
BACKEND = "compiled" if compiled is not None else "python"

maxplus_dp = _impl.maxplus_dp
csf_expectation = _impl.csf_expectation
