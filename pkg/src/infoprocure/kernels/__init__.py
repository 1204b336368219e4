"""Monte Carlo kernel backends.

The compiled Cython kernel is preferred; a NumPy implementation of the
identical counter-addressed computation is the fallback.  Selection
happens once at import.  Set INFOPROCURE_BACKEND=python to force the
fallback (e.g. for the backend benchmark) or INFOPROCURE_BACKEND=c to
fail loudly when the extension is missing.
"""

from __future__ import annotations

import os

from . import _fallback

RULE_ORACLE = _fallback.RULE_ORACLE
RULE_SAMPLE_VARIANCE = _fallback.RULE_SAMPLE_VARIANCE
RULE_LCB = _fallback.RULE_LCB

_requested = os.environ.get("INFOPROCURE_BACKEND", "").strip().lower()
if _requested not in ("", "c", "python"):
    raise ImportError(
        f"INFOPROCURE_BACKEND must be 'c' or 'python', got {_requested!r}"
    )

if _requested == "python":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _mc as _impl  # type: ignore[no-redef]

        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise
        _impl = _fallback
        BACKEND = "python"

mc_utilities = _impl.mc_utilities
mc_failure_count = _impl.mc_failure_count

__all__ = [
    "BACKEND",
    "RULE_LCB",
    "RULE_ORACLE",
    "RULE_SAMPLE_VARIANCE",
    "mc_failure_count",
    "mc_utilities",
]
