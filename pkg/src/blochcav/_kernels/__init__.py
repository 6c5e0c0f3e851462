"""Hot-kernel backend: compiled extension when available, NumPy otherwise.

Set BLOCHCAV_PURE_PYTHON=1 to force the NumPy fallback (used by the
backend-equivalence tests and the benchmark).
"""

import os

from . import _pure

if os.environ.get("BLOCHCAV_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND_NAME
potential_entries = _impl.potential_entries
ewald_sums = _impl.ewald_sums

__all__ = ["BACKEND", "potential_entries", "ewald_sums", "_pure"]
