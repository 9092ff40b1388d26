"""Kernel backend selection.

The compiled extension is used when it imports; set ``GENUNIF_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("GENUNIF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend

BACKEND = _active.BACKEND
build_alias = _active.build_alias
alias_lookup = _active.alias_lookup
scan_first_collision = _active.scan_first_collision
falling_factorial_sum = _active.falling_factorial_sum
segment_falling_factorials = _active.segment_falling_factorials

__all__ = [
    "BACKEND",
    "alias_lookup",
    "build_alias",
    "compiled_backend",
    "falling_factorial_sum",
    "python_backend",
    "scan_first_collision",
    "segment_falling_factorials",
]
