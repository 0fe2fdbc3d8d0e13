"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
exact and result-identical, just slower. ``ROTHLAB_KERNELS`` overrides the
choice: ``c`` forces the extension (ImportError if missing), ``py`` forces
the fallback, anything else (or unset) means auto.
"""

from __future__ import annotations

import os

from . import _pykernels

_mode = os.environ.get("ROTHLAB_KERNELS", "auto").lower()

if _mode == "py":
    _impl = _pykernels
    BACKEND = "numpy"
elif _mode == "c":
    from . import _ckernels as _impl  # noqa: F401

    BACKEND = "cython"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "numpy"

pattern_count = _impl.pattern_count
trilinear_sum = _impl.trilinear_sum
pair_progression_count = _impl.pair_progression_count

__all__ = ["BACKEND", "pattern_count", "trilinear_sum", "pair_progression_count"]
