"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the
pure-Python twins take over. Set ``RINGID_PURE_PYTHON=1`` to force the
fallback (used by the kernel benchmark and the backend-equivalence tests).
"""

import os

if os.environ.get("RINGID_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _pykernels as _impl
        BACKEND = "python"

xoshiro_fill_u64 = _impl.xoshiro_fill_u64
xoshiro_fill_normal = _impl.xoshiro_fill_normal
affine_bilinear = _impl.affine_bilinear
l1_rows = _impl.l1_rows

__all__ = ["BACKEND", "xoshiro_fill_u64", "xoshiro_fill_normal", "affine_bilinear", "l1_rows"]
