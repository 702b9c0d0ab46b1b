"""Kernel lane selection.

The compiled extension ``revaf._core`` is used when it imported cleanly;
otherwise (or when REVAF_PURE=1 is set) the pure-Python twin takes over.
Both lanes are bit-identical by construction, see ``_kernels_ref``.
"""

import os

from . import _kernels_ref

if os.environ.get("REVAF_PURE"):
    _impl = _kernels_ref
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _kernels_ref

IMPL_NAME = _impl.IMPL_NAME

sample_chain = _impl.sample_chain
occ = _impl.occ
jumpsum = _impl.jumpsum
occ_grid = _impl.occ_grid
jump_grid = _impl.jump_grid
lambda_eval = _impl.lambda_eval
lambda_grid = _impl.lambda_grid
