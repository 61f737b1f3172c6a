"""Backend selection for the numerical kernels.

The compiled extension is used when importable; setting the environment
variable ``WEYL_LAB_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("WEYL_LAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

hermite_table = _impl.hermite_table
laguerre_table = _impl.laguerre_table
assemble_graded = _impl.assemble_graded

__all__ = ["BACKEND", "hermite_table", "laguerre_table", "assemble_graded"]
