"""Select the kernel implementation at import time.

The compiled extension is used when importable; set ``FIXPOINT_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

if os.environ.get("FIXPOINT_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as kernels

        BACKEND = "python"

__all__ = ["BACKEND", "kernels"]
