"""Kernel backend selection.

The compiled module is used when it imports; setting ``TILTGAP_PURE_PYTHON=1``
forces the numpy fallback.
"""

import os

from . import _pykernels

python_kernels = _pykernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("TILTGAP_PURE_PYTHON", "") in ("", "0"):
    kernels = compiled_kernels
    NAME = "cython"
else:
    kernels = _pykernels
    NAME = "python"
