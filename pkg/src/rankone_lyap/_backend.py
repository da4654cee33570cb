"""Pick the compiled kernels when available, else the numpy fallback.

Set ``RANKONE_LYAP_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("RANKONE_LYAP_BACKEND", "").lower() == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _pykernels
        BACKEND = "python"
    else:
        BACKEND = "compiled"

__all__ = ["BACKEND", "kernels"]
