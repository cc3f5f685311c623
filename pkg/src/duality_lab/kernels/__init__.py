"""Hot kernels with a compiled implementation and a NumPy fallback.

The compiled extension is used when it imports; setting the environment
variable ``DUALITY_LAB_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names
the implementation in use.
"""

import os

from . import _phase_py

if os.environ.get("DUALITY_LAB_PURE_PYTHON", "") not in ("", "0"):
    phase_ascent = _phase_py.phase_ascent
    BACKEND = "python"
else:
    try:
        from ._phase_cy import phase_ascent
        BACKEND = "cython"
    except ImportError:
        phase_ascent = _phase_py.phase_ascent
        BACKEND = "python"

__all__ = ["phase_ascent", "BACKEND"]
