"""Backend selection for the hot kernels.

Set ``GAVECERT_BACKEND=numpy`` to force the batched pure-numpy kernels even
when numba is importable. Any other value (or unset) uses numba when present.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

REQUESTED = os.environ.get("GAVECERT_BACKEND", "numba").strip().lower()
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and REQUESTED != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
