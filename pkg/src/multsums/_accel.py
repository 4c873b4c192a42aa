"""Backend selection for the numeric kernels.

Set ``MULTSUMS_PURE_NUMPY=1`` to bypass numba and run the vectorized numpy
fallbacks instead. The flag is read once, at import time.
"""

import os
import warnings

PURE_NUMPY = os.environ.get("MULTSUMS_PURE_NUMPY", "0").strip().lower() in ("1", "true", "yes")

try:
    if PURE_NUMPY:
        raise ImportError("numba disabled by MULTSUMS_PURE_NUMPY")
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, cache=True, nogil=True, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def set_threads(n: int) -> None:
    if HAVE_NUMBA:
        # the kernels are serial; this only caps numba's pool, so its
        # threading-layer diagnostics are noise here
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
