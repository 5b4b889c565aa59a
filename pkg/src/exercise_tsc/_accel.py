"""Backend switch for the compiled kernels.

Set ``EXERCISE_TSC_BACKEND=numpy`` to force the pure-numpy code paths; the
default is ``numba`` when it imports, otherwise ``numpy``.
"""

import os
import warnings

ENV_FLAG = "EXERCISE_TSC_BACKEND"

try:
    import numba

    HAS_NUMBA = True
    # an old system TBB only means numba falls back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer requires")
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def backend() -> str:
    """Backend currently selected by the environment (read on every call)."""
    choice = os.environ.get(ENV_FLAG, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice not in ("", "numba"):
        raise ValueError(f"{ENV_FLAG} must be 'numba' or 'numpy', got {choice!r}")
    return "numba" if HAS_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op decorator without numba."""
    kwargs.setdefault("cache", True)
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


if HAS_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range
