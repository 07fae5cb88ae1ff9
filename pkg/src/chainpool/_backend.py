"""Backend selection: numba-jitted kernels or pure numpy.

The hot loops (chain kernels, clustering, truncated-normal draws) are
compiled with numba when it imports cleanly.  Setting the environment
variable ``CHAINPOOL_NO_NUMBA=1`` before import forces the pure-numpy
fallback implementations.  Both backends consume identical random
streams, so results agree closely (though not bitwise: libm and SIMD
rounding differ at the ulp level between the two).
"""

import os


def _env_disabled():
    val = os.environ.get("CHAINPOOL_NO_NUMBA", "").strip().lower()
    return val in ("1", "true", "yes", "on")


numba = None
if not _env_disabled():
    try:
        import numba  # noqa: F401
    except ImportError:
        numba = None

NUMBA_ENABLED = numba is not None


def maybe_jit(func=None, **options):
    """Decorator: ``numba.njit`` on the jit backend, identity otherwise.

    Defaults to ``nogil=True, cache=True``; kernels that take other
    jitted functions as arguments should pass ``cache=False``.
    """

    def wrap(f):
        if not NUMBA_ENABLED:
            return f
        opts = {"nogil": True, "cache": True}
        opts.update(options)
        return numba.njit(**opts)(f)

    if func is not None:
        return wrap(func)
    return wrap


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
