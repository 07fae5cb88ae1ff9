"""Scalar special functions shared by the chain kernels.

These are the numerically delicate pieces: the standard-normal log CDF
far into the left tail, its inverse (AS 241), the inverse of log Phi
(needed so truncated-normal draws can be made from a single uniform in
log space), and a stable log-sigmoid.  Each is written as a scalar
function decorated with :func:`chainpool._backend.maybe_jit` so the same
source serves both backends; vectorized fallback paths use the scipy
equivalents (`scipy.special.log_ndtr`, `scipy.special.ndtri_exp`), which
these scalars match to ~1e-13.
"""

import math

import numpy as np
from scipy import special as _sp

from ._backend import maybe_jit

LOG_2PI = math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


@maybe_jit
def log_ndtr_s(z):
    """log Phi(z), accurate over the whole real line.

    erfc carries the value down to z = -33 exactly; below that a 4-term
    asymptotic expansion of the Mills ratio takes over (relative error
    ~1e-13 at the crossover, shrinking further out).
    """
    if z >= 0.0:
        return math.log1p(-0.5 * math.erfc(z / _SQRT2))
    if z >= -33.0:
        return math.log(0.5 * math.erfc(-z / _SQRT2))
    y = -z
    y2 = y * y
    corr = math.log1p(-1.0 / y2 + 3.0 / (y2 * y2)
                      - 15.0 / (y2 * y2 * y2) + 105.0 / (y2 * y2 * y2 * y2))
    return -0.5 * y2 - math.log(y) - 0.5 * LOG_2PI + corr


@maybe_jit
def ndtri_s(p):
    """Phi^{-1}(p) by the AS 241 rational approximations (PPND16)."""
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@maybe_jit
def _hazard_tail(y):
    # phi(y)/Phi(-y) for large y, from the same Mills-ratio expansion.
    y2 = y * y
    return y / (1.0 - 1.0 / y2 + 3.0 / (y2 * y2) - 15.0 / (y2 * y2 * y2))


@maybe_jit
def ndtri_exp_s(w):
    """Inverse of log Phi: returns z with log Phi(z) = w, for w <= 0.

    exp(w) stays normal down to w ~ -690, where AS 241 is still sharp;
    beyond that the quantile is found by Newton on the asymptotic tail
    (three steps from a fixed-point warm start reach double precision).
    """
    if w >= 0.0:
        return np.inf if w == 0.0 else np.nan
    if w >= -690.0:
        return ndtri_s(math.exp(w))
    y = math.sqrt(-2.0 * w)
    for _ in range(2):
        y = math.sqrt(-2.0 * (w + math.log(y) + 0.5 * LOG_2PI))
    for _ in range(3):
        y = y + (log_ndtr_s(-y) - w) / _hazard_tail(y)
    return -y


@maybe_jit
def trunc_std_norm_s(a, u):
    """Draw from N(0,1) conditioned on Z >= a, using one uniform u in [0,1).

    Inverse-CDF in the complementary/log parametrization, so a single
    uniform suffices for any truncation point (a = +-40 included).
    """
    return -ndtri_exp_s(math.log1p(-u) + log_ndtr_s(-a))


@maybe_jit
def log_sigmoid_s(x):
    """log(1/(1+exp(-x))) without overflow on either side."""
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def trunc_std_norm_np(a, u):
    """Vectorized counterpart of :func:`trunc_std_norm_s` (scipy path)."""
    a = np.asarray(a, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return -_sp.ndtri_exp(np.log1p(-u) + _sp.log_ndtr(-a))


def logsumexp_rows(x):
    """logsumexp along the last axis; thin wrapper kept for import locality."""
    return _sp.logsumexp(x, axis=-1)
