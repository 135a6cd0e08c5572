"""Special functions and random variate generators shared by the samplers.

Everything here works on numpy arrays as well as scalars.  Random draws
always go through an explicit :class:`numpy.random.Generator`; nothing in
the package touches the global numpy random state.
"""

import math

import numpy as np
from scipy import special

LOG_2PI = math.log(2.0 * math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# Truncation points further than this many sd from the mean use the
# exponential-proposal rejection sampler instead of inverse-CDF.
TAIL_THRESHOLD = 4.0


# ---------------------------------------------------------------------------
# random streams

def make_rng(seed=None):
    """Return a counter-based generator (Philox) seeded from ``seed``.

    ``seed`` may be an int, a :class:`numpy.random.SeedSequence` or an
    existing generator, which is returned unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed, count):
    """Independent child streams derived from one master seed."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return [make_rng(child) for child in ss.spawn(count)]


# ---------------------------------------------------------------------------
# normal distribution

def phi(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x - 0.5 * LOG_2PI)
    return out[()] if out.ndim == 0 else out


def log_phi(x):
    x = np.asarray(x, dtype=float)
    out = -0.5 * x * x - 0.5 * LOG_2PI
    return out[()] if out.ndim == 0 else out


def Phi(x):
    """Standard normal CDF."""
    return special.ndtr(x)


def log_Phi(x):
    """log of the standard normal CDF, accurate far into the lower tail."""
    return special.log_ndtr(x)


def Phi_inv(p):
    """Standard normal quantile function."""
    return special.ndtri(p)


def mills_ratio(t):
    """``phi(t) / Phi(t)`` via the scaled complementary error function.

    ``Phi(t) = erfcx(-t / sqrt 2) * exp(-t^2 / 2) / 2`` so the Gaussian
    factor cancels exactly; stays accurate for very negative ``t`` where
    both factors underflow.
    """
    t = np.asarray(t, dtype=float)
    out = SQRT_2_OVER_PI / special.erfcx(-t / math.sqrt(2.0))
    return out[()] if out.ndim == 0 else out


def truncnorm_mean(mean, positive):
    """Mean of a unit-variance normal truncated at zero.

    Parameters
    ----------
    mean : float or ndarray
        Location of the untruncated normal.
    positive : bool or ndarray of bool
        ``True`` keeps the positive half line ``(0, inf)``, ``False`` keeps
        ``(-inf, 0]``.

    Returns
    -------
    float or ndarray
    """
    mean = np.asarray(mean, dtype=float)
    sign = np.where(positive, 1.0, -1.0)
    out = mean + sign * mills_ratio(sign * mean)
    return out[()] if out.ndim == 0 else out


def truncnorm_moments(mean, positive):
    """Mean, variance and entropy of a unit-variance normal truncated at 0.

    Uses the signed location ``t = +mean`` (positive side) or ``-mean``
    (negative side) and the inverse Mills ratio ``lam = phi(t)/Phi(t)``:
    variance ``1 - t*lam - lam**2`` and entropy
    ``log(2*pi*e)/2 + log Phi(t) - t*lam/2``.
    """
    mean = np.asarray(mean, dtype=float)
    sign = np.where(positive, 1.0, -1.0)
    t = sign * mean
    lam = mills_ratio(t)
    m = mean + sign * lam
    var = 1.0 - t * lam - lam * lam
    # deep lower tail: var ~ 1/t**2, guard the cancellation
    var = np.maximum(var, 1e-300)
    ent = 0.5 * (LOG_2PI + 1.0) + log_Phi(t) - 0.5 * t * lam
    return m, var, ent


# ---------------------------------------------------------------------------
# truncated normal sampling

def _tail_exponential(a, b, rng):
    """Standard normal restricted to ``[a, b]`` with ``a`` large and positive.

    Exponential proposal with the optimal rate ``(a + sqrt(a^2 + 4)) / 2``;
    proposals above ``b`` are rejected.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(a.shape)
    todo = np.arange(a.size)
    a_flat, b_flat, out_flat = a.ravel(), b.ravel(), out.ravel()
    while todo.size:
        lo = a_flat[todo]
        rate = 0.5 * (lo + np.sqrt(lo * lo + 4.0))
        x = lo + rng.exponential(size=todo.size) / rate
        u = rng.random(todo.size)
        ok = (np.log(u) <= -0.5 * (x - rate) ** 2) & (x <= b_flat[todo])
        out_flat[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out_flat.reshape(a.shape)


def _std_truncnorm(a, b, rng):
    """Standard normal draws restricted to ``[a, b]`` (arrays, a < b)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)

    right = a > TAIL_THRESHOLD
    left = b < -TAIL_THRESHOLD
    bulk = ~(right | left)

    if right.any():
        out[right] = _tail_exponential(a[right], b[right], rng)
    if left.any():
        out[left] = -_tail_exponential(-b[left], -a[left], rng)
    if bulk.any():
        ab, bb = a[bulk], b[bulk]
        u = rng.random(ab.size)
        upper_half = ab > 0
        x = np.empty(ab.size)
        # lower bound above zero: work with upper-tail probabilities
        s = upper_half
        if s.any():
            pa, pb = special.ndtr(-ab[s]), special.ndtr(-bb[s])
            x[s] = -special.ndtri(pa - u[s] * (pa - pb))
        s = ~upper_half
        if s.any():
            pa, pb = special.ndtr(ab[s]), special.ndtr(bb[s])
            x[s] = special.ndtri(pa + u[s] * (pb - pa))
        out[bulk] = np.clip(x, ab, bb)
    return out


def sample_truncnorm(mean, sd, lower, upper, rng, size=None):
    """Draw from ``N(mean, sd^2)`` restricted to ``(lower, upper)``.

    Bounds may be infinite.  Inverse-CDF sampling is used unless the
    interval lies more than :data:`TAIL_THRESHOLD` sd from the mean, in
    which case an exponential rejection sampler keeps the draw exact.

    Raises
    ------
    ValueError
        If ``sd <= 0`` or ``lower >= upper`` anywhere.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(sd <= 0) or np.any(~np.isfinite(sd)):
        raise ValueError("sd must be positive and finite")
    if np.any(lower >= upper) or np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
        raise ValueError("truncation bounds must satisfy lower < upper")
    if size is not None:
        shape = (size,) if np.isscalar(size) else tuple(size)
        mean, sd, lower, upper = (np.broadcast_to(v, shape) for v in (mean, sd, lower, upper))
    else:
        mean, sd, lower, upper = np.broadcast_arrays(mean, sd, lower, upper)
    shape = mean.shape
    x = _std_truncnorm(((lower - mean) / sd).ravel(), ((upper - mean) / sd).ravel(), rng)
    out = (mean.ravel() + sd.ravel() * x).reshape(shape)
    return out[()] if out.ndim == 0 else out


def sample_probit_latent(eta, y, rng):
    """Latent utilities for probit augmentation, one per dyad.

    ``y == 1`` -> ``N(eta, 1)`` truncated to ``(0, inf)``; ``y == 0`` ->
    truncated to ``(-inf, 0]``; any other code (missing) -> untruncated.
    """
    eta = np.asarray(eta, dtype=float)
    z = np.empty_like(eta)
    one = y == 1
    zero = y == 0
    miss = ~(one | zero)
    if one.any():
        z[one] = eta[one] + _std_truncnorm(-eta[one], np.inf, rng)
    if zero.any():
        z[zero] = eta[zero] + _std_truncnorm(-np.inf, -eta[zero], rng)
    if miss.any():
        z[miss] = eta[miss] + rng.standard_normal(int(miss.sum()))
    return z


# ---------------------------------------------------------------------------
# gamma family

def sample_gamma(shape, rate, rng, size=None):
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0) or np.any(rate <= 0):
        raise ValueError("gamma parameters must be positive")
    return rng.gamma(shape, 1.0 / rate, size=size)


def sample_invgamma(shape, rate, rng, size=None):
    """Inverse-gamma draw with density proportional to x^-(a+1) exp(-b/x)."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0) or np.any(rate <= 0):
        raise ValueError("inverse-gamma parameters must be positive")
    return rate / rng.gamma(shape, 1.0, size=size)


def invgamma_mean(shape, rate):
    return rate / (shape - 1.0) if shape > 1 else math.inf


def lgamma(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("lgamma requires x > 0")
    return special.gammaln(x)


def digamma(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("digamma requires x > 0")
    return special.psi(x)


# ---------------------------------------------------------------------------
# discrete

def sample_dirichlet(alpha, rng):
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("Dirichlet concentrations must be positive")
    g = rng.gamma(alpha)
    total = g.sum()
    if total <= 0:
        # all components underflowed (tiny concentrations); fall back to a vertex
        out = np.zeros_like(alpha)
        out[rng.integers(alpha.size)] = 1.0
        return out
    return g / total


def sample_log_dirichlet(alpha, rng):
    """log of a Dirichlet draw, finite even when concentrations are tiny.

    Small shapes use ``G(a) = G(a + 1) * U**(1/a)`` on the log scale, so
    components that would underflow to zero keep a usable logarithm.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("Dirichlet concentrations must be positive")
    small = alpha < 1.0
    logg = np.log(rng.gamma(np.where(small, alpha + 1.0, alpha)))
    logu = np.log(rng.random(alpha.shape))
    logg = np.where(small, logg + logu / alpha, logg)
    return logg - special.logsumexp(logg)


def sample_categorical_log(logp, rng):
    """Draw one index from unnormalised log-probabilities."""
    logp = np.asarray(logp, dtype=float)
    p = np.exp(logp - logp.max())
    cdf = np.cumsum(p)
    return int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
