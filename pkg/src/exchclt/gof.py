"""Distances between an empirical statistic sample and a centered normal law.

The normal CDF is evaluated through the complementary error function,
``Phi(z) = erfc(-z / sqrt(2)) / 2``, using scipy's Cephes ``erfc``.  Going
through ``erfc`` rather than ``1 + erf`` keeps full relative accuracy in the
lower tail; absolute error is at the 1e-16 level everywhere.  The quantile
function is obtained by inverting this same CDF numerically, so there is a
single approximation underneath both.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import erfc

from exchclt.errors import InvalidArgument
from exchclt.statistics import StatisticKind

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

#: c(alpha) = sqrt(-ln(alpha / 2) / 2), the asymptotic two-sample KS constant
KS_C_99 = math.sqrt(-0.5 * math.log(0.005))


@dataclass(frozen=True)
class StatisticSample:
    kind: StatisticKind
    m: int
    values: np.ndarray
    seed: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise InvalidArgument("a statistic sample needs at least one value")
        if not np.isfinite(values).all():
            raise InvalidArgument("statistic values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n_rep(self):
        return len(self.values)

    @property
    def target_sigma2(self):
        return self.kind.target_sigma2


@dataclass(frozen=True)
class GofReport:
    ks: float
    wasserstein1: float
    sample_mean: float
    sample_var: float  # nan when n_rep < 2
    target_sigma2: float


def _check_sigma2(sigma2):
    if not sigma2 > 0:
        raise InvalidArgument(f"sigma2 must be > 0, got {sigma2}")


def _positive(sigma2):
    _check_sigma2(sigma2)
    return sigma2


def normal_cdf(x, sigma2=1.0):
    """P(N(0, sigma2) <= x); works elementwise on arrays."""
    _check_sigma2(sigma2)
    z = np.asarray(x, dtype=np.float64) / math.sqrt(sigma2)
    out = 0.5 * erfc(-z / _SQRT2)
    return float(out) if out.ndim == 0 else out


def normal_pdf(x, sigma2=1.0):
    _check_sigma2(sigma2)
    s = math.sqrt(sigma2)
    z = np.asarray(x, dtype=np.float64) / s
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z) / s


def _initial_lower_quantile(q):
    # Abramowitz & Stegun 26.2.23 for q <= 1/2, |error| < 4.5e-4
    t = np.sqrt(-2.0 * np.log(q))
    return -(t - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (
        1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t ** 3))


def normal_quantile(p, sigma2=1.0, tol=1e-13, max_iter=60):
    """Inverse of :func:`normal_cdf` by safeguarded Newton iteration.

    The equation is always solved in the lower tail, ``Phi(x) = min(p, 1-p)``,
    where ``erfc`` keeps full relative accuracy, and reflected afterwards.
    """
    _check_sigma2(sigma2)
    p = np.asarray(p, dtype=np.float64)
    if ((p <= 0) | (p >= 1)).any():
        raise InvalidArgument("quantile levels must lie strictly inside (0, 1)")
    upper = p > 0.5
    q = np.where(upper, 1.0 - p, p)
    x = _initial_lower_quantile(q)
    lo = np.full_like(x, -40.0)
    hi = np.zeros_like(x)
    for _ in range(max_iter):
        f = normal_cdf(x) - q
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        nxt = x - f / normal_pdf(x)
        nxt = np.where((nxt <= lo) | (nxt >= hi), 0.5 * (lo + hi), nxt)
        done = np.abs(nxt - x) <= tol * np.maximum(1.0, np.abs(x))
        x = nxt
        if done.all():
            break
    x = np.where(upper, -x, x) * math.sqrt(sigma2)
    return float(x) if x.ndim == 0 else x


def _sample_values(sample):
    values = sample.values if isinstance(sample, StatisticSample) else np.asarray(sample, float)
    if values.size == 0:
        raise InvalidArgument("empty sample")
    return values


def ks_distance(values, sigma2=1.0):
    """sup_x |F_n(x) - Phi_sigma(x)| for the empirical CDF of ``values``."""
    x = np.sort(_sample_values(values))
    n = x.size
    cdf = normal_cdf(x, sigma2)
    if n == 1:
        cdf = np.atleast_1d(cdf)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max(), 0.0))


def ks_statistic(sample):
    """One-sample KS distance of a :class:`StatisticSample` to its target normal."""
    return ks_distance(sample.values, sample.target_sigma2)


def wasserstein1_distance(values, sigma2=1.0):
    """Exact W1 = int_0^1 |F_n^{-1}(u) - Q(u)| du to the target normal law.

    On the i-th quantile cell ((i-1)/n, i/n] the empirical quantile is the
    order statistic x_(i); substituting u = Phi(z) turns the cell integral
    into int |x - z| phi(z) dz over [Q((i-1)/n), Q(i/n)], which has the
    antiderivative x Phi(z) + phi(z).  Cell probabilities are used exactly.
    """
    x = np.sort(_sample_values(values)) / math.sqrt(_positive(sigma2))
    n = x.size
    levels = np.arange(n + 1) / n
    edges = np.empty(n + 1)
    edges[0], edges[-1] = -np.inf, np.inf
    if n > 1:
        edges[1:-1] = normal_quantile(levels[1:-1])
    za, zb = edges[:-1], edges[1:]
    a, b = levels[:-1], levels[1:]
    c = np.clip(x, za, zb)
    phi_c = np.where(x <= za, a, np.where(x >= zb, b, normal_cdf(x)))
    left = x * (phi_c - a) + normal_pdf(c) - normal_pdf(za)
    right = normal_pdf(c) - normal_pdf(zb) - x * (b - phi_c)
    return math.sqrt(sigma2) * math.fsum(left + right)


def wasserstein1(sample):
    return wasserstein1_distance(sample.values, sample.target_sigma2)


def summarize(sample):
    """Mean and unbiased variance, both with correctly rounded sums."""
    x = _sample_values(sample)
    n = x.size
    if n < 2:
        raise InvalidArgument("variance needs at least two values")
    mean = math.fsum(x) / n
    d = x - mean
    return mean, math.fsum(d * d) / (n - 1)


def gof_report(sample):
    x = sample.values
    if x.size >= 2:
        mean, var = summarize(sample)
    else:
        mean, var = float(x[0]), math.nan
    return GofReport(
        ks=ks_statistic(sample),
        wasserstein1=wasserstein1(sample),
        sample_mean=mean,
        sample_var=var,
        target_sigma2=sample.target_sigma2,
    )


def ks_two_sample(a, b):
    """sup_x |F_a(x) - F_b(x)| between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise InvalidArgument("two-sample KS needs nonempty samples")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.abs(fa - fb).max())


def ks_two_sample_critical(n1, n2, c=KS_C_99):
    """Asymptotic two-sample KS critical value, 99% level by default."""
    return c * math.sqrt((n1 + n2) / (n1 * n2))
