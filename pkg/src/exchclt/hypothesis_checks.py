"""Monte Carlo estimates of the hypothesis conditions at a fixed row size.

One streaming pass over ``n_rep`` rows reduces every row to a handful of
scalars (:class:`RowSummaries`); all condition estimates are functions of
those scalars.  Memory is O(n_rep + m).

Conditions are asymptotic, so verdicts use fixed finite thresholds:

* condition 1 passes when ``|E[X1 X2]|`` is consistent with at most
  ``COND1_TOL`` (the 95% CI reaches into ``[-COND1_TOL, COND1_TOL]``);
* conditions 2 and 3 pass when the exceedance probability at
  ``VERDICT_EPS`` is at most ``PROB_THRESHOLD``;
* symmetry checks pass when the two-sample KS distance stays below the 99%
  critical value.

Two-sample comparisons split replicates by parity (even replicates on one
side, odd on the other) so the samples being compared are independent.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from exchclt.errors import InvalidArgument
from exchclt.generators import generate_row
from exchclt.gof import ks_two_sample, ks_two_sample_critical
from exchclt.statistics import (
    accurate_sum,
    full_sum_statistic,
    sign_flip_tail,
)
from exchclt.streams import derive_stream, reset_stream

DEFAULT_EPSILONS = (0.05, 0.1, 0.5)
VERDICT_EPS = 0.1
PROB_THRESHOLD = 0.01
COND1_TOL = 0.01
Z95 = 1.959963984540054
QUAD_VARIANTS = ("lemma_k", "theorem_m")
_CHUNK = 256


@dataclass
class RowSummaries:
    """Per-replicate scalars, indexed by replicate number."""

    m: int
    k: int
    pair_mean: np.ndarray      # mean of X_{2j-1} X_{2j} over disjoint pairs
    max_scaled: np.ndarray     # max_i |X_i| / sqrt(m)
    quad_lemma: np.ndarray     # (1/k) sum_{i<=k} X_i^2
    quad_theorem: np.ndarray   # (1/m) sum_i X_i^2
    first: np.ndarray          # X_1
    full_even: np.ndarray      # full-sum statistic of the even-truncated row
    flipped_even: np.ndarray   # same after negating its second half
    statistic: np.ndarray      # optional statistic, nan when not requested

    @property
    def n_rep(self):
        return len(self.first)


def _summarize_row(x, k, statistic, out, r):
    m = len(x)
    half = m // 2
    sq = x * x
    out.pair_mean[r] = accurate_sum(x[0:2 * half:2] * x[1:2 * half:2]) / half if half else math.nan
    out.max_scaled[r] = np.abs(x).max() / math.sqrt(m)
    out.quad_lemma[r] = accurate_sum(sq[:k]) / k
    out.quad_theorem[r] = accurate_sum(sq) / m
    out.first[r] = x[0]
    if half:
        even = x[:2 * half]
        out.full_even[r] = full_sum_statistic(even)
        out.flipped_even[r] = full_sum_statistic(sign_flip_tail(even, half))
    if statistic is not None:
        out.statistic[r] = statistic.evaluate(x, m)


def summarize_rows(spec, m, n_rep, seed, k=None, statistic=None, threads=1):
    """Generate ``n_rep`` rows of size ``m`` and reduce each to its summaries.

    Row ``r`` is drawn from ``derive_stream(seed, m, r)``, so the result does
    not depend on ``threads``.
    """
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    if n_rep < 1:
        raise InvalidArgument(f"n_rep must be >= 1, got {n_rep}")
    k = m // 2 if k is None else k
    k = max(k, 1)
    if not 1 <= k <= m:
        raise InvalidArgument(f"k must satisfy 1 <= k <= m={m}, got {k}")

    def col():
        return np.full(n_rep, math.nan)

    out = RowSummaries(m, k, col(), col(), col(), col(), col(), col(), col(), col())

    def work(start):
        stream = derive_stream(seed, m, start)
        for r in range(start, min(start + _CHUNK, n_rep)):
            reset_stream(stream, seed, m, r)
            row = generate_row(spec, m, stream, (seed, m, r))
            _summarize_row(row.values, k, statistic, out, r)

    starts = range(0, n_rep, _CHUNK)
    if threads <= 1 or n_rep <= _CHUNK:
        for s in starts:
            work(s)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    return out


@dataclass(frozen=True)
class Estimate:
    value: float
    ci_halfwidth: float  # 95%, normal approximation
    se: float

    def covers(self, target):
        return abs(self.value - target) <= self.ci_halfwidth


def mean_estimate(samples):
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    if n < 2:
        raise InvalidArgument("a confidence interval needs at least two replicates")
    mean = math.fsum(x) / n
    d = x - mean
    se = math.sqrt(math.fsum(d * d) / (n - 1) / n)
    return Estimate(mean, Z95 * se, se)


def exceedance(values, eps):
    """Fraction of entries strictly above ``eps``."""
    return float(np.count_nonzero(np.asarray(values) > eps)) / len(values)


def parity_split_ks(a, b=None):
    """KS between even-indexed ``a`` and odd-indexed ``b`` (``b`` defaults to ``-a``).

    Returns ``(ks, critical_99)``; both nan if either half is empty.
    """
    a = np.asarray(a, dtype=np.float64)
    b = -a if b is None else np.asarray(b, dtype=np.float64)
    left, right = a[0::2], b[1::2]
    if left.size == 0 or right.size == 0:
        return math.nan, math.nan
    return ks_two_sample(left, right), ks_two_sample_critical(left.size, right.size)


@dataclass(frozen=True)
class ConditionReport:
    m: int
    n_rep: int
    k: int
    pair_corr: Estimate
    max_exceedance: tuple           # ((eps, prob), ...)
    quad_concentration: tuple       # ((eps, variant, prob), ...)
    marginal_symmetry_ks: float
    marginal_symmetry_crit: float
    joint_sign_symmetry_ks: float
    joint_sign_symmetry_crit: float

    def max_exceedance_prob(self, eps):
        for e, p in self.max_exceedance:
            if e == eps:
                return p
        raise KeyError(eps)

    def quad_concentration_prob(self, eps, variant):
        for e, v, p in self.quad_concentration:
            if e == eps and v == variant:
                return p
        raise KeyError((eps, variant))

    @property
    def cond1_pass(self):
        est = self.pair_corr
        return abs(est.value) <= est.ci_halfwidth + COND1_TOL

    def cond2_pass(self, eps=VERDICT_EPS):
        return self.max_exceedance_prob(eps) <= PROB_THRESHOLD

    def cond3_pass(self, variant="theorem_m", eps=VERDICT_EPS):
        return self.quad_concentration_prob(eps, variant) <= PROB_THRESHOLD

    @property
    def marginal_symmetry_pass(self):
        return self.marginal_symmetry_ks <= self.marginal_symmetry_crit

    @property
    def joint_sign_symmetry_pass(self):
        return self.joint_sign_symmetry_ks <= self.joint_sign_symmetry_crit


def condition_report(summ, epsilons=DEFAULT_EPSILONS):
    n = summ.n_rep
    if n >= 2 and summ.m >= 2:
        pair = mean_estimate(summ.pair_mean)
    else:
        pair = Estimate(math.nan, math.nan, math.nan)
    quad_dev = {
        "lemma_k": np.abs(summ.quad_lemma - 1.0),
        "theorem_m": np.abs(summ.quad_theorem - 1.0),
    }
    marg = parity_split_ks(summ.first)
    if summ.m >= 2:
        joint = parity_split_ks(summ.full_even, summ.flipped_even)
    else:
        joint = (math.nan, math.nan)
    return ConditionReport(
        m=summ.m,
        n_rep=n,
        k=summ.k,
        pair_corr=pair,
        max_exceedance=tuple((e, exceedance(summ.max_scaled, e)) for e in epsilons),
        quad_concentration=tuple(
            (e, v, exceedance(quad_dev[v], e)) for e in epsilons for v in QUAD_VARIANTS),
        marginal_symmetry_ks=marg[0],
        marginal_symmetry_crit=marg[1],
        joint_sign_symmetry_ks=joint[0],
        joint_sign_symmetry_crit=joint[1],
    )


def check_conditions(spec, m, n_rep, seed, k=None, epsilons=DEFAULT_EPSILONS, threads=1):
    return condition_report(summarize_rows(spec, m, n_rep, seed, k, threads=threads), epsilons)


def estimate_pair_correlation(spec, m, n_rep, seed):
    """E[X1 X2], averaged over the floor(m/2) disjoint coordinate pairs of each row."""
    if m < 2:
        raise InvalidArgument(f"need m >= 2, got {m}")
    if n_rep < 2:
        raise InvalidArgument(f"need n_rep >= 2 for a confidence interval, got {n_rep}")
    return mean_estimate(summarize_rows(spec, m, n_rep, seed).pair_mean)


def estimate_pair_moment(spec, m, i, j, n_rep, seed):
    """E[X_i X_j] for one fixed pair of 1-based coordinates, without pair averaging."""
    if not (1 <= i <= m and 1 <= j <= m and i != j):
        raise InvalidArgument(f"need distinct coordinates in 1..{m}, got ({i}, {j})")
    prods = np.empty(n_rep)
    for r in range(n_rep):
        x = generate_row(spec, m, derive_stream(seed, m, r)).values
        prods[r] = x[i - 1] * x[j - 1]
    return mean_estimate(prods)


def estimate_max_exceedance(spec, m, eps, n_rep, seed):
    """P(max_i |X_i| / sqrt(m) > eps)."""
    if not eps > 0:
        raise InvalidArgument(f"eps must be > 0, got {eps}")
    return exceedance(summarize_rows(spec, m, n_rep, seed).max_scaled, eps)


def estimate_quadratic_concentration(spec, m, k, eps, variant, n_rep, seed):
    """P(|(1/d) sum_{i<=d} X_i^2 - 1| > eps) with d = k (lemma_k) or d = m (theorem_m)."""
    if variant not in QUAD_VARIANTS:
        raise InvalidArgument(f"unknown variant {variant!r}")
    if not 1 <= k <= m:
        raise InvalidArgument(f"k must satisfy 1 <= k <= m={m}, got {k}")
    summ = summarize_rows(spec, m, n_rep, seed, k=k)
    quad = summ.quad_lemma if variant == "lemma_k" else summ.quad_theorem
    return exceedance(np.abs(quad - 1.0), eps)


def marginal_symmetry_distance(spec, m, n_rep, seed):
    """Two-sample KS between X_1 (even replicates) and -X_1 (odd replicates)."""
    if n_rep < 100:
        raise InvalidArgument(f"need n_rep >= 100, got {n_rep}")
    return parity_split_ks(summarize_rows(spec, m, n_rep, seed).first)[0]


def joint_sign_symmetry_distance(spec, m, n_rep, seed):
    """Two-sample KS between the full-sum statistic of rows and of tail-flipped rows.

    Unflipped rows come from even replicates, flipped rows from odd ones.
    """
    if m % 2:
        raise InvalidArgument(f"joint sign symmetry check needs even m, got {m}")
    if n_rep < 100:
        raise InvalidArgument(f"need n_rep >= 100, got {n_rep}")
    summ = summarize_rows(spec, m, n_rep, seed)
    return parity_split_ks(summ.full_even, summ.flipped_even)[0]
