import itertools
import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from exchclt.errors import InvalidArgument
from exchclt.generators import GeneratorSpec, Rate
from exchclt.gof import ks_two_sample_critical
from exchclt.hypothesis_checks import (
    COND1_TOL,
    check_conditions,
    estimate_max_exceedance,
    estimate_pair_correlation,
    estimate_pair_moment,
    estimate_quadratic_concentration,
    joint_sign_symmetry_distance,
    marginal_symmetry_distance,
    parity_split_ks,
    summarize_rows,
)

IID_NORMAL = GeneratorSpec("iid_symmetric")
IID_RADEMACHER = GeneratorSpec("iid_symmetric", dist="rademacher")
RAD_MAG = GeneratorSpec("rademacher_magnitude", magnitude_law="exponential", magnitude_seed=4)
ZERO_SUM = GeneratorSpec("zero_sum_permutation")


def crit(n_rep):
    return ks_two_sample_critical(n_rep - n_rep // 2, n_rep // 2)


# -- condition 1 ---------------------------------------------------------------------

def test_pair_corr_iid_covers_zero():
    est = estimate_pair_correlation(IID_NORMAL, 10, 5000, 1)
    assert est.covers(0.0)


def test_pair_corr_zero_sum_m4():
    # oracle: exact E[X1 X2] over all 24 orderings of {+1,-1,+1,-1}
    exact = np.mean([p[0] * p[1] for p in itertools.permutations([1, -1, 1, -1])])
    est = estimate_pair_correlation(ZERO_SUM, 4, 20_000, 2)
    assert est.covers(exact)
    assert exact == pytest.approx(-1 / 3)


def test_pair_corr_equicorrelated():
    spec = GeneratorSpec("equicorrelated_gaussian", rho=Rate(0.3))
    assert estimate_pair_correlation(spec, 8, 20_000, 3).covers(0.3)


def test_pair_corr_errors():
    with pytest.raises(InvalidArgument):
        estimate_pair_correlation(IID_NORMAL, 4, 1, 0)
    with pytest.raises(InvalidArgument):
        estimate_pair_correlation(IID_NORMAL, 1, 10, 0)


@pytest.mark.parametrize("spec", [IID_NORMAL, RAD_MAG, ZERO_SUM,
                                  GeneratorSpec("equicorrelated_gaussian", rho=Rate(0.2))],
                         ids=lambda s: s.family)
def test_pair_cross_check(spec):
    m = 10
    a = estimate_pair_moment(spec, m, 1, 2, 10_000, 4)
    b = estimate_pair_moment(spec, m, math.ceil(m / 2), m, 10_000, 4)
    assert abs(a.value - b.value) <= 4 * math.hypot(a.se, b.se)


def test_pair_averaging_reduces_ci():
    single = estimate_pair_moment(IID_NORMAL, 40, 1, 2, 2000, 5)
    pooled = estimate_pair_correlation(IID_NORMAL, 40, 2000, 5)
    assert pooled.ci_halfwidth < single.ci_halfwidth / 3


# -- condition 2 ---------------------------------------------------------------------

@pytest.mark.parametrize("m", [4, 25, 100, 400])
@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2, 0.5])
def test_max_exceedance_rademacher_indicator(m, eps):
    expected = 1.0 if 1 / math.sqrt(m) > eps else 0.0
    assert estimate_max_exceedance(IID_RADEMACHER, m, eps, 50, 0) == expected


def test_max_exceedance_normal_tail():
    # oracle: union bound 100 * P(|Z| > 5) from the analytic tail
    bound = float(100 * mpmath.erfc(5 / mpmath.sqrt(2)))
    assert bound == pytest.approx(5.733e-5, rel=1e-3)
    p = estimate_max_exceedance(IID_NORMAL, 100, 0.5, 10_000, 6)
    assert p <= 1e-3


def test_max_exceedance_zero_sum_bounded():
    assert estimate_max_exceedance(ZERO_SUM, 100, 1.0, 500, 7) == 0.0


def test_max_exceedance_rejects_eps():
    with pytest.raises(InvalidArgument):
        estimate_max_exceedance(IID_NORMAL, 10, 0.0, 10, 0)


# -- condition 3 ---------------------------------------------------------------------

@pytest.mark.parametrize("eps", [1e-9, 0.05, 0.5])
def test_quad_rademacher_magnitude_exact(eps):
    assert estimate_quadratic_concentration(RAD_MAG, 50, 25, eps, "theorem_m", 300, 1) == 0.0


def test_quad_zero_sum_exact():
    spec = GeneratorSpec("zero_sum_permutation", magnitude_law="uniform", magnitude_seed=2)
    assert estimate_quadratic_concentration(spec, 50, 25, 1e-9, "theorem_m", 300, 1) == 0.0


def test_quad_iid_normal_chi_square():
    # oracle: P(|chi2_100 / 100 - 1| > 0.1) from the exact chi-square law
    exact = stats.chi2.cdf(90, 100) + stats.chi2.sf(110, 100)
    assert exact == pytest.approx(0.4790, abs=1e-4)
    p = estimate_quadratic_concentration(IID_NORMAL, 100, 50, 0.1, "theorem_m", 20_000, 2)
    assert abs(p - exact) <= 0.02


def test_quad_lemma_variant_uses_prefix():
    # lemma_k with k=1 is |X1^2 - 1| > eps; for Rademacher entries never true
    assert estimate_quadratic_concentration(IID_RADEMACHER, 9, 1, 0.1, "lemma_k", 100, 0) == 0.0
    p = estimate_quadratic_concentration(IID_NORMAL, 9, 1, 0.1, "lemma_k", 4000, 0)
    # oracle: P(|Z^2 - 1| > 0.1) = 1 - (P(Z^2 <= 1.1) - P(Z^2 < 0.9))
    exact = 1 - (stats.chi2.cdf(1.1, 1) - stats.chi2.cdf(0.9, 1))
    assert abs(p - exact) <= 4 * math.sqrt(exact * (1 - exact) / 4000)


def test_quad_errors():
    with pytest.raises(InvalidArgument):
        estimate_quadratic_concentration(IID_NORMAL, 10, 11, 0.1, "theorem_m", 10, 0)
    with pytest.raises(InvalidArgument):
        estimate_quadratic_concentration(IID_NORMAL, 10, 5, 0.1, "other", 10, 0)


# -- symmetry ---------------------------------------------------------------------------

@pytest.mark.parametrize("spec", [IID_NORMAL, RAD_MAG], ids=lambda s: s.family)
def test_marginal_symmetry_passes(spec):
    assert marginal_symmetry_distance(spec, 6, 4000, 3) <= crit(4000)


def test_marginal_symmetry_asymmetric_control():
    # |Z| has one-sided support, so its law and that of -|Z| are disjoint: KS = 1
    z = np.abs(np.random.default_rng(0).standard_normal(4000))
    ks, c = parity_split_ks(z)
    assert ks == 1.0 and ks > c


def test_marginal_symmetry_needs_replicates():
    with pytest.raises(InvalidArgument):
        marginal_symmetry_distance(IID_NORMAL, 4, 50, 0)


@pytest.mark.parametrize("spec", [IID_NORMAL, RAD_MAG], ids=lambda s: s.family)
def test_joint_sign_symmetry_passes(spec):
    assert joint_sign_symmetry_distance(spec, 20, 4000, 8) <= crit(4000)


def test_joint_sign_symmetry_fails_zero_sum():
    ks = joint_sign_symmetry_distance(ZERO_SUM, 100, 2000, 9)
    assert ks > 0.4 > crit(2000)


def test_joint_sign_symmetry_rejects_odd():
    with pytest.raises(InvalidArgument):
        joint_sign_symmetry_distance(IID_NORMAL, 7, 200, 0)


# -- reports and determinism ---------------------------------------------------------------

def test_summaries_thread_invariant():
    a = summarize_rows(RAD_MAG, 30, 1000, 11, threads=1)
    b = summarize_rows(RAD_MAG, 30, 1000, 11, threads=4)
    for name in ("pair_mean", "max_scaled", "quad_theorem", "first", "flipped_even"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_condition_report_iid_passes_everything():
    rep = check_conditions(IID_NORMAL, 4000, 1000, 3)
    assert rep.cond1_pass and rep.cond2_pass() and rep.cond3_pass()
    assert rep.cond3_pass("lemma_k")
    assert rep.marginal_symmetry_pass and rep.joint_sign_symmetry_pass
    for _, p in rep.max_exceedance:
        assert 0.0 <= p <= 1.0
    assert rep.pair_corr.ci_halfwidth > 0


def test_condition_report_flags_fixed_correlation():
    spec = GeneratorSpec("equicorrelated_gaussian", rho=Rate(0.3))
    rep = check_conditions(spec, 200, 2000, 3)
    assert not rep.cond1_pass and not rep.cond3_pass()
    assert rep.pair_corr.value > COND1_TOL


def test_condition_report_flags_fixed_scale_mixture():
    spec = GeneratorSpec("scale_mixture", delta=Rate(0.5))
    rep = check_conditions(spec, 2000, 2000, 4)
    assert rep.cond1_pass and not rep.cond3_pass()


def test_condition_report_single_replicate():
    rep = check_conditions(IID_NORMAL, 10, 1, 0)
    assert math.isnan(rep.pair_corr.value) and math.isnan(rep.marginal_symmetry_ks)
