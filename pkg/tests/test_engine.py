import math
import pickle

import numpy as np
import pytest

from exchclt.engine import ExperimentSpec, run_cell, run_experiment
from exchclt.errors import CellError, InvalidArgument
from exchclt.generators import GeneratorSpec, Rate
from exchclt.statistics import ScheduleSpec, StatisticKind
from exchclt.streams import derive_stream, reset_stream, splitmix64, stream_key


def spec_for(generator, m_values=(100,), n_rep=200, seed=1, statistic=None, gamma=0.0):
    statistic = statistic or StatisticKind()
    return ExperimentSpec("t", generator, ScheduleSpec(tuple(m_values), gamma), statistic,
                          n_rep=n_rep, master_seed=seed)


# -- streams ----------------------------------------------------------------------------

def test_splitmix_reference_values():
    # first outputs of SplitMix64 seeded with 0 are splitmix64(0), splitmix64(golden)
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_stream_same_triple_identical():
    a = derive_stream(42, 100, 7).random(8)
    b = derive_stream(42, 100, 7).random(8)
    np.testing.assert_array_equal(a, b)


def test_stream_distinct_replicates_differ():
    assert derive_stream(42, 100, 0).random() != derive_stream(42, 100, 1).random()
    keys = {stream_key(s, m, r) for s in range(3) for m in range(1, 30) for r in range(30)}
    assert len(keys) == 3 * 29 * 30


def test_reset_matches_fresh_stream():
    g = derive_stream(0, 1, 0)
    g.standard_normal(5)
    reset_stream(g, 9, 33, 4)
    np.testing.assert_array_equal(g.random(6), derive_stream(9, 33, 4).random(6))


def test_stream_rejects_negative_replicate():
    with pytest.raises(InvalidArgument):
        derive_stream(0, 10, -1)


@pytest.mark.slow
def test_first_outputs_equidistributed():
    g = derive_stream(0, 1, 0)
    first = np.empty(1_000_000)
    for r in range(first.size):
        first[r] = reset_stream(g, 2026, 100, r).random()
    assert abs(first.mean() - 0.5) <= 0.002
    counts = np.histogram(first, bins=10, range=(0, 1))[0]
    assert np.abs(counts / first.size - 0.1).max() < 0.002


# -- specs -------------------------------------------------------------------------------

def test_spec_rejects_gamma_mismatch():
    with pytest.raises(InvalidArgument):
        spec_for(GeneratorSpec("iid_symmetric"), statistic=StatisticKind("weber", 0.5), gamma=0.25)


def test_spec_rejects_bad_n_rep_and_eps():
    with pytest.raises(InvalidArgument):
        spec_for(GeneratorSpec("iid_symmetric"), n_rep=0)
    with pytest.raises(InvalidArgument):
        ExperimentSpec("t", GeneratorSpec("iid_symmetric"), ScheduleSpec((10,)), epsilons=(0.1, -1))


# -- run_cell ---------------------------------------------------------------------------------

@pytest.mark.parametrize("m", [2, 10, 250])
def test_zero_sum_full_sum_is_point_mass(m):
    sample, _, gof = run_cell(spec_for(GeneratorSpec("zero_sum_permutation"), (m,)), m)
    assert np.abs(sample.values).max() <= 1e-9
    assert gof.ks == pytest.approx(0.5, abs=1e-6)


@pytest.mark.slow
def test_iid_rademacher_full_sum_m1e4():
    spec = spec_for(GeneratorSpec("iid_symmetric", dist="rademacher"), (10_000,), 10_000, 5)
    _, _, gof = run_cell(spec, 10_000)
    assert gof.ks <= 0.03


def test_single_replicate_cell():
    sample, cond, gof = run_cell(spec_for(GeneratorSpec("iid_symmetric"), n_rep=1), 100)
    assert sample.n_rep == 1
    assert math.isnan(gof.sample_var)
    assert math.isnan(cond.pair_corr.value)


def test_weber_cell_uses_schedule_k():
    spec = spec_for(GeneratorSpec("zero_sum_permutation"), (100,), 300,
                    statistic=StatisticKind("weber", 0.25), gamma=0.25)
    sample, cond, gof = run_cell(spec, 100)
    assert cond.k == 25
    assert gof.target_sigma2 == 0.75


def test_odd_m_cell_runs():
    # the symmetry check truncates to even length; the statistic does not
    sample, cond, _ = run_cell(spec_for(GeneratorSpec("iid_symmetric"), (101,)), 101)
    assert sample.m == 101 and not math.isnan(cond.joint_sign_symmetry_ks)


def test_cell_threads_bit_identical():
    spec = spec_for(GeneratorSpec("rademacher_magnitude", magnitude_law="uniform"),
                    (64,), 1500, 3)
    a = run_cell(spec, 64, threads=1)
    b = run_cell(spec, 64, threads=5)
    np.testing.assert_array_equal(a[0].values, b[0].values)
    assert a[1] == b[1] and a[2] == b[2]


# -- run_experiment -------------------------------------------------------------------------

def test_experiment_one_cell():
    report = run_experiment(spec_for(GeneratorSpec("iid_symmetric"), (100,), 100))
    assert [c.m for c in report.cells] == [100]


def test_experiment_deterministic():
    spec = spec_for(GeneratorSpec("scale_mixture", delta=Rate(0.5, 0.5)), (50, 80), 300)

    def blob(rep):
        return pickle.dumps([(c.m, c.sample.values.tobytes(), c.conditions, c.gof)
                             for c in rep.cells])

    assert blob(run_experiment(spec)) == blob(run_experiment(spec, threads=3))


def test_experiment_cells_ordered():
    rep = run_experiment(spec_for(GeneratorSpec("iid_symmetric"), (20, 40, 80), 50))
    assert [c.m for c in rep.cells] == [20, 40, 80]


def test_failed_cell_identified():
    # rho = 3/m exceeds 1 at m = 2
    spec = spec_for(GeneratorSpec("equicorrelated_gaussian", rho=Rate(3.0, 1.0)), (2, 10), 10)
    with pytest.raises(CellError) as info:
        run_experiment(spec)
    assert info.value.m == 2
