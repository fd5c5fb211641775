import numpy as np
import pytest
from scipy.stats import binom

from oracles import configs
from threshold_lab import (DomainError, IncreasingEvent, InputError, InvariantError, MeasureFamily,
                           estimate_measure, estimate_pivotal, measure_of_event, pivotal_probability, sample_config)
from threshold_lab.exact import influence_vector
from threshold_lab.montecarlo import (BLOCK, coupled_estimates, coupled_indicators, estimate_influence, make_rng,
                                      sample_configs, substream)

EMB2 = MeasureFamily.embedded(2)
MAJ = IncreasingEvent.majority(3, 2)


def binomial_band(p, n, level=0.99):
    return binom.ppf((1 - level) / 2, n, p), binom.ppf((1 + level) / 2, n, p)


def test_level_frequency_matches_tail():
    fam = MeasureFamily.power([1, 2])
    t, n = 0.6, 100_000
    xs = sample_configs(fam, t, 1, n, make_rng(substream(7, "test")))
    lo, hi = binomial_band(t**2, n)
    assert lo <= np.count_nonzero(xs[:, 0] == 3) <= hi
    lo, hi = binomial_band(t - t**2, n)
    assert lo <= np.count_nonzero(xs[:, 0] == 2) <= hi


def test_sampling_is_deterministic():
    a = [sample_config(EMB2, 0.3, 4, make_rng(substream(5, "s"))) for _ in range(3)]
    b = [sample_config(EMB2, 0.3, 4, make_rng(substream(5, "s"))) for _ in range(3)]
    assert a == b
    xs = sample_configs(MeasureFamily.embedded(3), 0.3, 4, 500, make_rng(substream(5, "s")))
    ys = sample_configs(MeasureFamily.embedded(3), 0.3, 4, 500, make_rng(substream(5, "s")))
    np.testing.assert_array_equal(xs, ys)
    assert set(np.unique(xs)) <= {1, 3}


def test_boundary_parameter_rejected():
    with pytest.raises(DomainError):
        sample_config(EMB2, 0.0, 3, make_rng(substream(0, "s")))
    near = sample_configs(EMB2, 1e-9, 1, 10_000, make_rng(substream(0, "s")))
    assert np.all(near == 1)


def test_measure_estimate_covers_exact():
    est = estimate_measure(MAJ, EMB2, 0.6, samples=100_000, seed=3)
    assert est.covers(0.648)
    assert est.lo < est.value < est.hi
    assert est.stderr == pytest.approx(np.sqrt(est.value * (1 - est.value) / 100_000))


def test_constant_events_have_exact_estimates():
    full = IncreasingEvent.from_table(3, 2, [True] * 8)
    empty = IncreasingEvent.from_table(3, 2, [False] * 8)
    e = estimate_measure(full, EMB2, 0.4, samples=1000)
    assert (e.value, e.lo, e.hi, e.stderr) == (1.0, 1.0, 1.0, 0.0)
    assert estimate_measure(empty, EMB2, 0.4, samples=1000).value == 0.0


def test_pivotal_estimates():
    for j in range(3):
        assert estimate_pivotal(MAJ, EMB2, 0.5, j, samples=100_000, seed=j).covers(0.25)
    assert estimate_pivotal(IncreasingEvent.dictator(3, 2), EMB2, 0.5, 1, samples=10_000).value == 0.0


def test_tribes_estimates_match_enumeration():
    fam = MeasureFamily.embedded(3)
    tribes = IncreasingEvent.tribes(3, 3, 3)
    t = 0.5
    inf = influence_vector(tribes, fam, t)
    for j in (0, 4, 8):
        assert estimate_pivotal(tribes, fam, t, j, samples=100_000, seed=11).covers(
            pivotal_probability(tribes, fam, t, j))
        assert estimate_influence(tribes, fam, t, j, samples=100_000, seed=12).covers(inf[j])
    assert estimate_measure(tribes, fam, t, samples=100_000, seed=13).covers(measure_of_event(tribes, fam, t))


def test_estimates_span_several_blocks():
    n = 2 * BLOCK + 123
    a = estimate_measure(MAJ, EMB2, 0.45, samples=n, seed=1)
    b = estimate_measure(MAJ, EMB2, 0.45, samples=n, seed=1)
    assert a == b and a.samples == n
    assert a.covers(measure_of_event(MAJ, EMB2, 0.45))
    assert estimate_measure(MAJ, EMB2, 0.45, samples=n, seed=2).value != a.value


def test_substreams_differ_by_operation_t_and_coordinate():
    keys = {tuple(estimate_pivotal(MAJ, EMB2, t, j, samples=100).substream) for t in (0.3, 0.4) for j in range(3)}
    assert len(keys) == 6


def test_coupling_is_pathwise_monotone():
    ts = np.linspace(0.05, 0.95, 10)
    ind = coupled_indicators(IncreasingEvent.tribes(2, 3, 3), MeasureFamily.power([1, 2]), ts, 20_000, seed=4)
    assert np.all(ind[1:] >= ind[:-1])
    est = coupled_estimates(MAJ, EMB2, [0.4, 0.6], samples=20_000, seed=4)
    assert est.dominated
    assert est.nu[0].value <= est.nu[1].value
    assert len(est.pivotal) == 2 and len(est.pivotal[0]) == 3


def test_coupling_detects_non_increasing_events():
    parity = IncreasingEvent.from_table(2, 2, [(a + b) % 2 == 0 for a, b in configs(2, 2)])
    with pytest.raises(InvariantError):
        coupled_estimates(parity, EMB2, [0.3, 0.7], samples=1000, with_coordinates=False)


def test_argument_checks():
    with pytest.raises(InputError):
        estimate_measure(MAJ, EMB2, 0.5, samples=10)
    with pytest.raises(InputError):
        estimate_measure(MAJ, EMB2, 0.5, level=1.0)
    with pytest.raises(InputError):
        estimate_measure(MAJ, MeasureFamily.embedded(3), 0.5)
    with pytest.raises(InputError):
        estimate_pivotal(MAJ, EMB2, 0.5, 5)
    with pytest.raises(InputError):
        coupled_estimates(MAJ, EMB2, [0.6, 0.4], samples=1000)
