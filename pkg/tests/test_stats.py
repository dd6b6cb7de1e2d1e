import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynrgg.stats import (CONNECTED, DISCONNECTED, Aggregate, batch_means_se, classify_masks,
                          classify_transition, correlations, mean_ci, mean_se, poisson_fit,
                          record_connectivity)

index_sets = st.sets(st.integers(0, 40), max_size=20)


def test_classify_transition_examples():
    t = classify_transition({1, 2}, {2, 3})
    assert (t.b, t.d, t.s_count) == (1, 1, 1)
    t = classify_transition(set(), set())
    assert (t.b, t.d, t.s_count, t.k1_before, t.k1_after) == (0, 0, 0, 0, 0)


@given(index_sets, index_sets)
def test_transition_identities_and_mask_form(before, after):
    t = classify_transition(before, after)
    assert t.k1_before == t.d + t.s_count
    assert t.k1_after == t.s_count + t.b
    mb = np.zeros(41, bool)
    ma = np.zeros(41, bool)
    mb[list(before)] = True
    ma[list(after)] = True
    assert classify_masks(mb, ma) == (t.b, t.d, t.s_count)


def test_record_connectivity_examples():
    runs = record_connectivity([True, True, False, True])
    assert [(p.kind, p.length, p.complete) for p in runs] == [
        (CONNECTED, 2, False), (DISCONNECTED, 1, True), (CONNECTED, 1, False)]
    assert [p.start_step for p in runs] == [0, 2, 3]
    only = record_connectivity([True] * 6)
    assert len(only) == 1 and not only[0].complete and only[0].length == 6
    alt = record_connectivity([k % 2 == 0 for k in range(11)])
    complete = [p for p in alt if p.complete]
    assert len(complete) == 9 and all(p.length == 1 for p in complete)
    with pytest.raises(ValueError):
        record_connectivity([])


@given(st.lists(st.booleans(), min_size=1, max_size=200))
def test_periods_partition_the_sequence(seq):
    runs = record_connectivity(seq)
    assert sum(p.length for p in runs) == len(seq)
    for a, b in zip(runs, runs[1:]):
        assert a.kind != b.kind and a.start_step + a.length == b.start_step
    for p in runs:
        assert p.complete == (p.start_step > 0 and p.start_step + p.length < len(seq))
        assert all(seq[i] == (p.kind == CONNECTED) for i in range(p.start_step, p.start_step + p.length))


def test_mean_ci_examples():
    agg = Aggregate()
    agg.extend([1, 1, 1, 1])
    assert mean_ci(agg) == (1.0, 0.0)
    agg = Aggregate()
    agg.extend([0, 2])
    mean, half = mean_ci(agg)
    assert mean == 1.0 and half == pytest.approx(1.96)
    single = Aggregate()
    single.add(3)
    assert mean_ci(single)[0] == 3 and math.isnan(mean_ci(single)[1])
    assert all(math.isnan(v) for v in mean_ci(Aggregate()))


@given(st.lists(st.integers(-50, 50), max_size=60), st.lists(st.integers(-50, 50), max_size=60),
       st.lists(st.integers(-50, 50), max_size=60))
def test_aggregate_merge_is_exact(a, b, c):
    def agg(values):
        out = Aggregate()
        out.extend(values)
        return out

    whole = agg(a + b + c)
    left = agg(a).merge(agg(b)).merge(agg(c))
    right = agg(a).merge(agg(b).merge(agg(c)))
    swapped = agg(c).merge(agg(a)).merge(agg(b))
    for m in (left, right, swapped):
        assert (m.count, m.sum, m.sum_of_squares, m.histogram) == (
            whole.count, whole.sum, whole.sum_of_squares, whole.histogram)
    if len(a + b + c) >= 2:
        assert whole.variance == pytest.approx(np.var(a + b + c, ddof=1), abs=1e-9)


def test_poisson_fit_on_poisson_sample():
    draws = np.random.default_rng(0).poisson(1.0, 10**5)
    fit = poisson_fit(Counter(draws.tolist()), 1.0)
    assert fit.ok and fit.p_value > 0.01
    assert fit.mean == pytest.approx(1.0, rel=0.02)
    assert fit.dispersion == pytest.approx(1.0, rel=0.03)


def test_poisson_fit_rejects_point_mass_and_flags_small_samples():
    fit = poisson_fit({0: 1000}, 1.0)
    assert fit.p_value < 1e-6
    assert poisson_fit({}, 1.0).flag == "empty histogram"
    small = poisson_fit({0: 100, 1: 100}, 1.0)
    assert not small.ok and "insufficient" in small.flag
    with pytest.raises(ValueError):
        poisson_fit({0: 10}, 0.0)


def test_poisson_bins_cover_all_mass():
    fit = poisson_fit({0: 300, 1: 400, 2: 200, 5: 100, 7: 10}, 1.3)
    assert fit.observed == [300, 400, 200, 110]
    assert sum(fit.expected) == pytest.approx(1010)


def test_batch_means_se_on_iid_and_correlated_series():
    rng = np.random.default_rng(2)
    x = rng.normal(size=100_000)
    _, se_iid = mean_se(x)
    _, se_bm = batch_means_se(x)
    assert se_bm == pytest.approx(se_iid, rel=0.25)
    # AR(1) with phi=0.9 inflates the variance of the mean by (1+phi)/(1-phi) = 19
    ar = np.empty_like(x)
    ar[0] = x[0]
    for i in range(1, len(x)):
        ar[i] = 0.9 * ar[i - 1] + x[i]
    _, naive = mean_se(ar)
    _, bm = batch_means_se(ar)
    assert bm / naive == pytest.approx(math.sqrt(19), rel=0.3)


def test_correlations_handle_constant_columns():
    out = correlations({"a": np.arange(10), "b": 2 * np.arange(10), "c": np.ones(10)})
    assert out["a~b"] == pytest.approx(1.0)
    assert math.isnan(out["a~c"]) and math.isnan(out["b~c"])
