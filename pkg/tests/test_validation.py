import json

import numpy as np
import pytest

from dynrgg import validation as V


def test_brute_census_small_pieces():
    r = 0.05
    pts = np.array([[0.5, 0.5], [0.52, 0.5], [0.2, 0.2], [0.8, 0.3], [0.83, 0.3], [0.86, 0.3]])
    out = V.brute_census(pts, r, epsilon=0.5, ell_max=3)
    assert out["k1"] == 1
    assert out["k_ell"] == {1: 1, 2: 1, 3: 1}
    # the pair is within 0.4r of its leftmost member, the triple spans 1.2r
    assert out["k_prime"] == {1: 1, 2: 1, 3: 0}
    assert out["largest_size"] == 3
    assert out["k_tilde_ell"] == {1: 2, 2: 1, 3: 0}
    assert out["non_embeddable_count"] == 0


def test_brute_census_across_the_seam_and_winding():
    r = 0.05
    seam = np.array([[0.99, 0.5], [0.01, 0.5]])
    out = V.brute_census(seam, r, epsilon=0.5, ell_max=2)
    assert out["k_ell"] == {2: 1} and out["k_prime"][2] == 1 and out["non_embeddable_count"] == 0
    ring = np.column_stack([np.arange(25) / 25, np.full(25, 0.5)])
    out = V.brute_census(ring, r, epsilon=1.0, ell_max=3)
    assert out["k_ell"] == {25: 1} and out["non_embeddable_count"] == 1
    # a component pressed against the boundary band is still embeddable after translation
    edge = np.array([[0.001, 0.001], [0.03, 0.001]])
    assert V.brute_census(edge, r, 1.0, 2)["non_embeddable_count"] == 0


def test_brute_census_gap_rule_for_embeddability():
    r = 0.1
    # x-extent 0.75 leaves an empty arc of 0.25 >= 2r
    ok = np.array([[0.1 + 0.075 * k, 0.5] for k in range(11)])
    assert V.brute_census(ok, r, 1.0, 1)["non_embeddable_count"] == 0
    # x-extent 0.85 leaves only 0.15 < 2r
    bad = np.array([[0.05 + 0.085 * k, 0.5] for k in range(11)])
    assert V.brute_census(bad, r, 1.0, 1)["non_embeddable_count"] == 1


@pytest.mark.parametrize("seed", range(5))
def test_quick_oracle_and_stationarity_criteria_pass(seed):
    suite = V.Suite(V.ValidationSettings.quick(seed=seed))
    for res in suite.run([10, 11]):
        assert res.passed, res.line()


def test_quadrature_parts_of_q_criterion_pass():
    res = V.Suite(V.ValidationSettings.quick()).criterion_4()
    by_name = {c.name: c for c in res.checks}
    for name, check in by_name.items():
        if "quad-MC" in name:
            assert check.passed, res.line()
    assert all(v for k, v in res.details.items() if k.endswith("_passes"))


def test_quick_suite_runs_every_criterion_and_verdict_parses():
    settings = V.ValidationSettings.quick(dynamic_steps=1000, m_values=(1, 10), qn_values=(1.0,))
    results = V.Suite(settings).run()
    assert [r.id for r in results] == list(range(1, 12))
    for r in results:
        assert r.checks and r.line().startswith(("[PASS]", "[FAIL]"))
    doc = json.loads(V.verdict_json(results, settings))
    assert doc["passed"] == all(r.passed for r in results)
    assert len(doc["criteria"]) == 11
    assert doc["tolerances"]["c1_abs"] == 0.05


def test_zero_tolerance_forces_failure():
    loose = V.Suite(V.ValidationSettings.quick()).criterion_2()
    tight = V.Suite(V.ValidationSettings.quick(tolerances={"c2_mean_lo": 1.0, "c2_mean_hi": 1.0})).criterion_2()
    assert not tight.passed
    assert [c.measured for c in loose.checks] == [c.measured for c in tight.checks]
    bb = V.Suite(V.ValidationSettings.quick(oracle_instances=1, tolerances={"c10_bb_rel": 0.0})).criterion_10()
    assert not bb.passed


def test_unknown_tolerance_name_is_rejected():
    with pytest.raises(KeyError):
        V.ValidationSettings(tolerances={"bogus": 1.0}).tol("bogus")
