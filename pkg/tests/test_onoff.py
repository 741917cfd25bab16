"""On-off search machinery: priorities, prefix schedules, mask candidates, search."""

import numpy as np
import pytest

from iscap_hbf import onoff_control as oc


def test_full_masks():
    rf, ps = oc.full_masks(4, 3)
    assert rf.shape == (3,) and rf.all()
    assert ps.shape == (4, 3) and ps.all()


# ---------------------------------------------------------------------------
# RF-chain priority and candidates

def test_rf_priority_orders_by_chain_power():
    w = [np.array([0.0, 2.0, 0.0, 1.0], complex)]
    S = np.diag([0.5, 0.0, 0.1, 0.0]).astype(complex)
    # chain powers: [0.5, 4.0, 0.1, 1.0] -> ascending order 2, 0, 3, 1
    assert list(oc.rf_priority(w, S)) == [2, 0, 3, 1]


def test_rf_priority_stable_on_ties():
    w = [np.zeros(3, complex)]
    S = np.zeros((3, 3), complex)
    assert list(oc.rf_priority(w, S)) == [0, 1, 2]


def test_rf_mask_candidates_nested_and_bounded():
    rng = np.random.default_rng(0)
    w = [rng.standard_normal(5) + 1j * rng.standard_normal(5) for _ in range(2)]
    S = 0.1 * np.eye(5, dtype=complex)
    masks = oc.rf_mask_candidates(w, S, k_ir=2)
    assert len(masks) == 4            # 0, 1, 2, 3 chains off; at least 2 stay on
    assert masks[0].all()
    for m in masks:
        assert m.sum() >= 2
    for a, b in zip(masks, masks[1:]):
        assert np.all(b <= a)         # prefixes nest: each mask removes one more
        assert a.sum() - b.sum() == 1


def test_rf_mask_candidates_keep_min_floor():
    w = [np.ones(3, complex)]
    S = np.zeros((3, 3), complex)
    masks = oc.rf_mask_candidates(w, S, k_ir=0)
    assert all(m.sum() >= 1 for m in masks)
    assert len(masks) == 3


# ---------------------------------------------------------------------------
# phase-shifter priority and schedules

def test_ps_priority_ascending_magnitude():
    F_bar = np.array([[0.3, 0.1],
                      [0.05, 0.4]])
    mask = np.ones((2, 2), bool)
    assert oc.ps_priority(F_bar, mask) == [(1, 0), (0, 1), (0, 0), (1, 1)]


def test_ps_priority_skips_masked_entries():
    F_bar = np.array([[0.3, 0.1],
                      [0.05, 0.4]])
    mask = np.array([[True, False], [False, True]])
    assert oc.ps_priority(F_bar, mask) == [(0, 0), (1, 1)]


def test_ps_prefix_schedule_geometric_plus_pivot():
    # 20 shifters on, 4 columns -> top prefix 16, doubling below it
    sched = oc.ps_prefix_schedule(20, 4)
    assert sched == [1, 2, 4, 8, 16]
    refined = oc.ps_prefix_schedule(20, 4, refine_around=8)
    assert set(refined) == {1, 2, 4, 6, 7, 8, 9, 10, 16}
    assert refined == sorted(refined)


def test_ps_prefix_schedule_small_cases():
    assert oc.ps_prefix_schedule(3, 3) == []         # nothing can come off
    assert oc.ps_prefix_schedule(4, 3) == [1]
    assert oc.ps_prefix_schedule(0, 2) == []


def test_ps_mask_candidates_never_empty_live_column():
    rng = np.random.default_rng(1)
    F_bar = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    mask = np.ones((4, 2), bool)
    cands = oc.ps_mask_candidates(F_bar, mask)
    assert cands, "expected at least one candidate"
    for m, cand in cands:
        assert cand.sum(axis=0).min() >= 1
        assert (mask & ~cand).sum() == m              # exactly m entries removed
        assert np.all(cand <= mask)


def test_ps_mask_candidates_respect_existing_mask():
    F_bar = np.ones((3, 2))
    mask = np.array([[True, True], [True, False], [False, True]])
    for m, cand in oc.ps_mask_candidates(F_bar, mask):
        assert np.all(cand <= mask)
        # a column that was already dead may stay dead without vetoing the mask
        assert cand.sum(axis=0)[np.any(mask, axis=0)].min() >= 1


# ---------------------------------------------------------------------------
# trial search

def test_search_best_picks_cheapest_feasible():
    trials = [(np.array([True, True]), np.ones((2, 2), bool)),
              (np.array([True, False]), np.ones((2, 2), bool)),
              (np.array([False, True]), np.ones((2, 2), bool))]
    powers = {(True, True): 10.0, (True, False): 7.0, (False, True): 5.0}

    def evaluate(rf, ps):
        key = tuple(rf.tolist())
        return {"feasible": key != (False, True), "power": powers[key]}

    best, records = oc.search_best(trials, evaluate)
    assert best["power"] == 7.0
    assert tuple(best["rf_mask"].tolist()) == (True, False)
    assert len(records) == 3
    assert [r["power"] for r in records] == [10.0, 7.0, 5.0]


def test_search_best_all_infeasible():
    trials = [(np.array([True]), np.ones((1, 1), bool))]
    best, records = oc.search_best(trials, lambda rf, ps: {"feasible": False, "power": 1.0})
    assert best is None
    assert len(records) == 1


# ---------------------------------------------------------------------------
# mask grid text round trip

def test_mask_grid_round_trip():
    rng = np.random.default_rng(2)
    mask = rng.random((5, 3)) < 0.5
    text = oc.mask_grid_text(mask)
    assert np.array_equal(oc.mask_grid_parse(text), mask)
    assert text.count("\n") == 4


def test_mask_grid_parse_validation():
    with pytest.raises(ValueError):
        oc.mask_grid_parse("10\n1")
    with pytest.raises(ValueError):
        oc.mask_grid_parse("1x\n01")
    with pytest.raises(ValueError):
        oc.mask_grid_parse("   ")
