"""Alternating-optimization driver: masked solves, schemes, candidate-set nesting."""

import numpy as np
import pytest

from iscap_hbf import ao_driver as ao, design_eval, onoff_control as oc, \
    power_models as pm, scenario as sc
from dataclasses import replace


@pytest.fixture(scope="module")
def compact_scn():
    return sc.desk_scenario(0, dims=sc.COMPACT_DIMS)


FAST = ao.SolveOptions(outer_iters=1, trial_outer_iters=1)


def _check_exact(scn, res):
    # the recorded design must be exactly feasible and exactly priced when
    # recomputed from nothing but the returned arrays
    slk = design_eval.design_slacks(scn, res.F, res.w, res.S)
    assert slk["worst"] >= -design_eval.FEAS_RTOL
    pw = pm.total_power(res.F, res.w, res.S, scn.hw)
    assert pw.total == res.power.total
    assert pw.p_pa == res.power.p_pa


# ---------------------------------------------------------------------------
# solve_masked

def test_solve_masked_full_on(compact_scn):
    rf, ps = oc.full_masks(compact_scn.dims.n_tx, compact_scn.dims.n_rf)
    res = ao.solve_masked(compact_scn, rf, ps, ao.SolveOptions(outer_iters=2))
    assert res.feasible
    assert res.status in ("converged", "max_iter")
    assert res.trace
    assert res.rf_mask.all()
    _check_exact(compact_scn, res)
    # constant-modulus analog entries everywhere (full-on configuration)
    assert np.allclose(np.abs(res.F), 1.0 / np.sqrt(compact_scn.dims.n_tx), rtol=1e-12)


def test_solve_masked_deterministic(compact_scn):
    rf, ps = oc.full_masks(compact_scn.dims.n_tx, compact_scn.dims.n_rf)
    a = ao.solve_masked(compact_scn, rf, ps, FAST)
    b = ao.solve_masked(compact_scn, rf, ps, FAST)
    assert a.feasible and b.feasible
    assert np.array_equal(a.F, b.F)
    assert np.array_equal(a.S, b.S)
    assert a.total == b.total


def test_solve_masked_respects_rf_mask(compact_scn):
    rf = np.array([True, True, False])
    ps = np.ones((compact_scn.dims.n_tx, compact_scn.dims.n_rf), bool)
    res = ao.solve_masked(compact_scn, rf, ps, FAST)
    if not res.feasible:
        pytest.skip("masked configuration infeasible for this seed")
    assert np.all(res.F[:, 2] == 0.0)
    for w in res.w:
        assert w[2] == 0.0
    _check_exact(compact_scn, res)


def test_solve_masked_infeasible_instance(compact_scn):
    thr = sc.Thresholds(sinr_min=compact_scn.thresholds.sinr_min * 1e12,
                        crb_max=compact_scn.thresholds.crb_max,
                        eh_dc_min=compact_scn.thresholds.eh_dc_min)
    bad = replace(compact_scn, thresholds=thr)
    rf, ps = oc.full_masks(bad.dims.n_tx, bad.dims.n_rf)
    res = ao.solve_masked(bad, rf, ps, FAST)
    assert res.status == "infeasible"
    assert not res.feasible
    assert res.total == float("inf")


# ---------------------------------------------------------------------------
# schemes

def test_unknown_scheme_raises(compact_scn):
    with pytest.raises(ValueError):
        ao.solve_instance(compact_scn, "everything_on_fire")


def test_digital_full_architecture(compact_scn):
    res = ao.solve_instance(compact_scn, "digital_full", FAST)
    assert res.feasible
    assert res.scheme == "digital_full"
    assert res.power.p_ps == 0.0
    assert res.power.p_sw == compact_scn.hw.p_sw * compact_scn.dims.n_tx
    assert res.ps_mask is None
    assert np.array_equal(res.F, np.eye(compact_scn.dims.n_tx, dtype=complex))
    for w in res.w:
        assert w.shape == (compact_scn.dims.n_tx,)


def test_fixed_pa_scheme(compact_scn):
    res = ao.solve_instance(compact_scn, "fixed_pa", FAST)
    assert res.feasible
    assert res.scheme == "fixed_pa"
    # constant-efficiency amplifier: draw is output power over eta_max
    p_out = design_eval.per_antenna_power(res.F, res.w, res.S)
    assert res.power.p_pa == pytest.approx(p_out.sum() / compact_scn.hw.eta_max, rel=1e-12)


def test_compare_schemes_nesting(compact_scn):
    out = ao.compare_schemes(compact_scn, opts=FAST)
    assert set(out) == {"no_onoff", "rf_only", "ps_only", "joint"}
    for name, res in out.items():
        assert res.scheme == name
        if res.feasible:
            _check_exact(compact_scn, res)
    assert out["no_onoff"].feasible
    # the joint candidate set contains every candidate the restricted schemes
    # see, so with shared trial evaluations its optimum can never be worse
    floor = min(out["no_onoff"].total, out["rf_only"].total, out["ps_only"].total)
    assert out["joint"].total <= floor + 1e-8
    assert out["rf_only"].total <= out["no_onoff"].total + 1e-8
    assert out["ps_only"].total <= out["no_onoff"].total + 1e-8
    assert out["joint"].meta["n_trials"] >= 2


def test_pick_propagates_infeasible(compact_scn):
    thr = sc.Thresholds(sinr_min=compact_scn.thresholds.sinr_min * 1e12,
                        crb_max=compact_scn.thresholds.crb_max,
                        eh_dc_min=compact_scn.thresholds.eh_dc_min)
    bad = replace(compact_scn, thresholds=thr)
    res = ao.solve_instance(bad, "rf_only", FAST)
    assert res.scheme == "rf_only"
    assert res.status == "infeasible"
    assert not res.feasible
