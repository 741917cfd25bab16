"""Power accounting: PA draw, on-off terms and their relaxation, EH model."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from iscap_hbf import power_models as pm
from iscap_hbf.scenario import HardwareConstants

HW = HardwareConstants()                     # 1.5 W cap, eta 0.38, beta 0.5
EH_REF = (0.02, 6400.0, 0.003)               # (saturation W, 1/W, turn-on W)

powers = st.lists(st.floats(0.0, 1.5), min_size=1, max_size=8)


# -- PA draw ------------------------------------------------------------------

def test_pa_power_at_saturation_single_antenna():
    # at the cap the efficiency is eta_max, so the draw is exactly P_max/eta_max
    got = pm.pa_power([1.5], HW)
    assert np.isclose(got, 1.5 / 0.38, rtol=1e-12)
    assert np.isclose(got, 3.9473684210526314, rtol=1e-12)


def test_pa_power_fixed_efficiency_is_linear():
    hw0 = HardwareConstants(beta_pa=0.0)
    p = [0.3, 0.7, 1.1]
    assert np.isclose(pm.pa_power(p, hw0), sum(p) / 0.38, rtol=1e-12)


def test_pa_power_zero_output_draws_nothing():
    assert pm.pa_power([0.0, 0.0], HW) == 0.0
    # the beta=1 corner (0 * 0^0) is defined as an off amplifier
    assert pm.pa_power([0.0], HardwareConstants(beta_pa=1.0)) == 0.0


def test_pa_power_off_antennas_contribute_nothing():
    assert np.isclose(pm.pa_power([0.5, 0.0, 0.5], HW),
                      pm.pa_power([0.5, 0.5], HW), rtol=1e-12)


def test_pa_power_rejects_negative_input():
    with pytest.raises(ValueError):
        pm.pa_power([-0.1], HW)


@given(powers, powers)
def test_pa_power_concave_in_outputs(x, y):
    n = min(len(x), len(y))
    x, y = np.array(x[:n]), np.array(y[:n])
    mid = pm.pa_power((x + y) / 2, HW)
    assert mid >= (pm.pa_power(x, HW) + pm.pa_power(y, HW)) / 2 - 1e-12


# -- indicator relaxation ------------------------------------------------------

def test_indicator_relax_endpoints():
    assert pm.indicator_relax(0.0, 1e-4) == 0.0
    assert np.isclose(pm.indicator_relax(1.0, 1e-4), 1.0, rtol=1e-15)
    assert np.isclose(pm.indicator_relax(1.0, 0.37), 1.0, rtol=1e-15)


def test_indicator_relax_midpoint_value():
    # log(5001)/log(10001), cross-checked by independent evaluation
    assert np.isclose(pm.indicator_relax(0.5, 1e-4), 0.9247541737480336, rtol=1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(1e-6, 1e-1))
def test_indicator_relax_monotone_and_bounded(x1, x2, eps):
    lo, hi = min(x1, x2), max(x1, x2)
    v_lo, v_hi = pm.indicator_relax(lo, eps), pm.indicator_relax(hi, eps)
    assert 0.0 <= v_lo <= v_hi <= 1.0 + 1e-12


def test_indicator_relax_sharpens_toward_binary():
    vals = [pm.indicator_relax(0.3, e) for e in (1e-2, 1e-4, 1e-6)]
    assert vals[0] < vals[1] < vals[2] < 1.0


def test_indicator_relax_rejects_bad_input():
    with pytest.raises(ValueError):
        pm.indicator_relax(-0.1, 1e-4)
    with pytest.raises(ValueError):
        pm.indicator_relax(0.5, 0.0)


# -- exact on-off terms --------------------------------------------------------

def test_rf_power_exact_counts_active_chains():
    assert pm.rf_power_exact(np.zeros(16), 0.5) == 0.0
    v = np.zeros(16)
    v[[1, 5, 9]] = 0.2
    assert np.isclose(pm.rf_power_exact(v, 0.5), 1.5, rtol=1e-14)


def test_rf_power_exact_tolerance_separates_roundoff():
    assert pm.rf_power_exact([1e-10, 1e-12], 0.5) == 0.0
    assert pm.rf_power_exact([1e-8], 0.5) == 0.5


def test_ps_power_exact_counts_nonzero_entries():
    F = np.zeros((4, 2), dtype=complex)
    F[0, 0] = 0.5
    F[3, 1] = 0.5j
    assert np.isclose(pm.ps_power_exact(F, 0.042), 0.084, rtol=1e-14)


# -- relaxed on-off terms --------------------------------------------------------

def test_relaxed_power_zero_weights():
    assert pm.rf_power_relaxed(np.zeros(5), 0.5, 1e-4) == 0.0


def test_relaxed_power_unit_weight():
    assert np.isclose(pm.rf_power_relaxed([1.0], 0.5, 1e-4), 0.5, rtol=1e-12)


def test_relaxed_power_approaches_exact_for_binary_weights():
    w = np.array([1.0, 0.0, 1.0, 1.0])
    exact = 0.5 * 3
    for eps, tol in ((1e-2, 0.2), (1e-4, 1e-3), (1e-8, 1e-7)):
        assert abs(pm.rf_power_relaxed(w, 0.5, eps) - exact) <= exact * tol


def test_relaxed_power_rejects_negative_weights():
    with pytest.raises(ValueError):
        pm.rf_power_relaxed([-1e-3], 0.5, 1e-4)


# -- energy harvesting ----------------------------------------------------------

def test_eh_dc_zero_in_zero_out_exact():
    assert pm.eh_dc(0.0, *EH_REF) == 0.0


def test_eh_dc_saturates_at_ceiling():
    # far past the knee (100x the turn-on power) the curve sits at the ceiling
    assert abs(pm.eh_dc(100 * EH_REF[2], *EH_REF) - EH_REF[0]) <= 1e-6
    assert pm.eh_dc(10.0, *EH_REF) <= EH_REF[0] + 1e-15


def test_eh_dc_midpoint_at_turn_on_power():
    # logistic midpoint: input b gives half the ceiling, up to the
    # zero-in-zero-out correction Omega ~ 4.6e-9
    assert abs(pm.eh_dc(EH_REF[2], *EH_REF) - 0.01) <= 1e-8


@given(st.floats(1e-9, 2e-3), st.floats(1.1, 2.0))
def test_eh_dc_strictly_increasing_below_saturation(p, factor):
    # past a*p ~ 36 the curve is flat at the ceiling in double precision, so
    # strictness is asserted where floating point can still resolve it
    assert pm.eh_dc(p * factor, *EH_REF) > pm.eh_dc(p, *EH_REF)


@given(st.floats(0.0, 1.0), st.floats(1.0, 10.0))
def test_eh_dc_nondecreasing_everywhere(p, factor):
    assert pm.eh_dc(p * factor, *EH_REF) >= pm.eh_dc(p, *EH_REF)


def test_eh_dc_rejects_negative_input():
    with pytest.raises(ValueError):
        pm.eh_dc(-1e-6, *EH_REF)


def test_eh_threshold_invert_round_trip_grid():
    for g in np.geomspace(1e-9, 0.0199, 25):
        p = pm.eh_threshold_invert(g, *EH_REF)
        assert p > 0
        assert np.isclose(pm.eh_dc(p, *EH_REF), g, rtol=1e-10)


@given(st.floats(1e-8, 0.0195))
def test_eh_invert_then_forward_is_identity(g):
    assert np.isclose(pm.eh_dc(pm.eh_threshold_invert(g, *EH_REF), *EH_REF),
                      g, rtol=1e-10)


def test_eh_threshold_invert_midpoint():
    # half the ceiling maps back to (essentially) the turn-on power
    assert np.isclose(pm.eh_threshold_invert(0.01, *EH_REF), 0.003, rtol=1e-6)


def test_eh_threshold_invert_reference_requirement_is_finite():
    p = pm.eh_threshold_invert(0.0006309573444801933, *EH_REF)  # -2 dBm
    assert 0.0 < p < 0.003


def test_eh_threshold_invert_rejects_unreachable():
    with pytest.raises(ValueError):
        pm.eh_threshold_invert(0.02, *EH_REF)
    with pytest.raises(ValueError):
        pm.eh_threshold_invert(0.0, *EH_REF)


# -- assembly -------------------------------------------------------------------

def test_chain_powers_definition():
    w = [np.array([1.0, 0.0]), np.array([0.0, 2.0j])]
    S = np.diag([0.25, 0.5])
    assert np.allclose(pm.chain_powers(w, S), [1.25, 4.5], rtol=1e-14)


def test_switch_count_reference_architecture():
    assert pm.switch_count(32, 16) == 528
    assert np.isclose(1e-3 * pm.switch_count(32, 16), 0.528)
    assert pm.switch_count(32, 16, has_ps_network=False) == 16


def test_total_power_all_off_is_overhead_only():
    hw = HW
    F = np.zeros((4, 2), dtype=complex)
    pw = pm.total_power(F, [np.zeros(2, complex)], np.zeros((2, 2)), hw)
    assert pw.p_pa == pw.p_rf == pw.p_ps == 0.0
    assert np.isclose(pw.total, hw.p_sw * pm.switch_count(4, 2) + hw.p_static)


def test_total_power_parts_sum_to_total():
    rng = np.random.default_rng(0)
    F = (rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))) / 4
    w = [rng.standard_normal(2) + 1j * rng.standard_normal(2)]
    S = np.eye(2) * 0.1
    pw = pm.total_power(F, w, S, HW)
    assert np.isclose(pw.total, pw.p_pa + pw.p_rf + pw.p_ps + pw.p_sw + pw.p_static,
                      rtol=1e-15)


def test_total_power_reports_offending_antenna():
    F = np.eye(3, 2, dtype=complex)
    w = [np.array([10.0, 0.0], dtype=complex)]
    with pytest.raises(ValueError, match="antenna 0"):
        pm.total_power(F, w, np.zeros((2, 2)), HW)


def test_power_breakdown_csv_row_round_trip():
    pw = pm.PowerBreakdown(1.0, 0.5, 0.25, 0.125, 10.0)
    vals = [float(x) for x in pw.to_csv_row().split(",")]
    assert vals == [1.0, 0.5, 0.25, 0.125, 10.0, 11.875]
    assert pw.csv_header().count(",") == 5
