"""Exact, from-scratch evaluation of a hybrid design against every physical constraint.

Everything here recomputes from (F, {w_k}, S) and the scenario data alone:
received SINRs, the trace-CRB, harvested DC power, and per-antenna output
power. Used for feasibility certification of randomization candidates, on-off
trials, and final results, independent of any solver-reported values.
"""

import numpy as np

from . import array_sensing, power_models

# A design counts as feasible when the worst relative violation is at most this.
FEAS_RTOL = 1e-6


def tx_covariance(F, w_list, S):
    """Transmit covariance F*(sum_k w_k w_k^H + S)*F^H at the antennas."""
    F = np.asarray(F, dtype=complex)
    Rtot = np.asarray(S, dtype=complex).copy()
    for w in w_list:
        Rtot += np.outer(w, np.conj(w))
    return F @ Rtot @ F.conj().T


def per_antenna_power(F, w_list, S):
    """Real diagonal of the transmit covariance (per-antenna radiated power)."""
    return np.maximum(np.real(np.diag(tx_covariance(F, w_list, S))), 0.0)


def exact_sinr(h_rows, F, w_list, S, noise_ir):
    """Received SINR per information receiver, recomputed from the signal model."""
    h_rows = np.atleast_2d(np.asarray(h_rows, dtype=complex))
    F = np.asarray(F, dtype=complex)
    k_ir = h_rows.shape[0]
    out = np.zeros(k_ir)
    S = np.asarray(S, dtype=complex)
    for k in range(k_ir):
        eff = F.conj().T @ h_rows[k]          # channel seen from the chain space
        gains = np.array([np.abs(np.vdot(eff, w)) ** 2 for w in w_list])
        sense = float(np.real(eff.conj() @ S @ eff))
        interf = float(np.sum(gains) - gains[k]) + max(sense, 0.0)
        out[k] = gains[k] / (interf + noise_ir[k])
    return out


def eh_inputs(d_rows, F, w_list, S):
    """Received RF power at each energy receiver."""
    d_rows = np.atleast_2d(np.asarray(d_rows, dtype=complex))
    Rx = tx_covariance(F, w_list, S)
    return np.maximum(np.real(np.einsum("ji,ik,jk->j", d_rows.conj(), Rx, d_rows)), 0.0)


def exact_crb(scn, F, w_list, S):
    """Trace-CRB of the design; raises UnidentifiableError on a singular FIM."""
    ss = array_sensing.SteeringSet(scn.theta, scn.beta_coeff, scn.dims.n_tx, scn.dims.n_rx)
    Rx = tx_covariance(F, w_list, S)
    M = array_sensing.build_fim(ss, Rx, scn.dims.dwell, scn.noise_sense)
    return array_sensing.crb_trace(M)


def design_slacks(scn, F, w_list, S):
    """Per-constraint achieved-vs-required report with relative slacks.

    slack >= 0 means satisfied. Returns a dict with one entry per constraint
    class present in the scenario plus 'worst' (most negative slack, 0 if all
    satisfied ... sign kept, so worst < 0 indicates a violation).
    """
    report = {}
    slacks = []
    if scn.dims.k_ir:
        sinr = exact_sinr(scn.h, F, w_list, S, scn.noise_ir)
        rel = (sinr - scn.thresholds.sinr_min) / scn.thresholds.sinr_min
        report["sinr"] = {"achieved": sinr.tolist(),
                          "required": np.asarray(scn.thresholds.sinr_min).tolist(),
                          "slack_rel": rel.tolist()}
        slacks.append(rel.min())
    if scn.dims.k_s:
        try:
            crb = exact_crb(scn, F, w_list, S)
        except array_sensing.UnidentifiableError:
            crb = float("inf")
        rel = (scn.thresholds.crb_max - crb) / scn.thresholds.crb_max
        report["crb"] = {"achieved": crb, "required": scn.thresholds.crb_max, "slack_rel": rel}
        slacks.append(rel)
    if scn.dims.k_er:
        p_in = eh_inputs(scn.d, F, w_list, S)
        dc = np.array([power_models.eh_dc(p, *scn.eh_params[j]) for j, p in enumerate(p_in)])
        req = np.asarray(scn.thresholds.eh_dc_min)
        rel = (dc - req) / req
        report["eh"] = {"achieved": dc.tolist(), "required": req.tolist(),
                        "rf_input": p_in.tolist(), "slack_rel": rel.tolist()}
        slacks.append(rel.min())
    p_out = per_antenna_power(F, w_list, S)
    rel = (scn.hw.p_ant_max - p_out) / scn.hw.p_ant_max
    report["antenna_power"] = {"achieved": p_out.tolist(), "required": scn.hw.p_ant_max,
                               "slack_rel": rel.tolist()}
    slacks.append(rel.min())
    report["worst"] = float(min(slacks))
    return report


def is_feasible(scn, F, w_list, S, rtol=FEAS_RTOL):
    return design_slacks(scn, F, w_list, S)["worst"] >= -rtol


def eh_input_thresholds(scn):
    """Receive-power thresholds equivalent to the harvested-DC requirements."""
    return np.array([
        power_models.eh_threshold_invert(scn.thresholds.eh_dc_min[j], *scn.eh_params[j])
        for j in range(scn.dims.k_er)])


def relaxed_total_power(scn, F, w_list, S, n_switches=None):
    """Indicator-relaxed total power of a concrete design.

    This is the quantity the alternating loop drives down (exact activation
    counting is power_models.total_power): non-linear PA draw plus the smooth
    log surrogates of the RF-chain and phase-shifter on-off terms, plus the
    constant switch and static draws.
    """
    hw = scn.hw
    pa = power_models.pa_power(per_antenna_power(F, w_list, S), hw)
    v = power_models.chain_powers(w_list, S)
    rf = power_models.rf_power_relaxed(v, hw.p_rf, hw.eps_indicator)
    c = np.abs(np.asarray(F, dtype=complex)) ** 2
    ps = power_models.ps_power_relaxed(c.ravel(), hw.p_ps, hw.eps_indicator)
    if n_switches is None:
        n_switches = power_models.switch_count(scn.dims.n_tx, scn.dims.n_rf)
    return pa + rf + ps + hw.p_sw * n_switches + hw.p_static


def normalize_design(F, w_list, S):
    """Zero digital rows on chains whose analog column is entirely zero.

    A chain with F[:, n] = 0 has no path to the antennas, so clearing w_k[n]
    and row/column n of S changes nothing physically while making the per-chain
    power accounting reflect the chains actually in use. Exact in floating
    point because the cleared column is exactly zero.
    """
    F = np.asarray(F, dtype=complex)
    dead = np.nonzero(~np.any(np.abs(F) > 0, axis=0))[0]
    if dead.size == 0:
        return F, [np.asarray(w, dtype=complex) for w in w_list], np.asarray(S, dtype=complex)
    w_out = []
    for w in w_list:
        w = np.asarray(w, dtype=complex).copy()
        w[dead] = 0.0
        w_out.append(w)
    S = np.asarray(S, dtype=complex).copy()
    S[dead, :] = 0.0
    S[:, dead] = 0.0
    return F, w_out, S
