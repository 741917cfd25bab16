"""Alternating optimization driver tying the stages into full design schemes.

One alternating pass at a fixed hardware configuration runs: digital stage
(covariance SDR + rank-one recovery) -> analog stage (lifted SDR + Gaussian
randomization back to constant modulus) -> repeat. Every composite design is
re-verified from scratch; only exactly feasible designs are recorded, and the
best one by exact indicator-based power is returned. A randomization batch
with no feasible candidate is not fatal: the least-violating candidate still
moves the analog matrix and the next digital pass restores feasibility or the
previous best stands.

Schemes:
  no_onoff      alternating pass with all chains and shifters on
  rf_only       + trial configurations switching off low-power RF chains
  ps_only       + trial configurations switching off low-weight shifters
  joint         union of the rf_only and ps_only trial sets, plus the shifter
                search re-run at the best RF configuration; since the trial
                evaluations are deterministic, its candidate set contains
                every candidate the restricted schemes see
  digital_full  fully digital reference: one chain per antenna, no shifters
  fixed_pa      no_onoff with the power-amplifier model pinned to constant
                efficiency (beta = 0)
"""

import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import analog_stage, conic_ir, design_eval, digital_stage, onoff_control, \
    power_models, scenario

SCHEMES = ("no_onoff", "rf_only", "ps_only", "joint", "digital_full", "fixed_pa")


@dataclass
class SolveOptions:
    seed: int = 0
    outer_iters: int = 3          # alternating passes for the main configuration
    trial_outer_iters: int = 2    # alternating passes per on-off trial
    analog_iters: int = 6         # SCA iterations per analog stage call
    trial_analog_iters: int = 4
    digital_iters: int = digital_stage.SCA_MAX_ITER
    rel_tol: float = 1e-4         # stop when the relaxed power stalls
    n_randomize: int = analog_stage.RANDOMIZE_SAMPLES
    settings: conic_ir.SolveSettings = field(default_factory=conic_ir.SolveSettings)


@dataclass
class DesignResult:
    scheme: str
    status: str                   # converged / max_iter / infeasible
    F: np.ndarray = None
    w: list = None
    S: np.ndarray = None
    rf_mask: np.ndarray = None
    ps_mask: np.ndarray = None
    power: power_models.PowerBreakdown = None
    slacks: dict = None
    trace: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def feasible(self):
        return self.status in ("converged", "max_iter") and self.power is not None

    @property
    def total(self):
        return float("inf") if self.power is None else self.power.total


def _config_seed(opts, rf_mask, ps_mask, outer):
    tag = zlib.crc32(np.asarray(rf_mask, dtype=bool).tobytes()
                     + np.asarray(ps_mask, dtype=bool).tobytes())
    return [int(opts.seed), int(outer), int(tag)]


def masked_init(scn, rf_mask, ps_mask, seed):
    F = scenario.full_on_analog(scn.dims.n_tx, scn.dims.n_rf, seed)
    F = F * np.asarray(ps_mask, dtype=bool)
    F[:, ~np.asarray(rf_mask, dtype=bool)] = 0.0
    return F


def solve_masked(scn, rf_mask, ps_mask, opts, outer_iters=None, analog_iters=None,
                 F_init=None, scheme="custom"):
    """Alternating digital/analog pass at a fixed on-off configuration."""
    dims = scn.dims
    rf_mask = np.asarray(rf_mask, dtype=bool)
    ps_mask = np.asarray(ps_mask, dtype=bool) & rf_mask[None, :]
    outer_iters = opts.outer_iters if outer_iters is None else outer_iters
    analog_iters = opts.analog_iters if analog_iters is None else analog_iters
    act = np.nonzero(rf_mask)[0]

    F = masked_init(scn, rf_mask, ps_mask, opts.seed) if F_init is None \
        else np.asarray(F_init, dtype=complex) * ps_mask
    best = None
    trace = []
    meta = {"F_bar_star": None, "n_randomize_failed": 0, "outer": 0}
    status = "max_iter"

    for outer in range(1, outer_iters + 1):
        meta["outer"] = outer
        dres = digital_stage.sca_digital(scn, F, rf_mask=rf_mask,
                                         max_iter=opts.digital_iters,
                                         settings=opts.settings)
        if dres["status"] in ("infeasible", "numerical_failure") or not dres["trace"]:
            if best is None:
                return DesignResult(scheme=scheme, status="infeasible",
                                    rf_mask=rf_mask, ps_mask=ps_mask, trace=trace,
                                    meta=dict(meta, stage_status=dres["status"]))
            break
        try:
            cov = digital_stage.recover_rank_one(dres["R"], dres["S"], F, scn.h)
        except (digital_stage.DegenerateRecoveryError, AssertionError):
            break  # unusable stage output; stand on the best design so far
        F_n, w, S = design_eval.normalize_design(F, cov.w, cov.S)
        slk = design_eval.design_slacks(scn, F_n, w, S)
        if slk["worst"] >= -design_eval.FEAS_RTOL:
            pw = power_models.total_power(F_n, w, S, scn.hw)
            if best is None or pw.total < best["power"].total:
                best = {"F": F_n, "w": w, "S": S, "power": pw, "slacks": slk}
        trace.append(design_eval.relaxed_total_power(scn, F_n, w, S))
        if len(trace) > 1 and trace[-2] - trace[-1] < opts.rel_tol * max(abs(trace[-2]), 1e-12):
            status = "converged"
            break
        if outer == outer_iters:
            break
        ares = analog_stage.sca_analog(scn, F, w, S, rf_mask=rf_mask,
                                       ps_mask=ps_mask[:, act],
                                       max_iter=analog_iters, settings=opts.settings)
        if ares["R_f"] is None:
            break
        rnd = analog_stage.gaussian_randomize(
            scn, ares["R_f"], w, S, rf_mask=rf_mask, ps_mask=ps_mask[:, act],
            n_samples=opts.n_randomize,
            seed=_config_seed(opts, rf_mask, ps_mask, outer))
        if not rnd["ok"]:
            meta["n_randomize_failed"] += 1
        meta["F_bar_star"] = analog_stage.embed_analog(rnd["F_bar"], act, dims.n_rf)
        F = rnd["F"]

    if best is None:
        return DesignResult(scheme=scheme, status="infeasible", rf_mask=rf_mask,
                            ps_mask=ps_mask, trace=trace, meta=meta)
    return DesignResult(scheme=scheme, status=status, F=best["F"], w=best["w"],
                        S=best["S"], rf_mask=rf_mask, ps_mask=ps_mask,
                        power=best["power"], slacks=best["slacks"],
                        trace=trace, meta=meta)


def _cache_call(cache, key, fn):
    if cache is not None and key in cache:
        return cache[key]
    out = fn()
    if cache is not None:
        cache[key] = out
    return out


def _trial(scn, rf_mask, ps_mask, opts, cache, F_init):
    key = ("trial", rf_mask.tobytes(), ps_mask.tobytes())
    return _cache_call(cache, key, lambda: solve_masked(
        scn, rf_mask, ps_mask, opts, outer_iters=opts.trial_outer_iters,
        analog_iters=opts.trial_analog_iters, F_init=F_init))


def _baseline(scn, opts, cache):
    rf_full, ps_full = onoff_control.full_masks(scn.dims.n_tx, scn.dims.n_rf)
    key = ("baseline",)
    return _cache_call(cache, key, lambda: solve_masked(
        scn, rf_full, ps_full, opts, scheme="no_onoff"))


def _rf_search(scn, base, opts, cache):
    """Trial results for ascending-prefix RF switch-off configurations."""
    _, ps_full = onoff_control.full_masks(scn.dims.n_tx, scn.dims.n_rf)
    results = [base]
    if not base.feasible:
        return results
    for mask in onoff_control.rf_mask_candidates(base.w, base.S, scn.dims.k_ir):
        if mask.all():
            continue  # the all-on configuration is the baseline itself
        results.append(_trial(scn, mask, ps_full & mask[None, :], opts, cache,
                              F_init=base.F))
    return results


def _ps_search(scn, parent, opts, cache):
    """Trial results switching off shifter prefixes within parent's configuration."""
    results = [parent]
    if not parent.feasible:
        return results
    F_bar = parent.meta.get("F_bar_star")
    if F_bar is None:
        F_bar = parent.F  # no randomization ran; entry moduli still rank usage
    tried = set()
    best_m = None
    for round_ in range(2):
        cands = onoff_control.ps_mask_candidates(F_bar, parent.ps_mask,
                                                 refine_around=best_m)
        new = [(m, ps) for m, ps in cands if m not in tried]
        if not new:
            break
        for m, ps in new:
            tried.add(m)
            rec = _trial(scn, parent.rf_mask, ps, opts, cache, F_init=parent.F)
            rec.meta["ps_prefix"] = m
            results.append(rec)
        feas = [r for r in results if r.feasible]
        best = min(feas, key=lambda r: r.total)
        best_m = best.meta.get("ps_prefix")
        if best_m is None:
            break  # parent still wins; no neighborhood to refine
    return results


def _pick(scheme, results):
    feas = [r for r in results if r.feasible]
    if not feas:
        out = replace(results[0], scheme=scheme)
        out.status = "infeasible"
        return out
    best = min(feas, key=lambda r: r.total)
    out = replace(best, scheme=scheme)
    out.meta = dict(best.meta, n_trials=len(results),
                    trial_powers=[r.total for r in results])
    return out


def solve_instance(scn, scheme, opts=None, cache=None):
    """Best design for one scheme. A shared cache keeps trial evaluations
    identical across schemes, so restricted schemes are exact subsets of joint."""
    opts = opts or SolveOptions()
    if scheme not in SCHEMES:
        raise ValueError("unknown scheme %r; expected one of %s" % (scheme, (SCHEMES,)))
    if scheme == "digital_full":
        return _digital_full(scn, opts)
    if scheme == "fixed_pa":
        scn0 = replace(scn, hw=replace(scn.hw, beta_pa=0.0))
        out = _baseline(scn0, opts, None if cache is None else cache.setdefault("fixed_pa", {}))
        return replace(out, scheme="fixed_pa")
    base = _baseline(scn, opts, cache)
    if scheme == "no_onoff":
        return _pick("no_onoff", [base])
    if scheme == "rf_only":
        return _pick("rf_only", _rf_search(scn, base, opts, cache))
    if scheme == "ps_only":
        return _pick("ps_only", _ps_search(scn, base, opts, cache))
    # joint: RF prefixes, shifter prefixes at the full configuration, and
    # shifter prefixes again at the best RF configuration
    rf_recs = _rf_search(scn, base, opts, cache)
    results = list(rf_recs) + _ps_search(scn, base, opts, cache)[1:]
    feas_rf = [r for r in rf_recs if r.feasible]
    if feas_rf:
        best_rf = min(feas_rf, key=lambda r: r.total)
        if not best_rf.rf_mask.all():
            results += _ps_search(scn, best_rf, opts, cache)[1:]
    return _pick("joint", results)


def compare_schemes(scn, schemes=("no_onoff", "rf_only", "ps_only", "joint"),
                    opts=None):
    """All schemes on one instance, sharing baseline and trial evaluations."""
    opts = opts or SolveOptions()
    cache = {}
    return {s: solve_instance(scn, s, opts, cache=cache) for s in schemes}


def _digital_full(scn, opts):
    """Fully digital reference: identity analog stage, one chain per antenna,
    no shifter network; switch hardware only on the RF chains."""
    n_tx = scn.dims.n_tx
    scn_d = replace(scn, dims=replace(scn.dims, n_rf=n_tx))
    F = np.eye(n_tx, dtype=complex)
    dres = digital_stage.sca_digital(scn_d, F, max_iter=opts.digital_iters,
                                     settings=opts.settings)
    if dres["status"] in ("infeasible", "numerical_failure") or not dres["trace"]:
        return DesignResult(scheme="digital_full", status="infeasible",
                            meta={"stage_status": dres["status"]})
    try:
        cov = digital_stage.recover_rank_one(dres["R"], dres["S"], F, scn_d.h)
    except (digital_stage.DegenerateRecoveryError, AssertionError):
        return DesignResult(scheme="digital_full", status="infeasible",
                            meta={"stage_status": "recovery_failed"})
    F, w, S = design_eval.normalize_design(F, cov.w, cov.S)
    slk = design_eval.design_slacks(scn_d, F, w, S)
    if slk["worst"] < -design_eval.FEAS_RTOL:
        return DesignResult(scheme="digital_full", status="infeasible",
                            meta={"worst_slack": slk["worst"]})
    pw = power_models.total_power(F, w, S, scn_d.hw)
    pw = power_models.PowerBreakdown(
        p_pa=pw.p_pa, p_rf=pw.p_rf, p_ps=0.0,
        p_sw=scn_d.hw.p_sw * power_models.switch_count(n_tx, n_tx, has_ps_network=False),
        p_static=pw.p_static)
    status = "converged" if dres["status"] == "converged" else "max_iter"
    return DesignResult(scheme="digital_full", status=status, F=F, w=w, S=S,
                        rf_mask=np.ones(n_tx, dtype=bool), ps_mask=None,
                        power=pw, slacks=slk, trace=list(dres["trace"]),
                        meta={"architecture": "digital"})
