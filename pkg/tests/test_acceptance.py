"""End-to-end acceptance suite: one pass/fail check per shipped guarantee.

Each test states its tolerance inline and recomputes everything it asserts
from scratch, so a green run here certifies the public behavior of the
package rather than internal intermediates. The heavier checks share
module-scoped fixtures; on a single laptop-class core the whole module runs
in several minutes, dominated by the alternating-optimization fixtures.
"""

import csv
import time
from dataclasses import replace

import cvxpy as cp
import numpy as np
import pytest

from iscap_hbf import analog_stage as an, ao_driver as ao, array_sensing as asn, \
    cli, design_eval, digital_stage as dg, power_models as pm, scenario as sc

import oracles


# ---------------------------------------------------------------------------
# shared fixtures (heavy solves, module scope)

@pytest.fixture(scope="module")
def desk_stage_traces():
    """Digital stage to convergence plus a capped analog stage on ten desk seeds."""
    runs = []
    for seed in range(10):
        scn = sc.desk_scenario(seed)
        F0 = sc.full_on_analog(scn.dims.n_tx, scn.dims.n_rf, seed)
        dres = dg.sca_digital(scn, F0)
        try:
            cov = dg.recover_rank_one(dres["R"], dres["S"], F0, scn.h)
            w, S = cov.w, cov.S
        except dg.DegenerateRecoveryError:
            _, w, S = sc.reference_design(scn)
        ares = an.sca_analog(scn, F0, w, S, max_iter=3, rel_tol=1e-3)
        runs.append((seed, dres, ares))
    return runs


@pytest.fixture(scope="module")
def compact_scheme_results():
    scn = sc.desk_scenario(0, dims=sc.COMPACT_DIMS)
    out = ao.compare_schemes(scn)
    light = ao.SolveOptions(outer_iters=2, trial_outer_iters=1)
    extra = {s: ao.solve_instance(scn, s, light) for s in ("digital_full", "fixed_pa")}
    return scn, out, extra


@pytest.fixture(scope="module")
def beta_regression():
    """Joint scheme with the curved versus the constant amplifier model."""
    light = ao.SolveOptions(outer_iters=2, trial_outer_iters=1)
    runs = []
    for seed in (0, 1):
        scn = sc.desk_scenario(seed, dims=sc.COMPACT_DIMS)
        scn0 = replace(scn, hw=replace(scn.hw, beta_pa=0.0))
        r_curved = ao.solve_instance(scn, "joint", light, cache={})
        r_flat = ao.solve_instance(scn0, "joint", light, cache={})
        runs.append((seed, scn, r_curved, scn0, r_flat))
    return runs


@pytest.fixture(scope="module")
def sweep_grids(tmp_path_factory):
    base = tmp_path_factory.mktemp("sweeps")
    grids = {}
    for axis, values in (("sinr_db", [0.0, 1.0, 3.0, 5.0]),
                         ("crb_max", [0.3, 0.5, 1.0]),
                         ("eh_dbm", [0.0, 2.0, 5.0])):
        spec = cli.SweepSpec(axis=axis, values=values, schemes=["no_onoff"],
                             seeds=[0, 1], relative=True,
                             options=ao.SolveOptions(outer_iters=1))
        path = base / (axis + ".csv")
        code = cli.run_sweep(spec, str(path))
        rows = list(csv.DictReader(path.read_text().splitlines()[1:]))
        grids[axis] = (code, values, rows)
    return grids


# ---------------------------------------------------------------------------
# 1. Fisher information against a finite-difference oracle

def test_criterion_01_fim_matches_finite_difference_oracle():
    # single target, 8x8 arrays, relative Frobenius error <= 1e-3, < 5 s
    t0 = time.monotonic()
    rng = np.random.default_rng(0)
    theta = np.array([0.35])
    beta = np.array([0.8 * np.exp(1j * 0.6)])
    Rx = oracles.random_psd(rng, 8, scale=0.3)
    ss = asn.SteeringSet(theta, beta, 8, 8)
    M = asn.build_fim(ss, Rx, 12, 0.3).M
    Mo = oracles.fd_fim(theta, beta, 8, 8, Rx, 12, 0.3)
    rel = np.linalg.norm(M - Mo) / np.linalg.norm(Mo)
    assert rel <= 1e-3, "relative Frobenius error %.3e" % rel
    assert time.monotonic() - t0 < 5.0


# ---------------------------------------------------------------------------
# 2. Schur-slack encoding of the trace of the inverse

def test_criterion_02_schur_slacks_equal_trace_inverse():
    # 20 random positive definite matrices, sizes 3..9, relative 1e-5, < 30 s
    t0 = time.monotonic()
    rng = np.random.default_rng(1)
    for trial in range(20):
        m = int(rng.integers(3, 10))
        A = rng.standard_normal((m, m))
        M = A @ A.T + (0.2 + 0.05 * trial) * np.eye(m)
        tau, cons = asn.schur_crb_constraints(cp.Constant(M), crb_max=1e9)
        prob = cp.Problem(cp.Minimize(cp.sum(tau)), cons)
        prob.solve(solver="CLARABEL")
        assert prob.status == "optimal"
        ref = float(np.trace(np.linalg.inv(M)))
        assert abs(prob.value - ref) <= 1e-5 * abs(ref), \
            "size %d: %.10g vs %.10g" % (m, prob.value, ref)
    assert time.monotonic() - t0 < 30.0


# ---------------------------------------------------------------------------
# 3. rank-one beam recovery invariants

def test_criterion_03_rank_one_recovery_invariants():
    # 50 random covariance tuples: total covariance and per-user beam gains
    # preserved to 1e-10 relative, recovered sensing covariance eigenvalues
    # >= -1e-8, < 10 s
    t0 = time.monotonic()
    rng = np.random.default_rng(2)
    for _ in range(50):
        n_rf = int(rng.integers(2, 6))
        n_tx = n_rf + int(rng.integers(0, 3))
        k = int(rng.integers(1, n_rf + 1))
        F = (rng.standard_normal((n_tx, n_rf))
             + 1j * rng.standard_normal((n_tx, n_rf))) / np.sqrt(n_tx)
        h = rng.standard_normal((k, n_tx)) + 1j * rng.standard_normal((k, n_tx))
        bar_R = []
        for _ in range(k):
            r = int(rng.integers(1, 3))
            Ak = rng.standard_normal((n_rf, r)) + 1j * rng.standard_normal((n_rf, r))
            bar_R.append(Ak @ Ak.conj().T)
        B = rng.standard_normal((n_rf, n_rf)) + 1j * rng.standard_normal((n_rf, n_rf))
        bar_S = B @ B.conj().T
        cov = dg.recover_rank_one(bar_R, bar_S, F, h)

        total_in = bar_S + sum(bar_R)
        total_out = cov.S + sum(np.outer(w, np.conj(w)) for w in cov.w)
        assert np.abs(total_out - total_in).max() <= 1e-10 * np.abs(total_in).max()
        for i in range(k):
            heff = F.conj().T @ h[i]
            g_in = float(np.real(heff.conj() @ bar_R[i] @ heff))
            g_out = float(np.abs(heff.conj() @ cov.w[i]) ** 2)
            assert abs(g_out - g_in) <= 1e-10 * max(abs(g_in), 1e-30)
        assert np.linalg.eigvalsh(cov.S).min() >= -1e-8
    assert time.monotonic() - t0 < 10.0


# ---------------------------------------------------------------------------
# 4. both SCA stages descend monotonically on desk instances

def test_criterion_04_sca_traces_monotone_on_desk_instances(desk_stage_traces):
    # ten seeds, 8/8/4 antennas/chains with 2 users, 1 harvester, 1 target:
    # every recorded step <= previous + 1e-6, both stages stop within 50
    for seed, dres, ares in desk_stage_traces:
        assert dres["trace"], "seed %d: digital stage produced no iterate" % seed
        assert dres["iterations"] <= 50
        for a, b in zip(dres["trace"], dres["trace"][1:]):
            assert b <= a + 1e-6, "seed %d digital ascent %.3e" % (seed, b - a)
        assert ares["trace"], "seed %d: analog stage produced no iterate" % seed
        assert ares["iterations"] <= 50
        for a, b in zip(ares["trace"], ares["trace"][1:]):
            assert b <= a + 1e-6, "seed %d analog ascent %.3e" % (seed, b - a)


# ---------------------------------------------------------------------------
# 5. every returned design is exactly feasible when recomputed from scratch

def test_criterion_05_returned_designs_exactly_feasible(compact_scheme_results,
                                                        beta_regression):
    scn, out, extra = compact_scheme_results
    checked = 0
    for res in out.values():
        if not res.feasible:
            continue
        slk = design_eval.design_slacks(scn, res.F, res.w, res.S)
        assert slk["worst"] >= -1e-6, "%s: slack %.3e" % (res.scheme, slk["worst"])
        pw = pm.total_power(res.F, res.w, res.S, scn.hw)
        assert pw.total == pytest.approx(res.total, rel=1e-12)
        checked += 1
    # architecture variants evaluate on their own scenario variant
    dig = extra["digital_full"]
    if dig.feasible:
        scn_d = replace(scn, dims=replace(scn.dims, n_rf=scn.dims.n_tx))
        slk = design_eval.design_slacks(scn_d, dig.F, dig.w, dig.S)
        assert slk["worst"] >= -1e-6
        # no shifter network in this architecture: switch gear on chains only
        assert dig.power.p_ps == 0.0
        assert dig.power.p_sw == pytest.approx(scn.hw.p_sw * scn.dims.n_tx)
        parts = dig.power.p_pa + dig.power.p_rf + dig.power.p_sw + dig.power.p_static
        assert dig.total == pytest.approx(parts, rel=1e-12)
        checked += 1
    fixed = extra["fixed_pa"]
    if fixed.feasible:
        scn_f = replace(scn, hw=replace(scn.hw, beta_pa=0.0))
        slk = design_eval.design_slacks(scn_f, fixed.F, fixed.w, fixed.S)
        assert slk["worst"] >= -1e-6
        assert pm.total_power(fixed.F, fixed.w, fixed.S, scn_f.hw).total \
            == pytest.approx(fixed.total, rel=1e-12)
        checked += 1
    for _, scn_c, r_curved, scn0, r_flat in beta_regression:
        for s, r in ((scn_c, r_curved), (scn0, r_flat)):
            if not r.feasible:
                continue
            assert design_eval.design_slacks(s, r.F, r.w, r.S)["worst"] >= -1e-6
            assert pm.total_power(r.F, r.w, r.S, s.hw).total \
                == pytest.approx(r.total, rel=1e-12)
            checked += 1
    assert checked >= 6, "too few feasible designs to certify (%d)" % checked


# ---------------------------------------------------------------------------
# 6. the joint search never loses to its restricted variants

def test_criterion_06_joint_never_worse_than_restricted(compact_scheme_results):
    _, out, _ = compact_scheme_results
    for s in ("no_onoff", "rf_only", "ps_only", "joint"):
        assert out[s].feasible, "%s came back infeasible" % s
    floor = min(out["no_onoff"].total, out["rf_only"].total, out["ps_only"].total)
    assert out["joint"].total <= floor + 1e-8
    # the restricted searches extend the all-on baseline, never regress it
    assert out["rf_only"].total <= out["no_onoff"].total + 1e-8
    assert out["ps_only"].total <= out["no_onoff"].total + 1e-8


# ---------------------------------------------------------------------------
# 7. sweep curves: monotone along every tightening axis, SINR plateau

def test_criterion_07_sweep_monotone_and_plateau(sweep_grids):
    for axis, (code, values, rows) in sweep_grids.items():
        assert code == 0, "%s sweep reported failure" % axis
        assert all(r["status"] in ("converged", "max_iter") for r in rows), axis
        means = {}
        for r in rows:
            means[float(r["value"])] = float(r["mean_total_w"])
        # traverse loose -> tight; mean power must not decrease (tol 1e-6 W)
        loose_to_tight = sorted(values) if axis != "crb_max" \
            else sorted(values, reverse=True)
        seq = [means[v] for v in loose_to_tight]
        for a, b in zip(seq, seq[1:]):
            assert b >= a - 1e-6, "%s: %.8f -> %.8f" % (axis, a, b)
    # with the requirement far below what the bound-driven design already
    # delivers, the two loosest SINR cells sit on a plateau (< 1% apart)
    _, values, rows = sweep_grids["sinr_db"]
    means = {float(r["value"]): float(r["mean_total_w"]) for r in rows}
    v0, v1 = sorted(values)[:2]
    assert abs(means[v1] - means[v0]) < 0.01 * means[v0]


# ---------------------------------------------------------------------------
# 8. the curved amplifier model switches off at least as many antennas

def test_criterion_08_curved_pa_zeroes_at_least_as_many_antennas(beta_regression):
    for seed, _, r_curved, _, r_flat in beta_regression:
        assert r_curved.feasible and r_flat.feasible, "seed %d infeasible" % seed
        z_curved = int(np.sum(design_eval.per_antenna_power(
            r_curved.F, r_curved.w, r_curved.S) <= pm.ACTIVATION_TOL))
        z_flat = int(np.sum(design_eval.per_antenna_power(
            r_flat.F, r_flat.w, r_flat.S) <= pm.ACTIVATION_TOL))
        assert z_curved >= z_flat, "seed %d: %d < %d" % (seed, z_curved, z_flat)


# ---------------------------------------------------------------------------
# 9. harvester model unit guarantees

def test_criterion_09_harvester_model_guarantees():
    for m_sat, a, b in ((0.02, 6400.0, 0.003), (0.05, 3000.0, 0.005),
                        (0.004, 12000.0, 0.001)):
        assert pm.eh_dc(0.0, m_sat, a, b) == 0.0                       # exact
        assert abs(pm.eh_dc(100.0 * b, m_sat, a, b) - m_sat) <= 1e-6   # saturation
        for p in np.geomspace(1e-8, b, 15):
            gam = pm.eh_dc(p, m_sat, a, b)
            back = pm.eh_threshold_invert(gam, m_sat, a, b)
            assert abs(back - p) <= 1e-10 * p                          # round trip


# ---------------------------------------------------------------------------
# 10. bitwise reproducibility of the experiment front end

def test_criterion_10_sweep_reproducible_byte_for_byte(tmp_path):
    cfg = {"axis": "sinr_db", "values": [0.0, 2.0], "relative": True,
           "schemes": ["no_onoff"], "seeds": [0],
           "dims": {"n_tx": 6, "n_rx": 6, "n_rf": 3, "k_ir": 2, "k_er": 1,
                    "k_s": 1, "dwell": 10},
           "options": {"outer_iters": 1}}
    spec1 = cli.load_sweep_spec(cfg)
    spec2 = cli.load_sweep_spec(cfg)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.run_sweep(spec1, str(out1)) == 0
    assert cli.run_sweep(spec2, str(out2)) == 0
    body1 = out1.read_text().splitlines()
    body2 = out2.read_text().splitlines()
    assert body1[0].startswith("# generated ")
    assert body1[1:] == body2[1:]          # identical modulo the timestamp line
