"""One full pass of the alternating design, stage by stage: relax the digital
covariances, recover unit-rank beams, re-fit the constant-modulus analog
stage, and certify the projected design against every constraint.

Run:  python3 demos/two_stage_walkthrough.py [--seed N]
Takes ~10 s on one core at the default 6x6x3 size.
"""

import argparse

import numpy as np

from iscap_hbf import analog_stage as an, design_eval, digital_stage as dg, \
    power_models as pm, scenario as sc


def print_trace(label, trace):
    print("%s objective trace (relaxed consumption bound, W):" % label)
    for i, v in enumerate(trace):
        print("  iter %2d   %.6f" % (i, v))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    scn = sc.desk_scenario(args.seed, dims=sc.COMPACT_DIMS)
    F0 = sc.full_on_analog(scn.dims.n_tx, scn.dims.n_rf, args.seed)
    print("instance: %d antennas, %d chains, %d users / %d harvesters / %d targets"
          % (scn.dims.n_tx, scn.dims.n_rf, scn.dims.k_ir, scn.dims.k_er,
             scn.dims.k_s))

    # stage 1: chain-space covariances under a fixed analog stage
    dres = dg.sca_digital(scn, F0)
    print("\n-- digital stage (%s after %d iterations) --"
          % (dres["status"], dres["iterations"]))
    print_trace("digital", dres["trace"])

    cov = dg.recover_rank_one(dres["R"], dres["S"], F0, scn.h)
    slk = design_eval.design_slacks(scn, F0, cov.w, cov.S)
    print("rank-one beams recovered; worst constraint slack %.2e" % slk["worst"])

    # stage 2: re-fit the shifter network around the recovered beams
    ares = an.sca_analog(scn, F0, cov.w, cov.S, max_iter=4, rel_tol=1e-3)
    print("\n-- analog stage (%s after %d iterations) --"
          % (ares["status"], ares["iterations"]))
    print_trace("analog", ares["trace"])

    # the lifted matrix is a relaxation: project to constant modulus, then
    # rescue feasibility by sampling around the principal component if needed
    rnd = an.gaussian_randomize(scn, ares["R_f"], cov.w, cov.S, None, None,
                                seed=args.seed)
    assert rnd["ok"], "randomization found no feasible shifter setting"
    F_star = rnd["F"]
    print("\n-- projected constant-modulus design --")
    print("feasible samples %d / %d, worst slack %.2e"
          % (rnd["n_feasible"], an.RANDOMIZE_SAMPLES, rnd["worst_slack"]))
    mods = np.abs(F_star[np.abs(F_star) > 0])
    print("shifter moduli: min %.6f max %.6f (exact 1/sqrt(n_tx) = %.6f)"
          % (mods.min(), mods.max(), 1 / np.sqrt(scn.dims.n_tx)))

    pw = pm.total_power(F_star, cov.w, cov.S, scn.hw)
    print("\nconsumption: total %.4f W = pa %.4f + rf %.4f + ps %.4f + sw %.4f"
          " + static %.1f" % (pw.total, pw.p_pa, pw.p_rf, pw.p_ps, pw.p_sw,
                              pw.p_static))
    slk = design_eval.design_slacks(scn, F_star, cov.w, cov.S)
    print("worst slack after projection %.2e (>= 0 means every constraint holds)"
          % slk["worst"])


if __name__ == "__main__":
    main()
