"""Head-to-head of the on-off control schemes on one instance: keeping all
hardware alive, switching chains only, switching shifters only, and the joint
search, plus the fully digital and fixed-efficiency reference architectures.

Run:  python3 demos/onoff_scheme_comparison.py [--seed N]
Takes ~1 min on one core: the joint search prices every candidate mask with
its own alternating solve.
"""

import argparse

import numpy as np

from iscap_hbf import ao_driver as ao, design_eval, onoff_control as oc, \
    power_models as pm, scenario as sc


def describe(res):
    if not res.feasible:
        return "%-12s  infeasible" % res.scheme
    p_ant = design_eval.per_antenna_power(res.F, res.w, res.S)
    n_rf = res.F.shape[1]
    chains_on = int(np.sum(np.abs(res.F).sum(axis=0) > 0))
    ps_on = int(np.sum(np.abs(res.F) > 0))
    dark = int(np.sum(p_ant <= pm.ACTIVATION_TOL))
    pw = res.power
    return ("%-12s  %8.4f W   chains %d/%d  shifters %3d  dark antennas %d   "
            "(pa %.3f rf %.3f ps %.3f)" %
            (res.scheme, res.total, chains_on, n_rf, ps_on, dark,
             pw.p_pa, pw.p_rf, pw.p_ps))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    scn = sc.desk_scenario(args.seed, dims=sc.COMPACT_DIMS)
    opts = ao.SolveOptions(outer_iters=2, trial_outer_iters=1, seed=args.seed)

    out = ao.compare_schemes(scn, opts=opts)
    for s in ("digital_full", "fixed_pa"):
        out[s] = ao.solve_instance(scn, s, opts)

    print("instance: %d antennas / %d chains, thresholds calibrated with 4x "
          "margin\n" % (scn.dims.n_tx, scn.dims.n_rf))
    for s in ("no_onoff", "rf_only", "ps_only", "joint", "digital_full",
              "fixed_pa"):
        print(describe(out[s], scn))

    joint = out["joint"]
    if joint.feasible and joint.ps_mask is not None:
        print("\njoint shifter grid (rows = antennas, cols = chains):")
        print(oc.mask_grid_text(joint.ps_mask))
    print("\ntrials priced by the joint search: %d" % joint.meta["n_trials"])
    saved = out["no_onoff"].total - joint.total
    print("saving vs keeping everything on: %.4f W (%.1f%%)"
          % (saved, 100.0 * saved / out["no_onoff"].total))


if __name__ == "__main__":
    main()
