"""Walk through scenario construction: link budget, fading statistics, and the
calibrated reference design that every optimizer run starts from.

Run:  python3 demos/link_budget_walkthrough.py [--seed N]
"""

import argparse

import numpy as np

from iscap_hbf import design_eval, power_models as pm, scenario as sc


def link_budget():
    print("== link budget ==")
    print("range [m]   pathloss [dB]   field amplitude")
    for name, r in sorted(sc.PAPER_DISTANCES.items(), key=lambda kv: kv[1]):
        print("%-6s %3d   %10.3f      %.6e"
              % (name, r, sc.pathloss_db(r), sc.pathloss_amplitude(r)))
    print("noise floor %g dBm -> %.4e W" % (sc.PAPER_NOISE_DBM,
                                            sc.dbm_to_watt(sc.PAPER_NOISE_DBM)))


def fading_statistics(n_draws=400):
    # Rayleigh taps on the communication links: E|h|^2 must match the pathloss,
    # Rician taps on the powering links: heavy LOS keeps |d| near the mean amplitude
    dims = sc.DESK_DIMS
    amp_ir = sc.pathloss_amplitude(sc.PAPER_DISTANCES["ir"])
    amp_er = sc.pathloss_amplitude(sc.PAPER_DISTANCES["er"])
    pow_ir, dev_er = [], []
    for seed in range(n_draws):
        scn = sc.generate_scenario(seed, dims)
        pow_ir.append(np.mean(np.abs(scn.h) ** 2))
        dev_er.append(np.mean(np.abs(np.abs(scn.d) / amp_er - 1.0)))
    print("\n== fading statistics over %d seeds ==" % n_draws)
    print("mean |h|^2 / pathloss power : %.4f (Rayleigh, -> 1)"
          % (np.mean(pow_ir) / amp_ir ** 2))
    print("mean | |d|/amp - 1 |        : %.4f (Rician k=3 dB, spread around LOS)"
          % np.mean(dev_er))


def reference_design_report(seed):
    scn = sc.desk_scenario(seed)
    F, w, S = sc.reference_design(scn)
    p_ant = design_eval.per_antenna_power(F, w, S)
    slk = design_eval.design_slacks(scn, F, w, S)
    pw = pm.total_power(F, w, S, scn.hw)
    print("\n== calibrated reference design (seed %d, %d tx / %d chains) ==" %
          (seed, scn.dims.n_tx, scn.dims.n_rf))
    print("per-antenna radiated power [W]:")
    print("  " + "  ".join("%.4f" % p for p in p_ant))
    print("hottest antenna at %.3f of the per-antenna cap" %
          (p_ant.max() / scn.hw.p_ant_max))
    print("thresholds are calibrated so each constraint holds with 4x margin:")
    print("  sinr slack  %s" % ["%.2f" % s for s in slk["sinr"]["slack_rel"]])
    print("  crb  slack  %.2f" % slk["crb"]["slack_rel"])
    print("  eh   slack  %s" % ["%.2f" % s for s in slk["eh"]["slack_rel"]])
    print("total consumed power %.3f W  (pa %.3f / rf %.3f / ps %.3f / sw %.4f"
          " / static %.1f)" % (pw.total, pw.p_pa, pw.p_rf, pw.p_ps, pw.p_sw,
                               pw.p_static))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    link_budget()
    fading_statistics()
    reference_design_report(args.seed)


if __name__ == "__main__":
    main()
