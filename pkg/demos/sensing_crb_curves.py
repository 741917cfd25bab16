"""Estimation-accuracy side of the design problem: Fisher information of the
target parameters under a given transmit covariance, the closed-form CRB, and
the linear-matrix-inequality route the optimizer uses to bound it.

Run:  python3 demos/sensing_crb_curves.py [--png out.png]
"""

import argparse

import cvxpy as cp
import numpy as np

from iscap_hbf import array_sensing as asn, design_eval, scenario as sc


def crb_vs_dwell(scn, Rx):
    ss = asn.SteeringSet(scn.theta, scn.beta_coeff, scn.dims.n_tx, scn.dims.n_rx)
    print("== CRB vs dwell length (fixed covariance) ==")
    print("dwell   crb trace      dwell*crb (constant when information is linear in L)")
    dwells, crbs = [], []
    for dwell in (10, 20, 40, 80, 160):
        M = asn.build_fim(ss, Rx, dwell, scn.noise_sense).M
        crb = asn.crb_trace(M)
        dwells.append(dwell)
        crbs.append(crb)
        print("%5d   %.6e   %.6e" % (dwell, crb, dwell * crb))
    return np.array(dwells), np.array(crbs)


def crb_vs_power(scn, Rx):
    ss = asn.SteeringSet(scn.theta, scn.beta_coeff, scn.dims.n_tx, scn.dims.n_rx)
    print("\n== CRB vs radiated power (fixed beam shape) ==")
    print("scale   crb trace      scale*crb")
    for scale in (0.25, 0.5, 1.0, 2.0, 4.0):
        M = asn.build_fim(ss, scale * Rx, scn.dims.dwell, scn.noise_sense).M
        crb = asn.crb_trace(M)
        print("%5.2f   %.6e   %.6e" % (scale, crb, scale * crb))


def lmi_route_check(scn, Rx):
    # the optimizer never inverts the information matrix; it bounds the CRB with
    # Schur-complement blocks. For a fixed covariance both routes must agree.
    ss = asn.SteeringSet(scn.theta, scn.beta_coeff, scn.dims.n_tx, scn.dims.n_rx)
    M = asn.build_fim(ss, Rx, scn.dims.dwell, scn.noise_sense).M
    closed = asn.crb_trace(M)
    d = asn.fim_jacobi_scale(M)
    tau, cons = asn.schur_crb_constraints(cp.Constant(M), crb_max=1e9, scale=d)
    prob = cp.Problem(cp.Minimize((d ** 2) @ tau), cons)
    prob.solve(solver="CLARABEL")
    print("\n== LMI route vs closed form ==")
    print("closed-form crb trace : %.10e" % closed)
    print("schur-block minimum   : %.10e   (rel diff %.1e)"
          % (prob.value, abs(prob.value - closed) / closed))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--png", default=None, help="optional plot of crb vs dwell")
    args = ap.parse_args()

    scn = sc.desk_scenario(args.seed)
    F, w, S = sc.reference_design(scn)
    Rx = design_eval.tx_covariance(F, w, S)

    dwells, crbs = crb_vs_dwell(scn, Rx)
    crb_vs_power(scn, Rx)
    lmi_route_check(scn, Rx)

    if args.png:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib not installed; skipping plot")
            return
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.loglog(dwells, crbs, "o-")
        ax.set_xlabel("dwell length")
        ax.set_ylabel("CRB trace")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(args.png, dpi=150)
        print("wrote %s" % args.png)


if __name__ == "__main__":
    main()
