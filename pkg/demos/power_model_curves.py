"""Consumption-side curves: the non-linear power amplifier, the saturating
energy harvester, and the smoothed on-off indicator the relaxations rely on.

Run:  python3 demos/power_model_curves.py [--png out.png]
"""

import argparse

import numpy as np

from iscap_hbf import power_models as pm, scenario as sc


def pa_curves(hw):
    # drain efficiency p_out / p_consumed collapses at low drive when beta > 0:
    # the amplifier is priced on peak envelope, not average power alone
    print("== power amplifier: consumed power and efficiency vs output ==")
    p_out = np.linspace(0.0, hw.p_ant_max, 7)[1:]
    print("p_out [W]   beta=0      beta=0.25   beta=0.5 (consumed W | efficiency)")
    curves = {}
    for beta in (0.0, 0.25, 0.5):
        hw_b = sc.HardwareConstants(beta_pa=beta)
        curves[beta] = np.array([pm.pa_power(np.array([p]), hw_b) for p in p_out])
    for i, p in enumerate(p_out):
        cells = ["%7.4f|%4.2f" % (curves[b][i], p / curves[b][i])
                 for b in (0.0, 0.25, 0.5)]
        print("  %6.3f   %s" % (p, "   ".join(cells)))
    return p_out, curves


def harvester_curve():
    m_sat, a, b = sc.PAPER_EH_PARAMS
    print("\n== energy harvester: logistic transfer with hard saturation ==")
    print("ceiling %.0f mW, centered at %.1f mW input" % (m_sat * 1e3, b * 1e3))
    p_in = np.geomspace(1e-5, 50 * b, 9)
    print("p_in [mW]    dc out [mW]   fraction of ceiling")
    for p in p_in:
        dc = pm.eh_dc(p, m_sat, a, b)
        print("  %9.4f   %9.5f    %.4f" % (p * 1e3, dc * 1e3, dc / m_sat))
    # the design constraint runs through the inverse: a dc requirement becomes
    # a linear floor on received rf power
    gamma = sc.dbm_to_watt(-2.0)
    floor = pm.eh_threshold_invert(gamma, m_sat, a, b)
    print("dc requirement -2 dBm (%.4f mW) -> rf input floor %.4f mW"
          % (gamma * 1e3, floor * 1e3))
    print("round trip: eh_dc(floor) = %.6f mW" %
          (pm.eh_dc(floor, m_sat, a, b) * 1e3))
    return p_in, np.array([pm.eh_dc(p, m_sat, a, b) for p in p_in])


def indicator_relaxation():
    print("\n== smoothed on-off indicator (chain power pricing) ==")
    print("weight x    eps=1e-2    eps=1e-3    eps=1e-4")
    for x in (0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0):
        row = [pm.indicator_relax(x, eps) for eps in (1e-2, 1e-3, 1e-4)]
        print("  %7.4f   %.5f     %.5f     %.5f" % (x, *row))
    print("-> 0 at exactly zero, close to 1 once the weight clears eps")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--png", default=None)
    args = ap.parse_args()

    hw = sc.HardwareConstants()
    p_out, pa = pa_curves(hw)
    p_in, dc = harvester_curve()
    indicator_relaxation()

    if args.png:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib not installed; skipping plot")
            return
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
        for beta, curve in pa.items():
            axes[0].plot(p_out, curve, "o-", label="beta=%.2f" % beta)
        axes[0].set_xlabel("radiated power [W]")
        axes[0].set_ylabel("amplifier consumption [W]")
        axes[0].legend()
        axes[1].semilogx(p_in * 1e3, dc * 1e3, "o-")
        axes[1].set_xlabel("rf input [mW]")
        axes[1].set_ylabel("harvested dc [mW]")
        for ax in axes:
            ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(args.png, dpi=150)
        print("wrote %s" % args.png)


if __name__ == "__main__":
    main()
