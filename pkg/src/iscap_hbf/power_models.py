"""Transmitter power accounting and the non-linear energy-harvesting model.

Covers the non-linear PA draw, on-off RF-chain / phase-shifter terms (exact
indicator form and the logarithmic continuous relaxation used inside the
optimizer), switch and static constants, and the logistic EH curve with its
threshold inversion. Optimization uses the relaxed forms; reporting and
acceptance use the exact indicator forms. All quantities in watts.
"""

import numpy as np

# On-detection threshold in watts; separates solver roundoff from genuine activity.
ACTIVATION_TOL = 1e-9


class PowerBreakdown:
    """Per-term exact power consumption; total is the sum of the five parts."""

    FIELDS = ("p_pa", "p_rf", "p_ps", "p_sw", "p_static", "total")

    def __init__(self, p_pa, p_rf, p_ps, p_sw, p_static):
        self.p_pa = float(p_pa)
        self.p_rf = float(p_rf)
        self.p_ps = float(p_ps)
        self.p_sw = float(p_sw)
        self.p_static = float(p_static)
        self.total = self.p_pa + self.p_rf + self.p_ps + self.p_sw + self.p_static

    @staticmethod
    def csv_header():
        return "p_pa_w,p_rf_w,p_ps_w,p_sw_w,p_static_w,total_w"

    def to_csv_row(self):
        return ",".join("%.12e" % getattr(self, f) for f in self.FIELDS)

    def as_dict(self):
        return {f: getattr(self, f) for f in self.FIELDS}

    def __repr__(self):
        return "PowerBreakdown(total=%.6g W, pa=%.6g, rf=%.6g, ps=%.6g, sw=%.6g, static=%.6g)" % (
            self.total, self.p_pa, self.p_rf, self.p_ps, self.p_sw, self.p_static)


def pa_power(per_antenna_out, hw):
    """Total PA draw: sum_n (P_max^beta / eta_max) * P_n^out^(1-beta).

    Efficiency grows with output power, so the draw is concave in P_n^out for
    beta in (0,1); beta=0 is the fixed-efficiency model. A zero-output antenna
    contributes exactly 0 (off PA consumes nothing, also at beta=1).
    """
    p = np.atleast_1d(np.asarray(per_antenna_out, dtype=float))
    if np.any(p < -1e-12):
        raise ValueError("negative per-antenna output power")
    p = np.maximum(p, 0.0)
    beta = hw.beta_pa
    coeff = (hw.p_ant_max ** beta) / hw.eta_max
    terms = np.where(p > 0.0, np.power(p, 1.0 - beta, where=p > 0.0, out=np.zeros_like(p)), 0.0)
    return float(coeff * np.sum(terms))


def indicator_relax(x, eps):
    """Smooth surrogate for the on/off indicator: log(1+x/eps)/log(1+1/eps).

    Equals 0 at x=0 and 1 at x=1; strictly increasing; tends to the binary
    indicator as eps -> 0.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("indicator argument must be nonnegative")
    if eps <= 0:
        raise ValueError("eps must be positive")
    out = np.log1p(x / eps) / np.log1p(1.0 / eps)
    return float(out) if out.ndim == 0 else out


def rf_power_exact(chain_powers, p_rf):
    """Exact RF-chain draw: p_rf per chain whose beamforming power exceeds the tolerance."""
    v = np.atleast_1d(np.asarray(chain_powers, dtype=float))
    return float(p_rf * np.count_nonzero(v > ACTIVATION_TOL))


def ps_power_exact(F, p_ps):
    """Exact phase-shifter draw: p_ps per element of F with nonzero modulus."""
    return float(p_ps * np.count_nonzero(np.abs(F) > ACTIVATION_TOL))


def rf_power_relaxed(weights, unit_power, eps):
    """Relaxed on-off draw: unit_power/log(1+1/eps) * sum log(1+w/eps)."""
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return float(unit_power * np.sum(np.log1p(w / eps)) / np.log1p(1.0 / eps))


# Same relaxation applies per phase-shifter with the lifted diagonal as weight.
ps_power_relaxed = rf_power_relaxed


def eh_dc(p_rf_in, m_sat, a, b):
    """Harvested DC power for RF input p_rf_in under the logistic EH curve.

    Evaluates M*(1-exp(-a*p)) / (1+exp(a*(b-p))), the zero-in/zero-out
    normalized logistic; algebraically identical to the
    (Psi - M*Omega)/(1 - Omega) form but stable for tiny inputs. Output is 0 at
    p=0, strictly increasing, and saturates at m_sat.
    """
    p = np.asarray(p_rf_in, dtype=float)
    if np.any(p < 0):
        raise ValueError("RF input power must be nonnegative")
    with np.errstate(over="ignore"):
        out = m_sat * (-np.expm1(-a * p)) / (1.0 + np.exp(a * (b - p)))
    return float(out) if out.ndim == 0 else out


def eh_threshold_invert(gamma_dc, m_sat, a, b):
    """RF input power whose harvested DC output is exactly gamma_dc.

    Closed form p = (1/a) * [log(M + g*e^{ab}) - log(M - g)], evaluated in the
    log domain so large a*b cannot overflow. Requires 0 < gamma_dc < m_sat.
    """
    g = float(gamma_dc)
    if g <= 0:
        raise ValueError("DC threshold must be positive")
    if g >= m_sat:
        raise ValueError("saturation-unreachable: DC threshold >= rectifier ceiling m_sat")
    num = np.logaddexp(np.log(m_sat), np.log(g) + a * b)
    return float((num - np.log(m_sat - g)) / a)


def chain_powers(w_list, S):
    """Per-chain beamforming power v_n = sum_k |w_k[n]|^2 + S[n,n]."""
    S = np.asarray(S)
    v = np.real(np.diag(S)).astype(float).copy()
    for w in w_list:
        v += np.abs(np.asarray(w)) ** 2
    return v


def switch_count(n_tx, n_rf, has_ps_network=True):
    """Switches in the on-off architecture: one per RF chain plus one per PS element."""
    return n_rf + (n_tx * n_rf if has_ps_network else 0)


def total_power(F, w_list, S, hw, n_switches=None):
    """Exact indicator-based PowerBreakdown for a concrete design (F, {w_k}, S).

    Raises on a per-antenna power violation, naming the offending antenna.
    """
    F = np.asarray(F, dtype=complex)
    n_tx, n_rf = F.shape
    Rtot = np.asarray(S, dtype=complex).copy()
    for w in w_list:
        Rtot += np.outer(w, np.conj(w))
    p_out = np.real(np.einsum("ij,jk,ik->i", F, Rtot, np.conj(F)))
    p_out = np.maximum(p_out, 0.0)
    bad = np.nonzero(p_out > hw.p_ant_max * (1 + 1e-6))[0]
    if bad.size:
        raise ValueError("per-antenna power limit exceeded at antenna %d: %.6g W > %.6g W"
                         % (bad[0], p_out[bad[0]], hw.p_ant_max))
    if n_switches is None:
        n_switches = switch_count(n_tx, n_rf)
    return PowerBreakdown(
        p_pa=pa_power(p_out, hw),
        p_rf=rf_power_exact(chain_powers(w_list, S), hw.p_rf),
        p_ps=ps_power_exact(F, hw.p_ps),
        p_sw=hw.p_sw * n_switches,
        p_static=hw.p_static,
    )
