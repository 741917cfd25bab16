"""Analog-side design for fixed digital beamformers.

With {w_k}, S held fixed, every quantity of interest depends on the analog
matrix F only through f = vec(F) (column-major), so the stage lifts f to
R_f = f f^H and optimizes over Hermitian PSD R_f with the unit-modulus
constraint relaxed to bounds on diag(R_f): the transmit covariance becomes

    R_x = sum_k T_k R_f T_k^H + sum_i lam_i U_i R_f U_i^H,
    T_k = w_k^T kron I,   U_i = u_i^T kron I  (S = sum_i lam_i u_i u_i^H),

which keeps SINR, harvested-power, trace-CRB and per-antenna rows linear in
R_f. The concave PA and log on-off-surrogate objective terms are again handled
by tangent upper bounds inside an SCA loop (the linearization never touches
the constraints). A Gaussian randomization step draws candidates from the
converged covariance, snaps them to constant modulus, and certifies each one
exactly against the original constraints before ranking by true power draw.
"""

import numpy as np
import cvxpy as cp

from . import array_sensing, conic_ir, design_eval, power_models, scenario
from .digital_stage import PA_SLOPE_FLOOR, SCA_MAX_ITER, SCA_REL_TOL

RANDOMIZE_SAMPLES = 50


def vec_index(i, j, n_tx):
    """Flat position of analog entry (antenna i, chain j) in f = vec(F)."""
    return j * n_tx + i


def lift_maps(w_act, S_act, n_tx):
    """Constant maps sending R_f to the transmit covariance.

    F w_k = (w_k^T kron I) f and F u_i = (u_i^T kron I) f, so with
    S = sum_i lam_i u_i u_i^H the covariance F (sum_k w_k w_k^H + S) F^H equals
    sum_k T_k R_f T_k^H + sum_i lam_i U_i R_f U_i^H at R_f = f f^H.
    """
    eye = np.eye(n_tx)
    T = [np.kron(conic_ir.drop_noise(np.asarray(w, dtype=complex)).reshape(1, -1), eye)
         for w in w_act]
    S_act = np.asarray(S_act, dtype=complex)
    Sh = 0.5 * (S_act + S_act.conj().T)
    lam, u = np.linalg.eigh(Sh)
    u = conic_ir.drop_noise(u)
    top = max(lam.max(), 0.0)
    # tolerate the small negative eigenvalues the rank-one recovery can leave
    if lam.min() < -1e-8 * (1.0 + top):
        raise ValueError("sensing covariance is not positive semidefinite")
    keep = np.nonzero(lam > 1e-14 * max(top, 1e-30))[0]
    U = [np.kron(u[:, i].reshape(1, -1), eye) for i in keep]
    return {"T": T, "lams": lam[keep], "U": U, "n_tx": n_tx}


def rx_from_rf(maps, Rf):
    """Numeric transmit covariance of a lifted point."""
    Rf = np.asarray(Rf, dtype=complex)
    n_tx = maps["n_tx"]
    Rx = np.zeros((n_tx, n_tx), dtype=complex)
    for T in maps["T"]:
        Rx += T @ Rf @ T.conj().T
    for lam, U in zip(maps["lams"], maps["U"]):
        Rx += lam * (U @ Rf @ U.conj().T)
    return Rx


def antenna_powers_from_rf(maps, Rf):
    return np.maximum(np.real(np.diag(rx_from_rf(maps, Rf))), 0.0)


class AnalogSdr:
    """Convex program over R_f for fixed digital design, with SCA slope parameters.

    rf_mask selects the chains present in the problem (off chains are removed,
    shrinking R_f); ps_mask pins individual analog entries to zero via their
    diagonal in R_f (PSD then forces the whole row/column to zero).
    """

    def __init__(self, scn, w_list, S, rf_mask=None, ps_mask=None):
        dims = scn.dims
        self.scn = scn
        self.hw = scn.hw
        n_tx = dims.n_tx
        self.rf_mask = np.ones(dims.n_rf, bool) if rf_mask is None else np.asarray(rf_mask, bool)
        self.act = np.nonzero(self.rf_mask)[0]
        n_a = self.act.size
        self.n_a = n_a
        if ps_mask is None:
            ps_mask = np.ones((n_tx, n_a), bool)
        self.ps_mask = np.asarray(ps_mask, bool)
        if self.ps_mask.shape != (n_tx, n_a):
            raise ValueError("ps_mask must be n_tx x n_active")
        w_act = [np.asarray(w, dtype=complex)[self.act] for w in w_list]
        S_act = np.asarray(S, dtype=complex)[np.ix_(self.act, self.act)]
        self.maps = lift_maps(w_act, S_act, n_tx)
        n = n_tx * n_a
        self.n = n
        flat_on = self.ps_mask.ravel(order="F")
        self.on_flat = np.nonzero(flat_on)[0]
        self.off_flat = np.nonzero(~flat_on)[0]
        self.pa_rows = np.nonzero(np.any(self.ps_mask, axis=1))[0]

        prog = conic_ir.ConicProgram("analog")
        self.prog = prog
        Rf = prog.add_hermitian_psd("R_f", n)
        self.Rf_var = Rf
        diag_rf = cp.real(cp.diag(Rf))
        margin = conic_ir.FEAS_MARGIN

        # relaxed unit-modulus bounds; diag == 0 plus PSD pins off entries fully
        prog.add_constraint(diag_rf[self.on_flat] <= 1.0 / n_tx)
        if self.off_flat.size:
            prog.add_constraint(diag_rf[self.off_flat] == 0)

        # every congruence factor Z with R_x = sum_m Z_m R_f Z_m^H
        Z_all = list(self.maps["T"]) + [
            np.sqrt(lam) * U for lam, U in zip(self.maps["lams"], self.maps["U"])]

        def lift_trace(Mat):
            # Re tr(Mat^H R_f) for a constant Hermitian Mat
            return cp.real(cp.sum(cp.multiply(np.conj(conic_ir.drop_noise(Mat)), Rf)))

        # per-antenna output powers [R_x]_nn as single traces
        W_rows = []
        for nn in range(n_tx):
            W = np.zeros((n, n), dtype=complex)
            for Z in Z_all:
                W += np.outer(Z[nn].conj(), Z[nn])
            W_rows.append(W)
        diag_rx = cp.hstack([lift_trace(W) for W in W_rows])

        # SINR rows collapse to one constant Hermitian matrix per user
        for k in range(dims.k_ir):
            hk = scn.h[k]
            sig = scn.noise_ir[k]
            gam = scn.thresholds.sinr_min[k]
            C = np.zeros((n, n), dtype=complex)
            for i, T in enumerate(self.maps["T"]):
                a = T.conj().T @ hk
                C += np.outer(a, a.conj()) * ((1.0 / gam if i == k else -1.0) / sig)
            for lam, U in zip(self.maps["lams"], self.maps["U"]):
                a = U.conj().T @ hk
                C -= np.outer(a, a.conj()) * (lam / sig)
            prog.add_constraint(lift_trace(C) >= 1.0 + margin)

        # harvested-power rows, one constant matrix per energy receiver
        self.gamma_tilde = design_eval.eh_input_thresholds(scn)
        for j in range(dims.k_er):
            dj = scn.d[j]
            D = np.zeros((n, n), dtype=complex)
            for T in self.maps["T"]:
                a = T.conj().T @ dj
                D += np.outer(a, a.conj())
            for lam, U in zip(self.maps["lams"], self.maps["U"]):
                a = U.conj().T @ dj
                D += lam * np.outer(a, a.conj())
            prog.add_constraint(lift_trace(D / self.gamma_tilde[j]) >= 1.0 + margin)

        if dims.k_s:
            self.ss = array_sensing.SteeringSet(scn.theta, scn.beta_coeff, dims.n_tx, dims.n_rx)
            Rf_ref = np.diag(flat_on.astype(float) / n_tx)
            M_ref = array_sensing.build_fim(
                self.ss, rx_from_rf(self.maps, Rf_ref), dims.dwell, scn.noise_sense)
            scale = array_sensing.fim_jacobi_scale(M_ref)
            K = array_sensing.fim_coefficients(self.ss, dims.dwell, scn.noise_sense)
            m = K.shape[0]
            rows = []
            for p in range(m):
                row = []
                for q in range(m):
                    G = np.zeros((n, n), dtype=complex)
                    for Z in Z_all:
                        G += Z.conj().T @ K[p, q] @ Z
                    row.append(lift_trace(G))
                rows.append(row)
            M_expr = cp.bmat(rows)
            self.t_var, crb_cons = array_sensing.schur_crb_constraints(
                M_expr, scn.thresholds.crb_max * (1.0 - margin), scale=scale)
            prog.add_constraint(crb_cons)

        prog.add_constraint(diag_rx <= scn.hw.p_ant_max * (1.0 - margin))

        self.slope_pa = prog.add_parameter("slope_pa", (self.pa_rows.size,), nonneg=True)
        self.slope_ps = prog.add_parameter("slope_ps", (self.on_flat.size,), nonneg=True)
        obj = self.slope_ps @ diag_rf[self.on_flat]
        if self.pa_rows.size:
            obj = obj + self.slope_pa @ diag_rx[self.pa_rows]
        prog.set_objective(obj)

        # RF-chain surrogate term: constant here (the digital design is fixed)
        self.rf_const = power_models.rf_power_relaxed(
            power_models.chain_powers(w_list, S), self.hw.p_rf, self.hw.eps_indicator)

    # -- concrete-point evaluation ------------------------------------------

    def locals_from_rf(self, Rf_val):
        p = antenna_powers_from_rf(self.maps, Rf_val)[self.pa_rows]
        c = np.maximum(np.real(np.diag(np.asarray(Rf_val))), 0.0)[self.on_flat]
        return p, c

    def locals_from_F(self, F_act):
        f = np.asarray(F_act, dtype=complex).ravel(order="F")
        return self.locals_from_rf(np.outer(f, f.conj()))

    def set_local(self, p_loc, c_loc):
        hw = self.hw
        beta = hw.beta_pa
        kappa = (hw.p_ant_max ** beta) / hw.eta_max
        if beta == 0.0:
            self.slope_pa.value = np.full(self.pa_rows.size, kappa)
        else:
            p0 = np.maximum(p_loc, PA_SLOPE_FLOOR)
            self.slope_pa.value = kappa * (1.0 - beta) * p0 ** (-beta)
        unit = hw.p_ps / np.log1p(1.0 / hw.eps_indicator)
        self.slope_ps.value = unit / (c_loc + hw.eps_indicator)

    def true_objective(self, Rf_val):
        """PA draw plus relaxed PS draw at a lifted point, plus the constant
        relaxed RF term of the fixed digital design."""
        p_out = antenna_powers_from_rf(self.maps, Rf_val)
        pa = power_models.pa_power(p_out, self.hw)
        c = np.maximum(np.real(np.diag(np.asarray(Rf_val))), 0.0)[self.on_flat]
        ps = power_models.ps_power_relaxed(c, self.hw.p_ps, self.hw.eps_indicator)
        return pa + ps + self.rf_const

    def extract(self, sol):
        return np.array(sol.values["R_f"])


def sca_analog(scn, F_init, w_list, S, rf_mask=None, ps_mask=None,
               max_iter=SCA_MAX_ITER, rel_tol=SCA_REL_TOL, settings=None):
    """Run the analog stage to convergence for a fixed digital design.

    F_init supplies the first linearization point. Returns a dict with the
    converged lifted covariance R_f (active-chain space), the true relaxed
    objective trace, iterations, status, and the builder (for its index maps).
    """
    settings = settings or conic_ir.SolveSettings()
    sdr = AnalogSdr(scn, w_list, S, rf_mask=rf_mask, ps_mask=ps_mask)
    F_act = np.asarray(F_init, dtype=complex)[:, sdr.act] * sdr.ps_mask
    p_loc, c_loc = sdr.locals_from_F(F_act)

    trace = []
    Rf_val = None
    status = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        sdr.set_local(p_loc, c_loc)
        sol = sdr.prog.solve(settings)
        if sol.status in ("infeasible", "unbounded"):
            status = "infeasible" if Rf_val is None else "max_iter"
            break
        if not sol.ok and sol.status != "max_iter":
            # solver breakdown; stand on the last good iterate if there is one
            status = "numerical_failure" if Rf_val is None else "max_iter"
            break
        Rf_new = sdr.extract(sol)
        val = sdr.true_objective(Rf_new)
        if trace and val > trace[-1]:
            # an inexact subproblem solve cannot improve on the local point
            status = "converged"
            break
        trace.append(val)
        Rf_val = Rf_new
        if len(trace) > 1 and trace[-2] - trace[-1] < rel_tol * max(abs(trace[-2]), 1e-12):
            status = "converged"
            break
        p_loc, c_loc = sdr.locals_from_rf(Rf_val)

    return {"status": status, "R_f": Rf_val, "trace": trace, "iterations": it, "sdr": sdr}


def embed_analog(F_act, act, n_rf):
    """Place active-chain analog columns into the full n_tx x n_rf matrix."""
    F_act = np.asarray(F_act, dtype=complex)
    out = np.zeros((F_act.shape[0], n_rf), dtype=complex)
    out[:, act] = F_act
    return out


def project_modulus(F_bar, ps_mask):
    """Snap every unmasked analog entry to modulus 1/sqrt(n_tx), keep phases."""
    F_bar = np.asarray(F_bar, dtype=complex)
    n_tx = F_bar.shape[0]
    return np.where(ps_mask, np.exp(1j * np.angle(F_bar)) / np.sqrt(n_tx), 0.0)


def gaussian_randomize(scn, Rf, w_list, S, rf_mask=None, ps_mask=None,
                       n_samples=RANDOMIZE_SAMPLES, seed=0):
    """Constant-modulus extraction from a lifted analog covariance.

    Draws f ~ CN(0, R_f) (plus the principal component as a deterministic
    candidate), projects each to constant modulus under ps_mask, certifies the
    resulting full design exactly, and returns the feasible candidate with the
    lowest true total power together with its pre-projection matrix (whose
    entry magnitudes later drive the phase-shifter on-off ordering). One
    fresh batch is retried before giving up; failures report the best
    violation seen.
    """
    dims = scn.dims
    n_tx = dims.n_tx
    rf_mask = np.ones(dims.n_rf, bool) if rf_mask is None else np.asarray(rf_mask, bool)
    act = np.nonzero(rf_mask)[0]
    n_a = act.size
    if ps_mask is None:
        ps_mask = np.ones((n_tx, n_a), bool)
    Rf = np.asarray(Rf, dtype=complex)
    lam, Q = np.linalg.eigh(0.5 * (Rf + Rf.conj().T))
    lam = np.maximum(lam, 0.0)
    root = Q * np.sqrt(lam)
    principal = Q[:, -1] * np.sqrt(lam[-1])

    seed_words = [int(s) for s in np.atleast_1d(seed)]
    rng = np.random.default_rng(seed_words + [scenario.SEED_TAG_RANDOMIZE])
    best = None
    best_viol = None
    n_feasible = 0
    for attempt in range(2):
        f_bars = [principal] if attempt == 0 else []
        z = (rng.standard_normal((Rf.shape[0], n_samples))
             + 1j * rng.standard_normal((Rf.shape[0], n_samples))) / np.sqrt(2.0)
        f_bars.extend((root @ z).T)
        for f_bar in f_bars:
            F_bar = f_bar.reshape((n_tx, n_a), order="F")
            F_full = embed_analog(project_modulus(F_bar, ps_mask), act, dims.n_rf)
            slacks = design_eval.design_slacks(scn, F_full, w_list, S)
            if slacks["worst"] >= -design_eval.FEAS_RTOL:
                n_feasible += 1
                power = power_models.total_power(F_full, w_list, S, scn.hw).total
                if best is None or power < best["power"]:
                    best = {"F": F_full, "F_bar": F_bar, "power": power,
                            "worst_slack": slacks["worst"]}
            elif best_viol is None or slacks["worst"] > best_viol["worst_slack"]:
                best_viol = {"F": F_full, "F_bar": F_bar, "power": np.inf,
                             "worst_slack": slacks["worst"]}
        if best is not None:
            break

    if best is None:
        out = dict(best_viol or {"F": None, "F_bar": None, "power": np.inf,
                                 "worst_slack": -np.inf})
        out.update(ok=False, n_feasible=0)
        return out
    best.update(ok=True, n_feasible=n_feasible)
    return best
