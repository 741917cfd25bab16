"""Thin solver-agnostic layer for the convex subproblems.

Named Hermitian-PSD / real variables, affine constraints and LMI blocks, a
linear objective, and a solve() that maps backend statuses onto a fixed
vocabulary and certifies the returned point by its worst constraint violation.
Parameters (used by the SCA loops to update linearization coefficients) keep
the canonicalized problem cached between solves. The complex-to-real embedding
is exposed for verification even though the default backend (cvxpy) consumes
Hermitian variables directly.
"""

import warnings

import numpy as np
import cvxpy as cp

DEFAULT_FEAS_TOL = 1e-7
# Constraints inside the conic stages are tightened by this relative margin so
# that solver-precision residuals stay inside the exact-arithmetic feasibility
# tolerance when a design is re-verified from scratch.
FEAS_MARGIN = 1e-5

_PRIMARY_SOLVER = "CLARABEL"
_FALLBACK_SOLVER = "SCS"


def drop_noise(mat, rel=1e-15):
    """Zero entries below rel times the largest magnitude.

    Constant conic data assembled from solver output carries float-noise
    products (~1e-30) that wreck the backend's equilibration; they are far
    below every feasibility tolerance, so dropping them is free.
    """
    mat = np.asarray(mat)
    top = np.abs(mat).max() if mat.size else 0.0
    if top == 0.0:
        return mat
    out = np.array(mat, copy=True)
    out[np.abs(out) < rel * top] = 0
    return out


def embed_complex(H):
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix.

    H is PSD iff the embedding is PSD; the embedding's trace is 2*tr(H).
    """
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    if H.shape != (n, n):
        raise ValueError("square matrix required")
    scale = max(np.abs(H).max(), 1.0)
    if np.abs(H - H.conj().T).max() > 1e-10 * scale:
        raise ValueError("input is not Hermitian")
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def extract_hermitian(X):
    """Inverse of embed_complex (averaging the redundant blocks)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0] // 2
    re = 0.5 * (X[:n, :n] + X[n:, n:])
    im = 0.5 * (X[n:, :n] - X[:n, n:])
    H = re + 1j * im
    return 0.5 * (H + H.conj().T)


class SolveSettings:
    def __init__(self, feas_tol=DEFAULT_FEAS_TOL, gap_tol=DEFAULT_FEAS_TOL,
                 max_iter=200000, verbose=False):
        self.feas_tol = feas_tol
        self.gap_tol = gap_tol
        self.max_iter = max_iter
        self.verbose = verbose


class Solution:
    """Backend-independent solve outcome.

    status is one of optimal / infeasible / unbounded / numerical_failure /
    max_iter. status == optimal guarantees max_violation <= the feasibility
    tolerance (otherwise the status is downgraded, never silently returned).
    """

    def __init__(self, status, values, objective_value, max_violation,
                 solver_name=None, solver_iters=None, solve_time=None):
        self.status = status
        self.values = values
        self.objective_value = objective_value
        self.max_violation = max_violation
        self.solver_name = solver_name
        self.solver_iters = solver_iters
        self.solve_time = solve_time

    @property
    def ok(self):
        return self.status == "optimal"

    def __repr__(self):
        return "Solution(status=%s, objective=%s, max_violation=%s)" % (
            self.status, self.objective_value, self.max_violation)


_STATUS_MAP = {
    cp.OPTIMAL: "optimal",
    cp.INFEASIBLE: "infeasible",
    cp.UNBOUNDED: "unbounded",
    cp.OPTIMAL_INACCURATE: "max_iter",
    cp.INFEASIBLE_INACCURATE: "infeasible",
    cp.UNBOUNDED_INACCURATE: "unbounded",
}


class ConicProgram:
    """One convex program: named variables, affine/LMI constraints, linear objective.

    The underlying cvxpy problem is canonicalized once on the first solve;
    subsequent solves reuse it, so updating Parameter values (the SCA loop) is
    cheap. Constraints must not be added after the first solve.
    """

    def __init__(self, name=""):
        self.name = name
        self.vars = {}
        self.params = {}
        self.constraints = []
        self.objective = None
        self._problem = None

    def _register(self, var):
        self.vars[var.name()] = var
        return var

    def add_hermitian_psd(self, name, n):
        var = cp.Variable((n, n), hermitian=True, name=name)
        self.vars[name] = var
        self.constraints.append(var >> 0)
        return var

    def add_real_scalar(self, name, nonneg=False):
        return self._register(cp.Variable(name=name, nonneg=nonneg))

    def add_real_vector(self, name, n, nonneg=False):
        return self._register(cp.Variable(n, name=name, nonneg=nonneg))

    def add_parameter(self, name, shape=(), value=None, nonneg=False):
        p = cp.Parameter(shape, name=name, nonneg=nonneg)
        if value is not None:
            p.value = value
        self.params[name] = p
        return p

    def add_constraint(self, con):
        if self._problem is not None:
            raise RuntimeError("program already canonicalized; cannot add constraints")
        if isinstance(con, (list, tuple)):
            self.constraints.extend(con)
        else:
            self.constraints.append(con)

    def set_objective(self, expr):
        self.objective = expr

    def _max_violation(self):
        worst = 0.0
        for c in self.constraints:
            try:
                v = c.violation()
            except Exception:
                continue
            worst = max(worst, float(np.max(v)) if np.ndim(v) else float(v))
        return worst

    def solve(self, settings=None):
        settings = settings or SolveSettings()
        if self._problem is None:
            obj = self.objective if self.objective is not None else cp.Constant(0.0)
            self._problem = cp.Problem(cp.Minimize(obj), self.constraints)
        prob = self._problem
        status = None
        for solver in (_PRIMARY_SOLVER, _FALLBACK_SOLVER):
            try:
                with warnings.catch_warnings():
                    # cvxpy warns on inaccurate statuses; the violation recheck
                    # below is the authoritative accept/reject decision
                    warnings.filterwarnings(
                        "ignore", message="Solution may be inaccurate")
                    self._solve_once(prob, solver, settings)
                status = _STATUS_MAP.get(prob.status, "numerical_failure")
            except (cp.error.SolverError, ValueError):
                status = "numerical_failure"
            if status in ("optimal", "infeasible", "unbounded", "max_iter"):
                break
        values = {}
        for name, var in self.vars.items():
            values[name] = None if var.value is None else np.array(var.value)
        objective_value = None if prob.value is None else float(prob.value)
        max_violation = self._max_violation() if status in ("optimal", "max_iter") else float("inf")
        if status == "optimal" and max_violation > settings.feas_tol:
            status = "max_iter"
        if status == "max_iter" and max_violation > 10.0 * settings.feas_tol:
            # an inaccurate iterate that is not even feasible is unusable
            status = "numerical_failure"
        stats = prob.solver_stats
        return Solution(status, values, objective_value, max_violation,
                        solver_name=None if stats is None else stats.solver_name,
                        solver_iters=None if stats is None else stats.num_iters,
                        solve_time=None if stats is None else stats.solve_time)

    @staticmethod
    def _solve_once(prob, solver, settings):
        if solver == "CLARABEL":
            # chordal decomposition splits the small Schur blocks into
            # overlapping cliques and costs iterations here; one order
            # below the acceptance tolerance is all the accuracy the
            # constraint margins need
            # reduced_tol_*: on a numerical stall, accept the last
            # iterate instead of raising when it is within the same
            # 10x band the violation recheck in solve() uses as its
            # usability limit; the caller still sees the downgraded
            # status and that recheck stays the final authority
            prob.solve(solver=solver, verbose=settings.verbose,
                       chordal_decomposition_enable=False,
                       tol_feas=settings.feas_tol * 1e-1,
                       tol_gap_abs=settings.gap_tol * 1e-1,
                       tol_gap_rel=settings.gap_tol * 1e-1,
                       reduced_tol_feas=settings.feas_tol * 10.0,
                       reduced_tol_gap_abs=1e-4,
                       reduced_tol_gap_rel=1e-4)
        else:
            # last-ditch fallback; capped so a failed primary solve
            # cannot turn into a minutes-long first-order grind
            prob.solve(solver=solver, verbose=settings.verbose,
                       eps_abs=settings.feas_tol * 1e-1,
                       eps_rel=settings.feas_tol * 1e-1,
                       max_iters=min(settings.max_iter, 5000))
