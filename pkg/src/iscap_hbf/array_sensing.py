"""Uniform-linear-array responses, Fisher information, trace-CRB, and Schur LMI data.

All angles are radians, all powers are watts. The array is a half-wavelength
ULA phase-referenced to its center, so the m-th element response is
exp(j*(m-(n-1)/2)*pi*sin(theta)).
"""

import numpy as np


class UnidentifiableError(ValueError):
    """Raised when the Fisher information matrix is singular (unidentifiable parameters)."""


def steering(theta, n):
    """Response vector of an n-element ULA toward angle theta (length n, unit-modulus)."""
    if n < 1:
        raise ValueError("antenna count must be >= 1")
    offsets = np.arange(n) - (n - 1) / 2.0
    return np.exp(1j * np.pi * np.sin(theta) * offsets)


def steering_derivative(theta, n):
    """Elementwise derivative of steering(theta, n) with respect to theta."""
    if n < 1:
        raise ValueError("antenna count must be >= 1")
    offsets = np.arange(n) - (n - 1) / 2.0
    return 1j * np.pi * np.cos(theta) * offsets * steering(theta, n)


class SteeringSet:
    """Per-target responses/derivatives at both arrays plus the reflection-coefficient diagonal.

    Columns index targets: A, A_dot are n_rx x k_s; V, V_dot are n_tx x k_s;
    B is the k_s x k_s diagonal of complex reflection coefficients.
    """

    def __init__(self, theta, beta_coeff, n_tx, n_rx):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        beta_coeff = np.atleast_1d(np.asarray(beta_coeff, dtype=complex))
        if theta.shape != beta_coeff.shape:
            raise ValueError("theta and beta_coeff must have matching length")
        self.theta = theta
        self.k_s = theta.size
        self.n_tx = n_tx
        self.n_rx = n_rx
        self.A = np.column_stack([steering(t, n_rx) for t in theta]) if self.k_s else np.zeros((n_rx, 0))
        self.V = np.column_stack([steering(t, n_tx) for t in theta]) if self.k_s else np.zeros((n_tx, 0))
        self.A_dot = np.column_stack([steering_derivative(t, n_rx) for t in theta]) if self.k_s else np.zeros((n_rx, 0))
        self.V_dot = np.column_stack([steering_derivative(t, n_tx) for t in theta]) if self.k_s else np.zeros((n_tx, 0))
        self.B = np.diag(beta_coeff)
        self.b = beta_coeff


class FimMatrix:
    """Real symmetric Fisher information for (theta, Re b, Im b), scale 2/sigma_S^2 applied."""

    def __init__(self, M, scale):
        self.M = M
        self.scale = scale


def _as_matrix(M):
    return M.M if isinstance(M, FimMatrix) else np.asarray(M, dtype=float)


def fim_blocks(ss, Rx, dwell):
    """Complex k_s x k_s blocks (M11, M12, M22) of the Fisher information, before 2/sigma^2.

    Each block is a sum of Hadamard products between receive-side Grams and
    transmit-side congruences of conj(Rx); every entry is linear in Rx.
    """
    Rc = np.conj(Rx)
    A, Ad, V, Vd = ss.A, ss.A_dot, ss.V, ss.V_dot
    b = ss.b
    Bc_V_B = np.outer(np.conj(b), b)  # left conj(B), right B elementwise
    Bc_V = np.conj(b)[:, None]        # left conj(B) only
    L = float(dwell)
    M11 = L * (
        (Ad.conj().T @ Ad) * (Bc_V_B * (V.conj().T @ Rc @ V))
        + (Ad.conj().T @ A) * (Bc_V_B * (V.conj().T @ Rc @ Vd))
        + (A.conj().T @ Ad) * (Bc_V_B * (Vd.conj().T @ Rc @ V))
        + (A.conj().T @ A) * (Bc_V_B * (Vd.conj().T @ Rc @ Vd))
    )
    M12 = L * (
        (Ad.conj().T @ A) * (Bc_V * (V.conj().T @ Rc @ V))
        + (A.conj().T @ A) * (Bc_V * (Vd.conj().T @ Rc @ V))
    )
    M22 = L * ((A.conj().T @ A) * (V.conj().T @ Rc @ V))
    return M11, M12, M22


def assemble_fim(M11, M12, M22, sigma_s2):
    """Stack the complex blocks into the real symmetric FIM and symmetrize."""
    scale = 2.0 / sigma_s2
    M = scale * np.block([
        [M11.real, M12.real, -M12.imag],
        [M12.real.T, M22.real, -M22.imag],
        [-M12.imag.T, -M22.imag.T, M22.real],
    ])
    return 0.5 * (M + M.T)


def build_fim(ss, Rx, dwell, sigma_s2):
    """Fisher information for target angles and complex reflection coefficients.

    Rx is the n_tx x n_tx transmit covariance; output is 3*k_s x 3*k_s,
    real symmetric, PSD, and linear in Rx.
    """
    Rx = np.asarray(Rx, dtype=complex)
    if Rx.shape != (ss.n_tx, ss.n_tx):
        raise ValueError("Rx must be n_tx x n_tx")
    if dwell < 1:
        raise ValueError("dwell must be >= 1")
    if sigma_s2 <= 0:
        raise ValueError("sensing noise power must be positive")
    M11, M12, M22 = fim_blocks(ss, Rx, dwell)
    M = assemble_fim(M11, M12, M22, sigma_s2)
    return FimMatrix(M, 2.0 / sigma_s2)


# FIM considered singular below this eigenvalue ratio, evaluated on the
# diagonally preconditioned matrix so that the (huge, physical) unit disparity
# between angle and amplitude parameters does not masquerade as
# unidentifiability; separates the truly singular case from roundoff.
SINGULARITY_RATIO = 1e-10


def crb_trace(M):
    """tr(M^-1), the average estimation-CRB over all target parameters.

    Computed through a Jacobi-preconditioned eigendecomposition: with
    D = diag(M)^(-1/2), tr(M^-1) = sum_i [(DMD)^-1]_ii * D_ii^2, which keeps
    full relative accuracy even when parameter units differ by many orders.
    """
    M = _as_matrix(M)
    dg = np.diag(M).copy()
    if np.any(dg <= 0):
        raise UnidentifiableError("unidentifiable parameters: zero-information parameter")
    d = 1.0 / np.sqrt(dg)
    Mp = M * np.outer(d, d)
    eig, U = np.linalg.eigh(0.5 * (Mp + Mp.T))
    if eig[0] < SINGULARITY_RATIO * max(eig[-1], 0.0) or eig[-1] <= 0:
        raise UnidentifiableError("unidentifiable parameters: singular Fisher information")
    inv_diag = np.einsum("ij,j,ij->i", U, 1.0 / eig, U)
    return float(np.sum(inv_diag * d * d))


def fim_coefficients(ss, dwell, sigma_s2):
    """Constant Hermitian matrices K[p,q] with [FIM(Rx)]_{p,q} = Re tr(K_pq^H Rx).

    The FIM assembly is real-linear in the Hermitian transmit covariance, so
    the K's are recovered exactly by probing it with a Hermitian matrix basis.
    The conic stages use them to write each CRB block entry as a single trace
    of their covariance variable, which keeps the canonicalized problem data
    free of deep-expression float noise.
    """
    n = ss.n_tx
    m = 3 * ss.k_s

    def probe(H):
        return assemble_fim(*fim_blocks(ss, H, dwell), sigma_s2)

    K = np.zeros((m, m, n, n), dtype=complex)
    for i in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[i, i] = 1.0
        K[:, :, i, i] = probe(E)
        for j in range(i + 1, n):
            Hre = np.zeros((n, n), dtype=complex)
            Hre[i, j] = 1.0
            Hre[j, i] = 1.0
            Him = np.zeros((n, n), dtype=complex)
            Him[i, j] = 1j
            Him[j, i] = -1j
            re = 0.5 * probe(Hre)
            im = 0.5 * probe(Him)
            K[:, :, i, j] = re + 1j * im
            K[:, :, j, i] = re - 1j * im
    return K


def fim_apply(K, Rx):
    """Evaluate the FIM from its coefficient matrices (dual route to build_fim)."""
    return np.real(np.einsum("pqij,ij->pq", K.conj(), np.asarray(Rx, dtype=complex)))


def fim_jacobi_scale(M_ref):
    """Constant diagonal preconditioner diag(M_ref)^(-1/2) for Schur LMI blocks."""
    dg = np.maximum(np.diag(_as_matrix(M_ref)), 1e-300)
    return 1.0 / np.sqrt(dg)


def schur_crb_constraints(M_expr, crb_max, scale=None):
    """LMI encoding of tr(M^-1) <= crb_max for an affine cvxpy expression M_expr.

    Emits scaled slacks tau_i >= e_i^T (DMD)^-1 e_i via 3*k_s Schur blocks
    (D = diag(d), d an optional constant preconditioner for mixed parameter
    units) plus sum_i d_i^2 tau_i <= crb_max, which is exactly
    tr(M^-1) <= crb_max. Keeping the block corners at 1 and folding d into the
    trace row keeps all cone data O(1). Returns (tau, constraints).
    """
    import cvxpy as cp

    m = M_expr.shape[0]
    d = np.ones(m) if scale is None else np.asarray(scale, dtype=float)
    Msym = 0.5 * (M_expr + M_expr.T)
    Mscaled = cp.multiply(np.outer(d, d), Msym)
    tau = cp.Variable(m, name="crb_slack")
    cons = []
    for i in range(m):
        e = np.zeros((m, 1))
        e[i, 0] = 1.0
        blk = cp.bmat([[Mscaled, e], [e.T, cp.reshape(tau[i], (1, 1), order="F")]])
        cons.append(blk >> 0)
    cons.append((d ** 2 / crb_max) @ tau <= 1.0)
    return tau, cons
