"""Problem instances: dimensions, channels, targets, thresholds, hardware constants.

Scenarios are immutable after construction and reproducible: the RNG algorithm
(numpy PCG64) and seed are recorded in metadata, and identical inputs yield
bit-identical instances. dB/dBm values are accepted only at this interface and
converted once; all stored quantities are linear SI (watts, radians, meters).
"""

from dataclasses import dataclass, replace, field

import numpy as np
import yaml

from . import design_eval, power_models
from .array_sensing import steering

RNG_ALGORITHM = "PCG64"

# Child-stream tags so derived randomness depends only on the scenario seed
# and the purpose, never on call order.
SEED_TAG_ANALOG_INIT = 101
SEED_TAG_RANDOMIZE = 202


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(x):
    return 1e-3 * 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def watt_to_dbm(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float) / 1e-3)


def pathloss_db(r_m):
    """Distance-dependent attenuation 51.2 + 41.2*log10(r) in dB."""
    if np.any(np.asarray(r_m) <= 0):
        raise ValueError("distance must be positive")
    return 51.2 + 41.2 * np.log10(r_m)


def pathloss_amplitude(r_m):
    """Amplitude factor 10^(-PL_dB/20) applied to channel entries."""
    return 10.0 ** (-pathloss_db(r_m) / 20.0)


@dataclass(frozen=True, eq=False)
class Dimensions:
    n_tx: int
    n_rx: int
    n_rf: int
    k_ir: int
    k_er: int
    k_s: int
    dwell: int

    def __post_init__(self):
        if min(self.n_tx, self.n_rx, self.n_rf, self.dwell) < 1:
            raise ValueError("antenna/chain/dwell counts must be >= 1")
        if min(self.k_ir, self.k_er, self.k_s) < 0 or (self.k_ir + self.k_er + self.k_s) == 0:
            raise ValueError("receiver/target counts must be >= 0 with at least one positive")
        if not (self.k_ir <= self.n_rf <= self.n_tx <= self.n_rx):
            raise ValueError("need k_ir <= n_rf <= n_tx <= n_rx (spatial degrees of freedom)")


@dataclass(frozen=True, eq=False)
class Thresholds:
    sinr_min: np.ndarray      # per-IR, linear ratio
    crb_max: float            # trace bound, dimensionless
    eh_dc_min: np.ndarray     # per-ER, watts DC

    def __post_init__(self):
        object.__setattr__(self, "sinr_min", np.atleast_1d(np.asarray(self.sinr_min, dtype=float)))
        object.__setattr__(self, "eh_dc_min", np.atleast_1d(np.asarray(self.eh_dc_min, dtype=float)))
        if (self.sinr_min.size and self.sinr_min.min() <= 0) or self.crb_max <= 0 \
                or (self.eh_dc_min.size and self.eh_dc_min.min() <= 0):
            raise ValueError("thresholds must be strictly positive")


@dataclass(frozen=True, eq=False)
class HardwareConstants:
    p_ant_max: float = 1.5       # per-antenna output cap, watts
    eta_max: float = 0.38        # PA efficiency at saturation
    beta_pa: float = 0.5         # efficiency exponent; 0 = fixed efficiency
    p_rf: float = 0.5            # per-RF-chain draw, watts
    p_ps: float = 0.042          # per-phase-shifter draw, watts
    p_sw: float = 1e-3           # per-switch draw, watts
    p_static: float = 10.0       # baseline BS draw, watts
    # indicator-relaxation epsilon; bounds the relaxation's tangent slopes by
    # unit/eps, so pushing it much below 1e-3 wrecks interior-point scaling in
    # the SCA subproblems without changing any on/off ordering decision
    eps_indicator: float = 1e-3

    def __post_init__(self):
        if not (0 < self.eta_max <= 1):
            raise ValueError("eta_max must be in (0, 1]")
        if not (0 <= self.beta_pa <= 1):
            raise ValueError("beta_pa must be in [0, 1]")
        if self.eps_indicator <= 0:
            raise ValueError("eps_indicator must be positive")
        if min(self.p_ant_max, self.p_rf, self.p_ps, self.p_sw, self.p_static) < 0:
            raise ValueError("power constants must be nonnegative")


@dataclass(frozen=True, eq=False)
class Scenario:
    dims: Dimensions
    h: np.ndarray            # k_ir x n_tx, IR channels (linear amplitude)
    d: np.ndarray            # k_er x n_tx, ER channels
    theta: np.ndarray        # k_s target angles, radians
    beta_coeff: np.ndarray   # k_s complex reflection coefficients
    noise_ir: np.ndarray     # per-IR noise power, watts
    noise_sense: float       # sensing noise power, watts
    thresholds: Thresholds
    hw: HardwareConstants
    eh_params: tuple         # per-ER (m_sat W, a 1/W, b W)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("h", "d", "theta", "beta_coeff", "noise_ir"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.h.shape != (self.dims.k_ir, self.dims.n_tx):
            raise ValueError("h must be k_ir x n_tx")
        if self.d.shape != (self.dims.k_er, self.dims.n_tx):
            raise ValueError("d must be k_er x n_tx")
        if self.noise_sense <= 0 or (self.noise_ir.size and self.noise_ir.min() <= 0):
            raise ValueError("noise powers must be strictly positive")

    @property
    def seed(self):
        return self.metadata.get("seed")


def default_thresholds(k_ir, k_er, sinr_db=6.0, crb_max=0.1, eh_dc_dbm=-2.0):
    return Thresholds(
        sinr_min=np.full(k_ir, db_to_lin(sinr_db)),
        crb_max=crb_max,
        eh_dc_min=np.full(k_er, dbm_to_watt(eh_dc_dbm)),
    )


PAPER_DISTANCES = {"ir": 50.0, "target": 50.0, "er": 10.0}
PAPER_EH_PARAMS = (0.02, 6400.0, 0.003)
PAPER_NOISE_DBM = -103.0


def full_on_analog(n_tx, n_rf, seed):
    """Fully connected random-phase analog beamformer, modulus 1/sqrt(n_tx) everywhere."""
    rng = np.random.default_rng([int(seed), SEED_TAG_ANALOG_INIT])
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_tx, n_rf))
    return np.exp(1j * phases) / np.sqrt(n_tx)


def generate_scenario(seed, dims, distances=None, rician_k_db=3.0, thresholds=None,
                      hw=None, eh_params=None, theta_list=None, noise_dbm=PAPER_NOISE_DBM):
    """Draw one instance: Rayleigh IR channels, Rician ER channels, uniform target angles.

    Channel entries are scaled by the path-loss amplitude for the respective
    distance. Reflection-coefficient magnitudes use the same law (round trip
    folded into one coefficient), phases uniform. Draw order is fixed (IR
    channels, target angles, reflection phases, ER angles, ER scatter) so one
    seed maps to one instance bit-for-bit.
    """
    distances = dict(PAPER_DISTANCES if distances is None else distances)
    if min(distances.values()) <= 0:
        raise ValueError("distance must be positive")
    rng = np.random.default_rng(int(seed))
    amp_ir = pathloss_amplitude(distances["ir"])
    amp_t = pathloss_amplitude(distances["target"])
    amp_er = pathloss_amplitude(distances["er"])

    h = amp_ir * (rng.standard_normal((dims.k_ir, dims.n_tx))
                  + 1j * rng.standard_normal((dims.k_ir, dims.n_tx))) / np.sqrt(2.0)
    if theta_list is not None:
        theta = np.asarray(theta_list, dtype=float)
        if theta.shape != (dims.k_s,):
            raise ValueError("theta_list must have k_s entries")
    else:
        theta = rng.uniform(-np.pi / 3, np.pi / 3, size=dims.k_s)
    beta_coeff = amp_t * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=dims.k_s))
    er_angles = rng.uniform(-np.pi / 3, np.pi / 3, size=dims.k_er)
    scatter = (rng.standard_normal((dims.k_er, dims.n_tx))
               + 1j * rng.standard_normal((dims.k_er, dims.n_tx))) / np.sqrt(2.0)
    k_lin = db_to_lin(rician_k_db)
    los_w = 1.0 / np.sqrt(1.0 + 1.0 / k_lin) if k_lin > 0 else 0.0
    scat_w = 1.0 / np.sqrt(1.0 + k_lin)
    d = np.zeros((dims.k_er, dims.n_tx), dtype=complex)
    for j in range(dims.k_er):
        d[j] = amp_er * (los_w * steering(er_angles[j], dims.n_tx) + scat_w * scatter[j])

    noise_w = float(dbm_to_watt(noise_dbm))
    return Scenario(
        dims=dims,
        h=h,
        d=d,
        theta=theta,
        beta_coeff=beta_coeff,
        noise_ir=np.full(dims.k_ir, noise_w),
        noise_sense=noise_w,
        thresholds=thresholds if thresholds is not None else default_thresholds(dims.k_ir, dims.k_er),
        hw=hw if hw is not None else HardwareConstants(),
        eh_params=tuple([tuple(PAPER_EH_PARAMS)] * dims.k_er) if eh_params is None else tuple(map(tuple, eh_params)),
        metadata={"seed": int(seed), "rng_algorithm": RNG_ALGORITHM,
                  "distances": distances, "rician_k_db": float(rician_k_db)},
    )


def paper_default_scenario(seed):
    """Full-scale instance with the reference hardware constants and thresholds."""
    dims = Dimensions(n_tx=32, n_rx=32, n_rf=16, k_ir=6, k_er=5, k_s=5, dwell=30)
    return generate_scenario(seed, dims)


def reference_design(scn, seed=None):
    """Explicit strictly feasible design: full-on random-phase F plus matched digital beams.

    Per-user beams are matched filters in the chain space, the sensing
    covariance is a scaled identity, and the whole covariance is scaled so the
    hottest antenna sits at half its power cap. Returns (F0, w_list, S).
    """
    dims = scn.dims
    seed = scn.seed if seed is None else seed
    F0 = full_on_analog(dims.n_tx, dims.n_rf, seed)
    beam_fraction = 0.75 if dims.k_ir else 0.0
    dirs = []
    for k in range(dims.k_ir):
        eff = F0.conj().T @ scn.h[k]
        nrm = np.linalg.norm(eff)
        dirs.append(eff / nrm if nrm > 0 else np.ones(dims.n_rf) / np.sqrt(dims.n_rf))
    Rtot_u = (1.0 - beam_fraction) / dims.n_rf * np.eye(dims.n_rf, dtype=complex)
    for u in dirs:
        Rtot_u += (beam_fraction / max(dims.k_ir, 1)) * np.outer(u, np.conj(u))
    p_u = np.real(np.diag(F0 @ Rtot_u @ F0.conj().T))
    scale = 0.5 * scn.hw.p_ant_max / p_u.max()
    w_list = [np.sqrt(scale * beam_fraction / dims.k_ir) * u for u in dirs]
    S = scale * (1.0 - beam_fraction) / dims.n_rf * np.eye(dims.n_rf, dtype=complex)
    return F0, w_list, S


DESK_DIMS = Dimensions(n_tx=8, n_rx=8, n_rf=4, k_ir=2, k_er=1, k_s=1, dwell=10)
# the analog covariance lift is an (n_tx*n_rf)-dim complex PSD cone, so interior
# point cost grows ~ (n_tx*n_rf)^6; this scale keeps end-to-end suites fast
COMPACT_DIMS = Dimensions(n_tx=6, n_rx=6, n_rf=3, k_ir=2, k_er=1, k_s=1, dwell=10)


def desk_scenario(seed, dims=DESK_DIMS, distances=None, rician_k_db=3.0,
                  sinr_slack=4.0, crb_slack=4.0, eh_slack=4.0):
    """Small instance with thresholds calibrated to be strictly feasible.

    Thresholds are set from an explicit reference design (see reference_design)
    with the given slack factors, so the instance provably admits a feasible
    point at full analog connectivity.
    """
    scn = generate_scenario(seed, dims, distances=distances, rician_k_db=rician_k_db)
    F0, w_list, S = reference_design(scn)
    thr = calibrated_thresholds(scn, F0, w_list, S, sinr_slack, crb_slack, eh_slack)
    scn = replace(scn, thresholds=thr)
    scn.metadata.update({"calibration": {"sinr_slack": sinr_slack, "crb_slack": crb_slack,
                                         "eh_slack": eh_slack}})
    return scn


def calibrated_thresholds(scn, F, w_list, S, sinr_slack, crb_slack, eh_slack):
    """Thresholds that the given design satisfies with the stated slack factors."""
    dims = scn.dims
    sinr_min = np.zeros(0)
    if dims.k_ir:
        sinr = design_eval.exact_sinr(scn.h, F, w_list, S, scn.noise_ir)
        sinr_min = sinr / sinr_slack
    crb_max = 1.0
    if dims.k_s:
        crb_max = crb_slack * design_eval.exact_crb(scn, F, w_list, S)
    eh_dc_min = np.zeros(0)
    if dims.k_er:
        p_in = design_eval.eh_inputs(scn.d, F, w_list, S)
        eh_dc_min = np.array([power_models.eh_dc(p / eh_slack, *scn.eh_params[j])
                              for j, p in enumerate(p_in)])
    return Thresholds(sinr_min=sinr_min, crb_max=crb_max, eh_dc_min=eh_dc_min)


# ---------------------------------------------------------------------------
# Config-file round trip (YAML, nested sections, complex as interleaved re/im)

def _interleave(arr):
    arr = np.asarray(arr, dtype=complex)
    flat = np.empty(arr.shape + (2,))
    flat[..., 0] = arr.real
    flat[..., 1] = arr.imag
    return flat.reshape(arr.shape[:-1] + (-1,)).tolist()

def _deinterleave(rows):
    arr = np.asarray(rows, dtype=float)
    arr = arr.reshape(arr.shape[:-1] + (-1, 2))
    return arr[..., 0] + 1j * arr[..., 1]


def scenario_to_config(scn):
    """Plain-dict form of a scenario (base SI units, complex interleaved re/im)."""
    d = scn.dims
    return {
        "dims": {"n_tx": d.n_tx, "n_rx": d.n_rx, "n_rf": d.n_rf,
                 "k_ir": d.k_ir, "k_er": d.k_er, "k_s": d.k_s, "dwell": d.dwell},
        "noise": {"ir_w": scn.noise_ir.tolist(), "sense_w": float(scn.noise_sense)},
        "thresholds": {"sinr_min": scn.thresholds.sinr_min.tolist(),
                       "crb_max": float(scn.thresholds.crb_max),
                       "eh_dc_min_w": scn.thresholds.eh_dc_min.tolist()},
        "hardware": {"p_ant_max": scn.hw.p_ant_max, "eta_max": scn.hw.eta_max,
                     "beta_pa": scn.hw.beta_pa, "p_rf": scn.hw.p_rf, "p_ps": scn.hw.p_ps,
                     "p_sw": scn.hw.p_sw, "p_static": scn.hw.p_static,
                     "eps_indicator": scn.hw.eps_indicator},
        "eh_params": [list(p) for p in scn.eh_params],
        "channels": {"h_re_im": _interleave(scn.h) if d.k_ir else [],
                     "d_re_im": _interleave(scn.d) if d.k_er else []},
        "targets": {"theta_rad": scn.theta.tolist(),
                    "beta_re_im": _interleave(scn.beta_coeff) if d.k_s else []},
        "metadata": dict(scn.metadata),
    }


def scenario_from_config(cfg):
    d = cfg["dims"]
    dims = Dimensions(n_tx=d["n_tx"], n_rx=d["n_rx"], n_rf=d["n_rf"],
                      k_ir=d["k_ir"], k_er=d["k_er"], k_s=d["k_s"], dwell=d["dwell"])
    t = cfg["thresholds"]
    hwc = cfg["hardware"]
    ch = cfg["channels"]
    h = _deinterleave(ch["h_re_im"]).reshape(dims.k_ir, dims.n_tx) if dims.k_ir else np.zeros((0, dims.n_tx), complex)
    dd = _deinterleave(ch["d_re_im"]).reshape(dims.k_er, dims.n_tx) if dims.k_er else np.zeros((0, dims.n_tx), complex)
    beta = (_deinterleave(np.asarray(cfg["targets"]["beta_re_im"]).reshape(1, -1))[0]
            if dims.k_s else np.zeros(0, complex))
    return Scenario(
        dims=dims,
        h=h,
        d=dd,
        theta=np.asarray(cfg["targets"]["theta_rad"], dtype=float),
        beta_coeff=beta,
        noise_ir=np.asarray(cfg["noise"]["ir_w"], dtype=float),
        noise_sense=float(cfg["noise"]["sense_w"]),
        thresholds=Thresholds(sinr_min=np.asarray(t["sinr_min"], float), crb_max=float(t["crb_max"]),
                              eh_dc_min=np.asarray(t["eh_dc_min_w"], float)),
        hw=HardwareConstants(**hwc),
        eh_params=tuple(tuple(p) for p in cfg["eh_params"]),
        metadata=dict(cfg.get("metadata", {})),
    )


def save_scenario(scn, path):
    with open(path, "w") as fh:
        yaml.safe_dump({"scenario": scenario_to_config(scn)}, fh, sort_keys=False,
                       default_flow_style=None)


def load_scenario(path):
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    return scenario_from_config(cfg["scenario"])
