"""Experiment front end: threshold sweeps and design dumps as CSV.

Config files are YAML. A sweep config looks like

    axis: sinr_db            # sinr_db | crb_max | eh_dbm
    values: [2.0, 4.0, 6.0]  # strictly monotone; dB / linear / dBm per axis
    relative: false          # true: values offset (dB axes) or scale
                             # (crb_max) the per-seed calibrated thresholds
    schemes: [no_onoff, joint]
    seeds: [0, 1]
    dims: {n_tx: 8, n_rx: 8, n_rf: 4, k_ir: 2, k_er: 1, k_s: 1, dwell: 10}
    paper_scale: false       # explicit opt-in to 32/32/16 (very slow)
    fixed: {sinr_db: 6.0, crb_max: 0.1, eh_dbm: -2.0}   # optional absolute
                             # overrides for the non-swept thresholds
    options: {outer_iters: 3, analog_iters: 6, seed: 0}

dB and dBm appear only at this boundary; everything downstream is linear SI.
Output rows are one per (axis value, scheme, seed) plus a repeated
mean-over-seeds column, in deterministic order; re-running the same config
reproduces the file byte-for-byte except the timestamp header line.

Exit codes: 0 success, 1 usage/config error, 2 no feasible cell, 3 solver
failure with no usable output.
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from . import ao_driver, design_eval, onoff_control, scenario

AXES = ("sinr_db", "crb_max", "eh_dbm")
PAPER_DIMS = scenario.Dimensions(n_tx=32, n_rx=32, n_rf=16, k_ir=2, k_er=1, k_s=1, dwell=10)

CSV_COLUMNS = ["axis", "value", "scheme", "seed", "status", "total_w", "p_pa_w",
               "p_rf_w", "p_ps_w", "p_sw_w", "p_static_w", "rf_on", "ps_on",
               "worst_slack", "mean_total_w"]


class UsageError(Exception):
    pass


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def dbm_to_watt(x):
    return 1e-3 * db_to_lin(x)


@dataclass
class SweepSpec:
    axis: str
    values: list
    schemes: list
    seeds: list
    dims: scenario.Dimensions = scenario.DESK_DIMS
    fixed: dict = field(default_factory=dict)
    relative: bool = False
    options: ao_driver.SolveOptions = field(default_factory=ao_driver.SolveOptions)

    def validate(self):
        if self.axis not in AXES:
            raise UsageError("axis must be one of %s, got %r" % ((AXES,), self.axis))
        vals = np.asarray(self.values, dtype=float)
        if vals.size < 2 or not (np.all(np.diff(vals) > 0) or np.all(np.diff(vals) < 0)):
            raise UsageError("values must be a strictly monotone list of at least 2 numbers")
        if not self.schemes:
            raise UsageError("at least one scheme is required")
        for s in self.schemes:
            if s not in ao_driver.SCHEMES:
                raise UsageError("unknown scheme %r; expected one of %s" % (s, (ao_driver.SCHEMES,)))
        if not self.seeds:
            raise UsageError("at least one seed is required")
        for k in self.fixed:
            if k not in AXES:
                raise UsageError("fixed thresholds accept keys %s, got %r" % ((AXES,), k))


def _parse_dims(node):
    if node is None:
        return scenario.DESK_DIMS
    try:
        return scenario.Dimensions(**{k: int(v) for k, v in dict(node).items()})
    except TypeError as e:
        raise UsageError("bad dims block: %s" % e)


def _parse_options(node):
    opts = ao_driver.SolveOptions()
    for k, v in dict(node or {}).items():
        if not hasattr(opts, k):
            raise UsageError("unknown solve option %r" % k)
        setattr(opts, k, type(getattr(opts, k))(v))
    return opts


def load_sweep_spec(cfg):
    cfg = dict(cfg or {})
    dims = PAPER_DIMS if cfg.get("paper_scale") else _parse_dims(cfg.get("dims"))
    if dims.n_tx * dims.n_rf > 64:
        print("warning: analog lift dimension %d; expect each analog solve to "
              "take minutes to hours at this scale" % (dims.n_tx * dims.n_rf),
              file=sys.stderr)
    try:
        spec = SweepSpec(
            axis=cfg.get("axis", ""),
            values=list(cfg.get("values", [])),
            schemes=list(cfg.get("schemes", [])),
            seeds=[int(s) for s in cfg.get("seeds", [])],
            dims=dims,
            fixed=dict(cfg.get("fixed", {}) or {}),
            relative=bool(cfg.get("relative", False)),
            options=_parse_options(cfg.get("options")),
        )
    except (TypeError, ValueError) as e:
        raise UsageError(str(e))
    spec.validate()
    return spec


def _cell_thresholds(scn, spec, value):
    """Thresholds for one sweep cell: axis value applied on top of the
    scenario's calibrated thresholds and any fixed absolute overrides."""
    thr = scn.thresholds
    sinr = thr.sinr_min
    crb = thr.crb_max
    eh = thr.eh_dc_min
    if "sinr_db" in spec.fixed:
        sinr = np.full_like(sinr, db_to_lin(spec.fixed["sinr_db"]))
    if "crb_max" in spec.fixed:
        crb = float(spec.fixed["crb_max"])
    if "eh_dbm" in spec.fixed:
        eh = np.full_like(eh, dbm_to_watt(spec.fixed["eh_dbm"]))
    if spec.axis == "sinr_db":
        sinr = thr.sinr_min * db_to_lin(value) if spec.relative \
            else np.full_like(thr.sinr_min, db_to_lin(value))
    elif spec.axis == "crb_max":
        crb = thr.crb_max * float(value) if spec.relative else float(value)
    else:
        eh = thr.eh_dc_min * db_to_lin(value) if spec.relative \
            else np.full_like(thr.eh_dc_min, dbm_to_watt(value))
    return replace(scn, thresholds=scenario.Thresholds(sinr_min=sinr, crb_max=crb,
                                                       eh_dc_min=eh))


def _tightness_order(axis, values):
    """Indices from the tightest cell to the loosest along the axis."""
    vals = np.asarray(values, dtype=float)
    # higher SINR and EH requirements are tighter; lower CRB bound is tighter
    idx = np.argsort(vals, kind="stable")
    return idx if axis == "crb_max" else idx[::-1]


def _design_row(axis, value, scheme, seed, res):
    row = {"axis": axis, "value": "%.10g" % value, "scheme": scheme,
           "seed": seed, "status": res.status, "mean_total_w": ""}
    if res.feasible:
        pw = res.power
        row.update(total_w="%.10g" % pw.total, p_pa_w="%.10g" % pw.p_pa,
                   p_rf_w="%.10g" % pw.p_rf, p_ps_w="%.10g" % pw.p_ps,
                   p_sw_w="%.10g" % pw.p_sw, p_static_w="%.10g" % pw.p_static,
                   rf_on=int(res.rf_mask.sum()) if res.rf_mask is not None else "",
                   ps_on=int(res.ps_mask.sum()) if res.ps_mask is not None else "",
                   worst_slack="%.3e" % res.slacks["worst"])
    else:
        row.update(total_w="", p_pa_w="", p_rf_w="", p_ps_w="", p_sw_w="",
                   p_static_w="", rf_on="", ps_on="", worst_slack="")
    return row


def run_sweep(spec, out_path):
    """Evaluate the sweep grid and write the CSV. Returns the exit code.

    Per (scheme, seed) the cells are solved from the tightest axis value to
    the loosest, carrying the best design forward: a design feasible under a
    tighter threshold stays feasible (and has identical power) under a looser
    one, so reported totals are exactly monotone along the axis even when a
    single cell's search ends early.
    """
    spec.validate()
    results = {}
    n_errors = 0
    for seed in spec.seeds:
        scn_base = scenario.desk_scenario(seed, dims=spec.dims)
        for scheme in spec.schemes:
            carried = None
            for i in _tightness_order(spec.axis, spec.values):
                value = float(spec.values[i])
                scn = _cell_thresholds(scn_base, spec, value)
                try:
                    res = ao_driver.solve_instance(scn, scheme, spec.options, cache={})
                except Exception:
                    n_errors += 1
                    res = ao_driver.DesignResult(scheme=scheme, status="infeasible",
                                                 meta={"error": True})
                if carried is not None and carried.total < res.total \
                        and design_eval.is_feasible(scn, carried.F, carried.w, carried.S):
                    res = carried
                if res.feasible:
                    carried = res
                results[(i, scheme, seed)] = res

    rows = []
    any_feasible = False
    for i, value in enumerate(spec.values):
        for scheme in spec.schemes:
            totals = [results[(i, scheme, seed)].total for seed in spec.seeds
                      if results[(i, scheme, seed)].feasible]
            mean = "%.10g" % float(np.mean(totals)) if totals else ""
            any_feasible |= bool(totals)
            for seed in spec.seeds:
                row = _design_row(spec.axis, float(value), scheme, seed,
                                  results[(i, scheme, seed)])
                row["mean_total_w"] = mean
                rows.append(row)

    with open(out_path, "w", newline="") as fh:
        fh.write("# generated %s\n" % time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()))
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    if any_feasible:
        return 0
    return 3 if n_errors else 2


def dump_design(scn, scheme, out_prefix, opts=None):
    """Write per-antenna transmit powers and the shifter on-off grid.

    Creates <prefix>_antennas.csv and, for hybrid schemes, <prefix>_mask.txt.
    Returns the exit code (2 and no files if the instance came out infeasible).
    """
    res = ao_driver.solve_instance(scn, scheme, opts or ao_driver.SolveOptions())
    if not res.feasible:
        return 2
    p_out = design_eval.per_antenna_power(res.F, res.w, res.S)
    cov_trace = float(np.real(np.trace(design_eval.tx_covariance(res.F, res.w, res.S))))
    if abs(p_out.sum() - cov_trace) > 1e-8 * max(cov_trace, 1e-30):
        raise AssertionError("per-antenna powers do not sum to the covariance trace")
    with open(out_prefix + "_antennas.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["antenna", "p_out_w"])
        for n, p in enumerate(p_out):
            writer.writerow([n, "%.10g" % p])
    if res.ps_mask is not None:
        with open(out_prefix + "_mask.txt", "w") as fh:
            fh.write(onoff_control.mask_grid_text(res.ps_mask) + "\n")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="iscap-hbf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a threshold sweep from a YAML config")
    p_sweep.add_argument("--config", required=True, help="YAML sweep config path")
    p_sweep.add_argument("--out", required=True, help="output CSV path")

    p_dump = sub.add_parser("dump", help="solve one instance and dump the design")
    p_dump.add_argument("--seed", type=int, default=0)
    p_dump.add_argument("--scheme", default="joint", choices=ao_driver.SCHEMES)
    p_dump.add_argument("--out", required=True, help="output file prefix")
    p_dump.add_argument("--beta", type=float, default=None,
                        help="override the PA efficiency exponent")
    p_dump.add_argument("--dims", default=None,
                        help="comma list n_tx,n_rx,n_rf,k_ir,k_er,k_s,dwell")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command == "sweep":
            with open(args.config) as fh:
                cfg = yaml.safe_load(fh)
            return run_sweep(load_sweep_spec(cfg), args.out)
        dims = scenario.DESK_DIMS
        if args.dims:
            parts = [int(x) for x in args.dims.split(",")]
            if len(parts) != 7:
                raise UsageError("--dims needs 7 integers")
            dims = scenario.Dimensions(*parts)
        scn = scenario.desk_scenario(args.seed, dims=dims)
        if args.beta is not None:
            scn = replace(scn, hw=replace(scn.hw, beta_pa=float(args.beta)))
        return dump_design(scn, args.scheme, args.out,
                           ao_driver.SolveOptions(seed=args.seed))
    except UsageError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return 1
    except OSError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
