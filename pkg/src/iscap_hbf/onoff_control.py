"""Dynamic on-off control for RF chains and phase shifters.

Both searches rank hardware elements by how little they contribute to the
current design and try switching off ascending prefixes of that ranking,
re-running the beamforming optimization for each trial configuration:

  * RF chains are ranked by the per-chain beamforming power
    v_n = sum_k |w_k[n]|^2 + S_nn of the current digital design.
  * Phase shifters are ranked by the modulus of the corresponding entry of
    the pre-projection randomization candidate, which measures how much the
    relaxed analog covariance actually uses each shifter.

The orderings are invariant to the indicator-relaxation epsilon; only the
trial evaluations (done by a caller-supplied function so this module stays
free of solver dependencies) decide which configuration wins, by exact
indicator-based power on exactly feasible designs.
"""

import numpy as np

from . import power_models


def full_masks(n_tx, n_rf):
    return np.ones(n_rf, dtype=bool), np.ones((n_tx, n_rf), dtype=bool)


def rf_priority(w_list, S):
    """Chains in ascending order of beamforming power (stable tie-break)."""
    v = power_models.chain_powers(w_list, S)
    return np.argsort(v, kind="stable")


def rf_mask_candidates(w_list, S, k_ir):
    """All-on mask plus masks switching off ascending prefixes of low-power chains.

    At least max(k_ir, 1) chains stay on: fewer cannot carry the required
    number of independent streams.
    """
    order = rf_priority(w_list, S)
    n_rf = order.size
    keep_min = max(int(k_ir), 1)
    masks = []
    for n_off in range(0, n_rf - keep_min + 1):
        mask = np.ones(n_rf, dtype=bool)
        mask[order[:n_off]] = False
        masks.append(mask)
    return masks


def ps_priority(F_bar, ps_mask):
    """Currently-on shifters in ascending order of |pre-projection entry|."""
    F_bar = np.asarray(F_bar, dtype=complex)
    weight = np.abs(F_bar)
    on = np.argwhere(ps_mask)
    order = np.argsort([weight[i, j] for i, j in on], kind="stable")
    return [tuple(on[t]) for t in order]


def ps_prefix_schedule(n_on, n_cols, refine_around=None):
    """Prefix lengths to try: geometric coverage plus neighbors of a pivot.

    The maximum prefix leaves one shifter per column so no trial silently
    degenerates into an RF-chain decision.
    """
    top = max(n_on - n_cols, 0)
    lengths = set()
    m = 1
    while m < top:
        lengths.add(m)
        m *= 2
    if top > 0:
        lengths.add(top)
    if refine_around is not None:
        for d in (-2, -1, 1, 2):
            m = refine_around + d
            if 0 < m <= top:
                lengths.add(m)
    return sorted(lengths)


def ps_mask_candidates(F_bar, ps_mask, refine_around=None):
    """Masks switching off ascending prefixes of the shifter priority list."""
    ps_mask = np.asarray(ps_mask, dtype=bool)
    order = ps_priority(F_bar, ps_mask)
    lengths = ps_prefix_schedule(len(order), ps_mask.shape[1], refine_around)
    masks = []
    for m in lengths:
        cand = ps_mask.copy()
        for i, j in order[:m]:
            cand[i, j] = False
        if np.any(cand.sum(axis=0)[np.any(ps_mask, axis=0)] == 0):
            continue  # emptied a live column; that choice belongs to the RF search
        masks.append((m, cand))
    return masks


def search_best(trials, evaluate):
    """Evaluate (rf_mask, ps_mask) pairs, return the best feasible record.

    evaluate must return a dict with at least {"feasible": bool, "power":
    float}; records are compared by exact power. All trial records are
    returned for reporting, in evaluation order.
    """
    records = []
    best = None
    for rf_mask, ps_mask in trials:
        rec = evaluate(rf_mask, ps_mask)
        rec = dict(rec, rf_mask=np.array(rf_mask), ps_mask=np.array(ps_mask))
        records.append(rec)
        if rec["feasible"] and (best is None or rec["power"] < best["power"]):
            best = rec
    return best, records


def mask_grid_text(ps_mask):
    """Text grid of a shifter mask: rows = antennas, columns = chains, 1 = on."""
    ps_mask = np.asarray(ps_mask, dtype=bool)
    return "\n".join("".join("1" if x else "0" for x in row) for row in ps_mask)


def mask_grid_parse(text):
    rows = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not rows or any(len(r) != len(rows[0]) for r in rows) \
            or any(ch not in "01" for r in rows for ch in r):
        raise ValueError("mask grid must be rectangular lines of 0/1")
    return np.array([[ch == "1" for ch in row] for row in rows], dtype=bool)
