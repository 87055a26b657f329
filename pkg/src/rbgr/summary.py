"""Posterior graph summaries: symmetrized covariate networks and signed
individual-level edges.

Directed quantities live in (p, p, *) tensors indexed [j, k, ...] = effect of
variable k in the regression of node j.  Symmetrization picks one direction
per (pair, covariate) by comparing posterior inclusion probabilities, ties
resolved toward the direction (j, k) with j < k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import other_nodes


@dataclass(frozen=True)
class EdgeRecord:
    """One symmetrized edge: key is the covariate index (population level)
    or the percentile (individual level)."""

    node_a: int
    node_b: int
    key: float
    value: float
    prob: float
    sign: int = 0


@dataclass
class SummaryTensors:
    """Directed and symmetrized population-level summaries."""

    pip: np.ndarray        # (p, p, q) directed inclusion probabilities
    alpha_hat: np.ndarray  # (p, p, q) directed posterior means
    sym_pip: np.ndarray    # (p, p, q) symmetric
    sym_alpha: np.ndarray  # (p, p, q) symmetric
    take_row: np.ndarray   # (p, p, q) bool: entry [j,k,h] True if the
                           # symmetrized value comes from regression j


def _position(p, j, k):
    """Row of variable k inside the (p-1)-row tensors of regression j."""
    return k if k < j else k - 1


def pip_alpha(draws, p):
    """Directed PIP tensor: posterior slab frequency per (j, k, h)."""
    pip = np.zeros((p, p, draws[0].slab.shape[2]))
    for dr in draws:
        pip[dr.node, other_nodes(p, dr.node), :] = dr.slab.mean(axis=0)
    return pip


def alpha_hat(draws, p):
    """Directed posterior-mean coefficient tensor."""
    ah = np.zeros((p, p, draws[0].alpha.shape[2]))
    for dr in draws:
        ah[dr.node, other_nodes(p, dr.node), :] = dr.alpha.mean(axis=0)
    return ah


def symmetrize_alpha(pips, alpha_hats, rule="min"):
    """Symmetrize coefficients by PIP comparison.

    rule='min' keeps the direction with the smaller PIP (the conservative
    default), rule='max' the larger.  Returns (sym_pip, sym_alpha, take_row).
    """
    if rule not in ("min", "max"):
        raise ValueError("rule must be 'min' or 'max'")
    p = pips.shape[0]
    pip_t = np.swapaxes(pips, 0, 1)
    if rule == "min":
        take_row = pips <= pip_t
    else:
        take_row = pips >= pip_t
    # ties -> direction with j < k in both mirror entries
    jj, kk = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
    tie = pips == pip_t
    take_row = np.where(tie, (jj < kk)[:, :, None], take_row)
    sym_pip = np.where(take_row, pips, pip_t)
    sym_alpha = np.where(take_row, alpha_hats, np.swapaxes(alpha_hats, 0, 1))
    return sym_pip, sym_alpha, take_row


def summarize_population(draws, p, rule="min") -> SummaryTensors:
    pip = pip_alpha(draws, p)
    ah = alpha_hat(draws, p)
    sym_pip, sym_alpha, take_row = symmetrize_alpha(pip, ah, rule)
    return SummaryTensors(pip=pip, alpha_hat=ah, sym_pip=sym_pip,
                          sym_alpha=sym_alpha, take_row=take_row)


def _pair_draw_arrays(draws, p, take_row):
    """Per-draw symmetrized coefficients for every unordered pair.

    Returns (pairs, alpha_sym (R, npairs, q), t_a (R, npairs), t_b (R, npairs))
    where pairs rows are (a, b) with a < b and t_a/t_b are the threshold draws
    of the two regressions.
    """
    iu = np.triu_indices(p, k=1)
    pairs = np.column_stack(iu)
    R = draws[0].alpha.shape[0]
    q = draws[0].alpha.shape[2]
    npairs = len(pairs)
    alpha_sym = np.empty((R, npairs, q))
    t_a = np.empty((R, npairs))
    t_b = np.empty((R, npairs))
    for idx, (a, b) in enumerate(pairs):
        fwd = draws[a].alpha[:, _position(p, a, b), :]
        rev = draws[b].alpha[:, _position(p, b, a), :]
        use_fwd = take_row[a, b, :]
        alpha_sym[:, idx, :] = np.where(use_fwd[None, :], fwd, rev)
        t_a[:, idx] = draws[a].t
        t_b[:, idx] = draws[b].t
    return pairs, alpha_sym, t_a, t_b


def epp_edge(draws, p, x, take_row):
    """Directed edge posterior probabilities and sign masses at covariate x.

    Per retained draw the symmetrized linear effect is thresholded by the
    drawing regression's own t; returns (epp, pos, neg), each (p, p), where
    entry [j, k] uses regression j's threshold.
    """
    pairs, alpha_sym, t_a, t_b = _pair_draw_arrays(draws, p, take_row)
    theta = alpha_sym @ np.asarray(x, dtype=np.float64)  # (R, npairs)
    epp = np.zeros((p, p))
    pos = np.zeros((p, p))
    neg = np.zeros((p, p))
    for t_dir, rows, cols in ((t_a, pairs[:, 0], pairs[:, 1]),
                              (t_b, pairs[:, 1], pairs[:, 0])):
        act = np.abs(theta) > t_dir
        epp[rows, cols] = act.mean(axis=0)
        pos[rows, cols] = (act & (theta > 0)).mean(axis=0)
        neg[rows, cols] = (act & (theta < 0)).mean(axis=0)
    return epp, pos, neg


def symmetrize_epp(epp_directed, rule="max"):
    """Symmetrize directed ePPs; returns (sym_epp, take_row).

    rule='max' keeps an edge when either direction qualifies, rule='min'
    requires both; ties pick the j < k direction.
    """
    if rule not in ("min", "max"):
        raise ValueError("rule must be 'min' or 'max'")
    p = epp_directed.shape[0]
    ept = epp_directed.T
    if rule == "max":
        take_row = epp_directed >= ept
    else:
        take_row = epp_directed <= ept
    jj, kk = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
    take_row = np.where(epp_directed == ept, jj < kk, take_row)
    sym = np.where(take_row, epp_directed, ept)
    return sym, take_row


def edge_sign(pos_prob, neg_prob):
    """Sign rule: +1 only when the positive mass strictly dominates."""
    return np.where(pos_prob > neg_prob, 1, -1)


def population_network(summary: SummaryTensors, c0=0.5):
    """Edges with symmetrized PIP above c0, plus per-covariate node degrees."""
    p, _, q = summary.sym_pip.shape
    records = []
    degrees = np.zeros((q, p), dtype=np.int64)
    iu = np.triu_indices(p, k=1)
    for h in range(q):
        sel = summary.sym_pip[:, :, h][iu] > c0
        for a, b in zip(iu[0][sel], iu[1][sel]):
            records.append(EdgeRecord(
                node_a=int(a), node_b=int(b), key=float(h),
                value=float(summary.sym_alpha[a, b, h]),
                prob=float(summary.sym_pip[a, b, h])))
            degrees[h, a] += 1
            degrees[h, b] += 1
    return records, degrees


def percentile_networks(draws, p, X, component, percentiles=(5, 25, 50, 75, 95),
                        c1=0.5, alpha_rule="min", edge_rule="max",
                        take_row=None):
    """Signed individual-level networks at empirical percentiles of one covariate.

    Query vectors fix every other component at its column mean and sweep
    ``component`` over the requested percentiles of its observed column.
    """
    X = np.asarray(X, dtype=np.float64)
    if take_row is None:
        take_row = summarize_population(draws, p, alpha_rule).take_row
    base = X.mean(axis=0)
    out = {}
    for pct in percentiles:
        x = base.copy()
        x[component] = np.percentile(X[:, component], pct)
        epp, pos, neg = epp_edge(draws, p, x, take_row)
        sym, dir_row = symmetrize_epp(epp, edge_rule)
        signs = edge_sign(np.where(dir_row, pos, pos.T),
                          np.where(dir_row, neg, neg.T))
        records = []
        iu = np.triu_indices(p, k=1)
        sel = sym[iu] > c1
        for a, b in zip(iu[0][sel], iu[1][sel]):
            records.append(EdgeRecord(
                node_a=int(a), node_b=int(b), key=float(pct),
                value=float(sym[a, b]), prob=float(sym[a, b]),
                sign=int(signs[a, b])))
        out[pct] = records
    return out


def epp_batch(draws, p, X_queries, take_row, chunk=200):
    """Symmetrized ePP, positive and negative sign masses for many query
    covariate vectors at once; returns arrays (nq, npairs) plus the pair list.

    Used for whole-sample edge scoring; thresholds follow each direction's
    own draws and the symmetrization rule 'max'.
    """
    Xq = np.asarray(X_queries, dtype=np.float64)
    pairs, alpha_sym, t_a, t_b = _pair_draw_arrays(draws, p, take_row)
    nq = Xq.shape[0]
    npairs = len(pairs)
    epp_a = np.empty((nq, npairs))
    epp_b = np.empty((nq, npairs))
    pos_a = np.empty((nq, npairs))
    neg_a = np.empty((nq, npairs))
    pos_b = np.empty((nq, npairs))
    neg_b = np.empty((nq, npairs))
    for s in range(0, nq, chunk):
        e = min(s + chunk, nq)
        theta = np.einsum("rkh,nh->rnk", alpha_sym, Xq[s:e])
        for t_dir, epp_o, pos_o, neg_o in ((t_a, epp_a, pos_a, neg_a),
                                           (t_b, epp_b, pos_b, neg_b)):
            act = np.abs(theta) > t_dir[:, None, :]
            epp_o[s:e] = act.mean(axis=0)
            pos_o[s:e] = (act & (theta > 0)).mean(axis=0)
            neg_o[s:e] = (act & (theta < 0)).mean(axis=0)
    use_a = epp_a >= epp_b  # tie -> (a, b) with a < b, the forward direction
    sym = np.where(use_a, epp_a, epp_b)
    pos = np.where(use_a, pos_a, pos_b)
    neg = np.where(use_a, neg_a, neg_b)
    return pairs, sym, np.where(pos > neg, 1, -1)
