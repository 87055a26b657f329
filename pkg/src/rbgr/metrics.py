"""Selection metrics, FDR-based cutoffs, Geweke convergence checks and the
non-normality H-score."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.special import ndtr

NO_SELECTION_CUTOFF = 2.0  # returned by fdr_cutoff when no K qualifies


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class RocCurve:
    """ROC points as (specificity, sensitivity), with AUC and normalized pAUC."""

    specificity: np.ndarray
    sensitivity: np.ndarray
    auc: float
    pauc: float


def confusion(selected, truth) -> ConfusionCounts:
    selected = np.asarray(selected, dtype=bool).ravel()
    truth = np.asarray(truth, dtype=bool).ravel()
    if selected.shape != truth.shape:
        raise ValueError("selected and truth must have the same size")
    return ConfusionCounts(
        tp=int(np.sum(selected & truth)),
        fp=int(np.sum(selected & ~truth)),
        tn=int(np.sum(~selected & ~truth)),
        fn=int(np.sum(~selected & truth)),
    )


def mcc(c: ConfusionCounts) -> float:
    """Matthews correlation; 0 by convention when any marginal is empty."""
    denom = ((c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn))
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def roc(scores, labels) -> RocCurve:
    """Threshold-sweep ROC over the unique scores.

    The AUC accumulates integer pair counts before a single final division,
    so it agrees exactly with the tie-aware pairwise-comparison probability.
    The pAUC integrates sensitivity over specificity in [0.8, 1] and is
    normalized by the window width 0.2.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=bool).ravel()
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same size")
    n1 = int(labels.sum())
    n0 = labels.size - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("roc needs both classes present")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    l_sorted = labels[order]
    # group ties: positions where a new distinct score starts
    new_grp = np.concatenate(([True], s_sorted[1:] != s_sorted[:-1]))
    grp_id = np.cumsum(new_grp) - 1
    n_grp = grp_id[-1] + 1
    tp_inc = np.bincount(grp_id, weights=l_sorted, minlength=n_grp)
    fp_inc = np.bincount(grp_id, weights=~l_sorted, minlength=n_grp)
    tp = np.concatenate(([0.0], np.cumsum(tp_inc)))
    fp = np.concatenate(([0.0], np.cumsum(fp_inc)))
    # trapezoid in integer units: sum fp_inc * (tp_before + tp_after)
    numer = np.sum(fp_inc * (tp[:-1] + tp[1:]))
    auc = numer / (2.0 * n1 * n0)
    sens = tp / n1
    spec = 1.0 - fp / n0
    pauc = _pauc(spec, sens)
    return RocCurve(specificity=spec, sensitivity=sens, auc=float(auc),
                    pauc=float(pauc))


def _pauc(spec, sens, lo=0.8):
    """Area under sensitivity over specificity in [lo, 1], normalized."""
    # spec runs from 1 down to 0 along the sweep
    area = 0.0
    for i in range(len(spec) - 1):
        s1, s2 = spec[i], spec[i + 1]  # s1 >= s2
        y1, y2 = sens[i], sens[i + 1]
        hi_s, lo_s = s1, max(s2, lo)
        if hi_s <= lo:
            break
        if s2 < lo < s1:  # interpolate the crossing
            y2 = y1 + (y2 - y1) * (s1 - lo) / (s1 - s2)
        area += (hi_s - lo_s) * 0.5 * (y1 + y2)
    return area / (1.0 - lo)


def sign_mcc(est_signs, true_signs, mask):
    """MCC over {+, -} restricted to entries where both sides call an edge.

    Returns (value, n_compared); an empty restriction gives (0.0, 0).
    """
    est = np.asarray(est_signs).ravel()
    tru = np.asarray(true_signs).ravel()
    msk = np.asarray(mask, dtype=bool).ravel()
    if not msk.any():
        return 0.0, 0
    c = confusion((est[msk] > 0), (tru[msk] > 0))
    return mcc(c), int(msk.sum())


def fdr_cutoff(Q, alpha):
    """Largest-K mean-false-discovery cutoff.

    Sorts Q descending and returns Q_(K*) for the largest K whose running
    mean of (1 - Q) stays strictly below alpha; a sentinel above 1 selects
    nothing when no K qualifies.
    """
    Q = np.sort(np.asarray(Q, dtype=np.float64).ravel())[::-1]
    if Q.size == 0:
        return NO_SELECTION_CUTOFF
    run = np.cumsum(1.0 - Q) / np.arange(1, Q.size + 1)
    ok = np.nonzero(run < alpha)[0]
    if ok.size == 0:
        return NO_SELECTION_CUTOFF
    return float(Q[ok[-1]])


def geweke(chain, frac_first=0.2, frac_last=0.2, batches=20):
    """Geweke mean-equality z score between early and late chain segments.

    Segment variances of the mean use non-overlapping batch means (spectral
    estimate at frequency zero).  Returns (z, two-sided p).
    """
    chain = np.asarray(chain, dtype=np.float64).ravel()
    n = chain.size
    n1 = max(int(math.floor(frac_first * n)), 2)
    n2 = max(int(math.floor(frac_last * n)), 2)
    seg1 = chain[:n1]
    seg2 = chain[n - n2:]
    m1, v1 = _batch_mean_var(seg1, batches)
    m2, v2 = _batch_mean_var(seg2, batches)
    num = m1 - m2
    den = math.sqrt(v1 + v2)
    if num == 0.0:
        z = 0.0
    elif den == 0.0:
        z = math.inf if num > 0 else -math.inf
    else:
        z = num / den
    p = float(math.erfc(abs(z) / math.sqrt(2.0))) if np.isfinite(z) else 0.0
    return z, p


def _batch_mean_var(seg, batches):
    """Segment mean and the batch-means estimate of its variance."""
    b = min(batches, len(seg))
    m = len(seg) // b
    used = seg[:b * m]
    bm = used.reshape(b, m).mean(axis=1)
    mean = float(used.mean())
    if b < 2:
        return mean, 0.0
    var_mean = float(bm.var(ddof=1)) / b
    return mean, var_mean


def geweke_suite(alpha_chains, level=0.05, **kw):
    """Geweke checks for every coefficient chain with Bonferroni adjustment.

    ``alpha_chains`` maps node -> draws array (R, p-1, q).  Returns a list of
    (node, row, covariate, z, p, passed) and the overall pass flag; the
    adjusted test fails when any raw p < level / n_tests.
    """
    rows = []
    n_tests = sum(arr.shape[1] * arr.shape[2] for arr in alpha_chains.values())
    thresh = level / max(n_tests, 1)
    all_pass = True
    for node in sorted(alpha_chains):
        arr = alpha_chains[node]
        _, p1, q = arr.shape
        for k in range(p1):
            for h in range(q):
                z, p = geweke(arr[:, k, h], **kw)
                ok = p >= thresh
                all_pass &= ok
                rows.append((node, k, h, z, p, ok))
    return rows, all_pass


@lru_cache(maxsize=32)
def _ks_null_table(n, n_sim=2000, seed=20240117):
    """Null distribution of the KS statistic after standardizing the sample."""
    rng = np.random.default_rng(seed)
    sims = np.empty(n_sim)
    grid_lo = np.arange(n) / n
    grid_hi = np.arange(1, n + 1) / n
    for s in range(n_sim):
        y = rng.standard_normal(n)
        z = np.sort((y - y.mean()) / y.std(ddof=1))
        cdf = ndtr(z)
        sims[s] = max(np.max(cdf - grid_lo), np.max(grid_hi - cdf))
    return np.sort(sims)


def h_score(sample, pval_method="mc"):
    """Non-normality score 2*Phi(log(1 - pval)) in [0, 1].

    The sample is standardized and tested against the standard normal with
    the one-sample KS statistic.  ``pval_method='mc'`` (default) calibrates
    the p-value against a simulated null that accounts for the estimated
    location and scale, so null p-values are uniform; 'asymp' uses the
    asymptotic Kolmogorov distribution, which is conservative for
    standardized samples.
    """
    y = np.asarray(sample, dtype=np.float64).ravel()
    if y.size < 8:
        raise ValueError("h_score needs at least 8 observations")
    sd = y.std(ddof=1)
    if sd == 0:
        raise ValueError("h_score is undefined for a constant sample")
    z = (y - y.mean()) / sd
    if pval_method == "asymp":
        pval = float(stats.kstest(z, "norm", mode="asymp").pvalue)
    elif pval_method == "mc":
        n = y.size
        zs = np.sort(z)
        cdf = ndtr(zs)
        d = max(np.max(cdf - np.arange(n) / n),
                np.max(np.arange(1, n + 1) / n - cdf))
        table = _ks_null_table(n)
        n_ge = table.size - np.searchsorted(table, d, side="left")
        pval = (1.0 + n_ge) / (table.size + 1.0)
    else:
        raise ValueError("pval_method must be 'mc' or 'asymp'")
    return float(2.0 * ndtr(np.log1p(-pval)))
