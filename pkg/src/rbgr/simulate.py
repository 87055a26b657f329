"""Synthetic data generator: covariate-dependent sparse precision matrices,
latent Gaussian draws, and random-scale contamination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSD_TOL = -1e-10
MAX_REJECTIONS = 10_000


@dataclass
class TruePrecisionSpec:
    """Ground-truth functional precision: support, coefficients and threshold.

    Off-diagonal entries on the support are r_jk(x) = sum_h coeff[j,k,h] x_h,
    truncated to zero when |r| <= t0; the diagonal is 1.
    """

    support: np.ndarray              # (p, p) bool, symmetric, zero diagonal
    coeff: np.ndarray                # (p, p, q), symmetric in (j, k)
    t0: float

    def realized(self, x):
        """Precision matrix at a single covariate vector x."""
        p = self.support.shape[0]
        r = self.coeff @ np.asarray(x, dtype=np.float64)
        om = np.where(self.support & (np.abs(r) > self.t0), r, 0.0)
        om[np.arange(p), np.arange(p)] = 1.0
        return om

    def edge_truth(self, X):
        """Per-observation edge indicators and regression-coefficient signs.

        Returns (indicator, sign), both (n, p, p); the sign is that of the
        implied regression coefficient -omega_jk (0 where absent).
        """
        X = np.asarray(X, dtype=np.float64)
        r = np.einsum("jkh,nh->njk", self.coeff, X)
        ind = self.support[None, :, :] & (np.abs(r) > self.t0)
        sign = np.where(ind, -np.sign(r), 0.0).astype(np.int8)
        return ind, sign


@dataclass
class SimTruth:
    """Generated data plus everything needed to score recovery."""

    y: np.ndarray                    # (n, p) observed
    x: np.ndarray                    # (n, q)
    y_latent: np.ndarray             # (n, p) before scaling
    scales: np.ndarray               # (n, p)
    spec: TruePrecisionSpec
    edge_indicator: np.ndarray       # (n, p, p) bool
    edge_sign: np.ndarray            # (n, p, p) int8
    covariate_support: np.ndarray    # (p, p, q) bool


def gen_covariates(n, q, rng):
    """Covariates drawn iid uniform on (-1, 1)."""
    return rng.uniform(-1.0, 1.0, size=(n, q))


def gen_precision_spec(p, q, X, sparsity=0.02, t0=0.15, coef_lo=0.35,
                       coef_hi=0.5, rng=None) -> TruePrecisionSpec:
    """Draw support and coefficients, rejecting until all realized precisions
    at the rows of X are positive semi-definite (min eigenvalue >= -1e-10).

    The support takes ``sparsity`` of the off-diagonal entries; coefficient
    components are uniform on +-[coef_lo, coef_hi].
    """
    X = np.asarray(X, dtype=np.float64)
    n_pairs = p * (p - 1) // 2
    n_active = int(round(sparsity * n_pairs))
    iu = np.triu_indices(p, k=1)
    for _ in range(MAX_REJECTIONS):
        support = np.zeros((p, p), dtype=bool)
        coeff = np.zeros((p, p, q))
        if n_active > 0:
            chosen = rng.choice(n_pairs, size=n_active, replace=False)
            rows, cols = iu[0][chosen], iu[1][chosen]
            mag = rng.uniform(coef_lo, coef_hi, size=(n_active, q))
            sgn = np.where(rng.random((n_active, q)) < 0.5, 1.0, -1.0)
            support[rows, cols] = support[cols, rows] = True
            coeff[rows, cols] = coeff[cols, rows] = mag * sgn
        spec = TruePrecisionSpec(support=support, coeff=coeff, t0=t0)
        if n_active == 0:
            return spec
        ok = True
        for i in range(X.shape[0]):
            if np.linalg.eigvalsh(spec.realized(X[i]))[0] < PSD_TOL:
                ok = False
                break
        if ok:
            return spec
    raise RuntimeError(
        f"no positive semi-definite precision spec found in {MAX_REJECTIONS} tries")


def gen_scales(n, p, pi, a_d, b_d, rng):
    """Random scales: d^2 is 1 with probability 1-pi, inverse-gamma otherwise."""
    u = rng.random((n, p))
    d2 = b_d / rng.gamma(a_d, 1.0, size=(n, p))
    return np.where(u < 1.0 - pi, 1.0, np.sqrt(d2))


def _draw_latent(spec: TruePrecisionSpec, X, rng):
    """Latent rows y*_i ~ N(0, Omega(x_i)^{-1}) via eigen factorization."""
    n = X.shape[0]
    p = spec.support.shape[0]
    eps = rng.standard_normal((n, p))
    out = np.empty((n, p))
    for i in range(n):
        om = spec.realized(X[i])
        w, v = np.linalg.eigh(om)
        w = np.maximum(w, 1e-10)
        out[i] = v @ (eps[i] / np.sqrt(w))
    return out


def gen_dataset(n, p, q, pi, sparsity=0.02, t0=0.15, coef_lo=0.35, coef_hi=0.5,
                a_d=3.0, b_d=2.0, rng=None) -> SimTruth:
    """Full generator: covariates, precision spec, latent normals, scaling."""
    X = gen_covariates(n, q, rng)
    spec = gen_precision_spec(p, q, X, sparsity=sparsity, t0=t0,
                              coef_lo=coef_lo, coef_hi=coef_hi, rng=rng)
    y_star = _draw_latent(spec, X, rng)
    d = gen_scales(n, p, pi, a_d, b_d, rng)
    y = y_star * d
    ind, sign = spec.edge_truth(X)
    cov_support = np.repeat(spec.support[:, :, None], q, axis=2)
    return SimTruth(y=y, x=X, y_latent=y_star, scales=d, spec=spec,
                    edge_indicator=ind, edge_sign=sign,
                    covariate_support=cov_support)
