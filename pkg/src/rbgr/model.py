"""Data model, hyperparameters, MCMC state and the thresholded-coefficient algebra.

The regression for node j explains the scaled response y_ij/d_ij by the scaled
remaining variables y_ik/d_ik with functional coefficients

    beta_jk(x) = theta_jk(x) * I(|theta_jk(x)| > t_j),
    theta_jk(x) = sum_h alpha_jkh * x_h,

so a zero coefficient encodes a missing (sign-independence) edge for the
covariate realization x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised when raw response/covariate matrices violate the input contract."""


@dataclass(frozen=True)
class Dataset:
    """Validated response matrix y (n x p) and covariate matrix x (n x q)."""

    y: np.ndarray
    x: np.ndarray

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.y.shape[1]

    @property
    def q(self) -> int:
        return self.x.shape[1]


def validate_dataset(y, x, center=False) -> Dataset:
    """Validate raw matrices and return an immutable Dataset.

    Rejects non-finite entries (reporting their position), inconsistent row
    counts, and degenerate shapes (n < 2, p < 2, q < 1).  With ``center=True``
    the response columns are mean-centered.
    """
    y = np.ascontiguousarray(np.asarray(y, dtype=np.float64))
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if y.ndim != 2 or x.ndim != 2:
        raise DataError("y and x must be 2-dimensional matrices")
    if y.shape[0] != x.shape[0]:
        raise DataError(
            f"row count mismatch: y has {y.shape[0]} rows, x has {x.shape[0]}"
        )
    if y.shape[0] < 2:
        raise DataError(f"need at least 2 observations, got {y.shape[0]}")
    if y.shape[1] < 2:
        raise DataError(f"need at least 2 response variables, got {y.shape[1]}")
    if x.shape[1] < 1:
        raise DataError("need at least 1 covariate")
    for name, arr in (("y", y), ("x", x)):
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            r, c = bad[0]
            raise DataError(f"non-finite entry in {name} at row {r}, column {c}")
    if center:
        y = y - y.mean(axis=0)
    return Dataset(y=y, x=x)


@dataclass(frozen=True)
class HyperParams:
    """Prior hyperparameters.

    Inverse-gamma is parameterized as shape-scale throughout:
    density proportional to z**-(shape+1) * exp(-scale/z).
    """

    v0: float = 0.01        # spike variance factor, in (0, 1)
    a_nu: float = 1.0       # InvGa shape for the slab variance nu
    b_nu: float = 1.0       # InvGa scale for nu
    a_rho: float = 1.0      # Beta parameters for the slab inclusion weight
    b_rho: float = 1.0
    a_pi: float = 1.0       # Beta parameters for the scale-contamination weight
    b_pi: float = 1.0
    a_d: float = 3.0        # InvGa shape for the squared random scale
    b_d: float = 2.0        # InvGa scale for the squared random scale
    t_max: float = 1.0      # upper bound of the uniform threshold prior
    a_sigma: float = 1.0    # InvGa parameters for the residual variance
    b_sigma: float = 1.0

    def __post_init__(self):
        for name in ("v0", "a_nu", "b_nu", "a_rho", "b_rho", "a_pi", "b_pi",
                     "a_d", "b_d", "t_max", "a_sigma", "b_sigma"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"hyperparameter {name} must be finite and > 0")
        if self.v0 >= 1:
            raise ValueError("v0 must be < 1")


@dataclass(frozen=True)
class ChainConfig:
    """MCMC run length, burn-in, thinning and master seed."""

    iters: int
    burnin: int = 0
    thin: int = 1
    seed: int = 1

    def __post_init__(self):
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if not (0 <= self.burnin < self.iters):
            raise ValueError("burnin must satisfy 0 <= burnin < iters")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.retained < 1:
            raise ValueError("retained draw count must be >= 1")

    @property
    def retained(self) -> int:
        return math.ceil((self.iters - self.burnin) / self.thin)


@dataclass
class NodeState:
    """All latent state of the regression for one node j.

    Coefficient tensors are (p-1, q) over the remaining variables (in natural
    order with j removed) and the covariates.  The scale matrix d is n x p:
    column j holds the response scales, the other columns the regressor
    scales, all local to this regression.  pi_mix holds one point-mass weight
    per variable.
    """

    j: int
    eta: np.ndarray       # (p-1, q)
    xi: np.ndarray        # (p-1, q)
    m: np.ndarray         # (p-1, q), entries in {-1, +1}
    gamma: np.ndarray     # (p-1, q), entries in {1, v0}
    nu: np.ndarray        # (p-1, q), positive
    rho: float            # in (0, 1)
    t: float              # in [0, t_max]
    sigma2: float         # positive
    d: np.ndarray         # (n, p), positive
    pi_mix: np.ndarray    # (p,), each in (0, 1)

    @property
    def alpha(self) -> np.ndarray:
        return self.eta * self.xi

    @classmethod
    def init_prior(cls, j, n, p, q, hyper: HyperParams, rng) -> "NodeState":
        """Draw a full state from the prior (the canonical chain start)."""
        rho = float(np.clip(rng.beta(hyper.a_rho, hyper.b_rho), 1e-12, 1 - 1e-12))
        gamma = np.where(rng.random((p - 1, q)) < rho, 1.0, hyper.v0)
        nu = hyper.b_nu / rng.gamma(hyper.a_nu, 1.0, size=(p - 1, q))
        eta = rng.standard_normal((p - 1, q)) * np.sqrt(gamma * nu)
        m = np.where(rng.random((p - 1, q)) < 0.5, 1.0, -1.0)
        xi = m + rng.standard_normal((p - 1, q))
        t = float(rng.uniform(0.0, hyper.t_max))
        sigma2 = float(hyper.b_sigma / rng.gamma(hyper.a_sigma, 1.0))
        pi_mix = np.clip(rng.beta(hyper.a_pi, hyper.b_pi, size=p), 1e-12, 1 - 1e-12)
        u = rng.random((n, p))
        d2 = hyper.b_d / rng.gamma(hyper.a_d, 1.0, size=(n, p))
        d = np.where(u < 1.0 - pi_mix[None, :], 1.0, np.sqrt(d2))
        return cls(j=j, eta=eta, xi=xi, m=m, gamma=gamma, nu=nu, rho=rho,
                   t=t, sigma2=sigma2, d=d, pi_mix=pi_mix)

    def check_invariants(self, hyper: HyperParams):
        """Assert the structural invariants; used by tests after sweeps."""
        assert np.all((self.m == 1.0) | (self.m == -1.0))
        assert np.all((self.gamma == 1.0) | (self.gamma == hyper.v0))
        assert np.all(self.nu > 0)
        assert 0.0 < self.rho < 1.0
        assert 0.0 <= self.t <= hyper.t_max
        assert self.sigma2 > 0
        assert np.all(self.d > 0)
        assert np.all((self.pi_mix > 0) & (self.pi_mix < 1))


def other_nodes(p: int, j: int) -> np.ndarray:
    """Indices of the regressor variables for node j, in natural order."""
    return np.delete(np.arange(p), j)


def theta_eval(alpha, x) -> np.ndarray:
    """Linear covariate effects: element k is the inner product of row k with x."""
    alpha = np.asarray(alpha, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if alpha.ndim != 2 or x.ndim != 1 or alpha.shape[1] != x.shape[0]:
        raise ValueError(
            f"dimension mismatch: alpha {alpha.shape} vs x {x.shape}"
        )
    return alpha @ x


def csif_eval(theta, t):
    """Thresholded coefficient: theta where |theta| > t strictly, else exactly 0."""
    if t < 0:
        raise ValueError("threshold t must be >= 0")
    theta = np.asarray(theta, dtype=np.float64)
    out = np.where(np.abs(theta) > t, theta, 0.0)
    return float(out) if out.ndim == 0 else out
