"""Exact sampling from densities built of one-sided quadratic log-pieces.

A target of the form

    p(x) propto exp{ sum_j f_j(x) I(x > L_j) + sum_k g_k(x) I(x < U_k) }
                * exp(c1 x^2 + c2 x + c3)   on the prior support,

with quadratic f_j, g_k, is a finite mixture over the interval partition
induced by the sorted bounds.  On each interval the accumulated exponent is a
single quadratic, so the piece is a truncated normal (negative curvature),
a truncated exponential (linear), or uniform (constant).  Everything is
normalized in log space; per-interval masses use tail-stable normal CDF
differences.

Positive curvature on a bounded interval is still a proper density and is
handled through numeric quadrature; on an unbounded interval it is rejected
as improper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import log_ndtr, logsumexp, ndtr, ndtri

LOG_2PI = math.log(2.0 * math.pi)

KIND_NULL = 0
KIND_NORMAL = 1
KIND_EXP = 2
KIND_UNIFORM = 3
KIND_CONVEX = 4
KIND_NAMES = ("nullPiece", "truncNormal", "truncExponential", "uniform", "convex")


class ImproperDensityError(ValueError):
    """The assembled density has infinite or zero total mass."""


@dataclass(frozen=True)
class QuadraticPiece:
    """One-sided quadratic log-density contribution a1*x^2 + a2*x + a3.

    ``side='lower'`` activates the piece for x > bound, ``side='upper'`` for
    x < bound.
    """

    a1: float
    a2: float
    a3: float
    bound: float
    side: str

    def __post_init__(self):
        if self.side not in ("lower", "upper"):
            raise ValueError("side must be 'lower' or 'upper'")
        if not np.isfinite(self.bound):
            raise ValueError("piece bounds must be finite")


@dataclass(frozen=True)
class PriorKernel:
    """Prior log-kernel c1*x^2 + c2*x + c3 on a closed (possibly unbounded) support."""

    c1: float
    c2: float
    c3: float = 0.0
    support: tuple = (-np.inf, np.inf)

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise ValueError("support must be a nonempty interval")
        if self.c1 == 0.0 and self.c2 == 0.0 and not (
                np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError(
                "a flat kernel (c1 = c2 = 0) needs a bounded support to be proper")


def _classify(D, E, F):
    if D < 0.0:
        return KIND_NORMAL
    if D > 0.0:
        return KIND_CONVEX
    if E != 0.0:
        return KIND_EXP
    return KIND_UNIFORM if F != 0.0 else KIND_NULL


def _log_phi_diff(za, zb):
    """log(Phi(zb) - Phi(za)) elementwise for za <= zb, stable in both tails."""
    za = np.asarray(za, dtype=np.float64)
    zb = np.asarray(zb, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        flip = (za + zb) > 0  # nan for (-inf, inf) -> False, which is correct
    lo = np.where(flip, -zb, za)
    hi = np.where(flip, -za, zb)
    la = log_ndtr(lo)
    lb = log_ndtr(hi)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = lb + np.log1p(-np.exp(np.minimum(la - lb, 0.0)))
    return np.where(lb > la, out, -np.inf)


def _log_mass_interval(D, E, F, lo, hi):
    """Log integral of exp(D x^2 + E x + F) over (lo, hi); one interval."""
    if hi <= lo:
        return -np.inf
    unbounded = not (np.isfinite(lo) and np.isfinite(hi))
    if D < 0.0:
        mu = -0.5 * E / D
        s = math.sqrt(-0.5 / D)
        peak = F - 0.25 * E * E / D
        za = (lo - mu) / s if np.isfinite(lo) else -np.inf
        zb = (hi - mu) / s if np.isfinite(hi) else np.inf
        return peak + math.log(s) + 0.5 * LOG_2PI + float(_log_phi_diff(za, zb))
    if D > 0.0:
        if unbounded:
            raise ImproperDensityError(
                "positive quadratic coefficient on an unbounded interval")
        peak = max(D * lo * lo + E * lo + F, D * hi * hi + E * hi + F)
        val, _ = integrate.quad(
            lambda x: math.exp(D * x * x + E * x + F - peak), lo, hi, limit=200)
        return peak + math.log(val) if val > 0 else -np.inf
    if E != 0.0:
        if np.isfinite(lo) and np.isfinite(hi):
            c = hi if E > 0 else lo
            span = hi - lo
            return F + E * c + math.log(-math.expm1(-abs(E) * span)) - math.log(abs(E))
        if not np.isfinite(hi):  # (lo, inf): needs decay to the right
            if E > 0:
                raise ImproperDensityError(
                    "exponential piece grows toward +inf on an unbounded interval")
            return F + E * lo - math.log(-E)
        # (-inf, hi): needs decay to the left
        if E < 0:
            raise ImproperDensityError(
                "exponential piece grows toward -inf on an unbounded interval")
        return F + E * hi - math.log(E)
    # constant exponent
    if unbounded:
        raise ImproperDensityError("constant exponent on an unbounded interval")
    return F + math.log(hi - lo)


@dataclass
class PiecewiseDensity:
    """Normalized piecewise density over a partition of the prior support.

    ``edges`` has one more entry than the number of intervals; ``D, E, F``
    hold the accumulated quadratic coefficients, ``kind`` the classification
    codes (see ``KIND_NAMES``), ``log_mass`` the unnormalized per-interval
    log integrals and ``log_z`` their logsumexp.
    """

    edges: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    kind: np.ndarray
    log_mass: np.ndarray
    log_z: float

    @property
    def n_intervals(self) -> int:
        return len(self.D)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_mass - self.log_z)

    @property
    def kinds(self):
        return [KIND_NAMES[k] for k in self.kind]

    @property
    def support(self):
        return float(self.edges[0]), float(self.edges[-1])

    def logpdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1,
                      0, self.n_intervals - 1)
        val = self.D[idx] * x * x + self.E[idx] * x + self.F[idx] - self.log_z
        out = np.where((x < self.edges[0]) | (x > self.edges[-1]), -np.inf, val)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        """Draw exactly; scalar when size is None, else an array of draws."""
        scalar = size is None
        nn = 1 if scalar else int(size)
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        u1 = rng.random(nn)
        idx = np.searchsorted(cum, u1, side="right")
        idx = np.clip(idx, 0, self.n_intervals - 1)
        u2 = rng.random(nn)
        out = np.empty(nn)
        for t in np.unique(idx):
            sel = idx == t
            out[sel] = self._draw_within(int(t), u2[sel])
        return float(out[0]) if scalar else out

    def _draw_within(self, t, u):
        lo, hi = self.edges[t], self.edges[t + 1]
        D, E = self.D[t], self.E[t]
        k = self.kind[t]
        if k == KIND_NORMAL:
            mu = -0.5 * E / D
            s = math.sqrt(-0.5 / D)
            return _tn_draw_vec(mu, s, lo, hi, u)
        if k == KIND_EXP:
            if np.isfinite(lo) and np.isfinite(hi):
                if E > 0:
                    return hi + np.log(u + (1.0 - u) * math.exp(-E * (hi - lo))) / E
                return lo + np.log((1.0 - u) + u * math.exp(E * (hi - lo))) / E
            if not np.isfinite(hi):  # E < 0
                return lo + np.log1p(-u) / E
            return hi + np.log(u) / E  # E > 0, lo = -inf
        if k == KIND_CONVEX:
            return np.array([self._draw_convex(t, float(ui)) for ui in u])
        return lo + u * (hi - lo)  # uniform / null

    def _draw_convex(self, t, u):
        lo, hi = self.edges[t], self.edges[t + 1]
        D, E, F = self.D[t], self.E[t], self.F[t]
        peak = max(D * lo * lo + E * lo + F, D * hi * hi + E * hi + F)

        def cdf_shift(x):
            val, _ = integrate.quad(
                lambda s: math.exp(D * s * s + E * s + F - peak), lo, x, limit=200)
            return val - u * math.exp(self.log_mass[t] - peak)

        return optimize.brentq(cdf_shift, lo, hi, xtol=1e-14, rtol=1e-14)


def _tn_draw_vec(mu, s, lo, hi, u):
    """Vectorized tail-safe inverse-CDF truncated-normal draws on one interval."""
    za = (lo - mu) / s if np.isfinite(lo) else -np.inf
    zb = (hi - mu) / s if np.isfinite(hi) else np.inf
    flip = (za + zb) > 0  # nan -> False for the doubly infinite case
    if flip:
        za, zb = -zb, -za
    fa = ndtr(za)
    fb = ndtr(zb)
    z = ndtri(fa + u * (fb - fa))
    if flip:
        z = -z
    x = mu + s * z
    return np.clip(x, lo, hi)


def build(pieces, prior: PriorKernel) -> PiecewiseDensity:
    """Assemble the normalized piecewise density from pieces and a prior kernel.

    Implements the bound-sorting construction: the support is split at every
    in-range piece bound, each interval accumulates the coefficients of the
    pieces active there on top of the prior kernel, and interval masses are
    integrated in log space.  Raises ImproperDensityError when the result has
    infinite or zero total mass.
    """
    lo, hi = prior.support
    base = np.array([prior.c1, prior.c2, prior.c3])
    internal = []
    active = []  # (position_index_later, is_lower, coeffs)
    for pc in pieces:
        coef = np.array([pc.a1, pc.a2, pc.a3])
        if pc.side == "lower":
            if pc.bound <= lo:
                base += coef
            elif pc.bound < hi:
                internal.append((pc.bound, True, coef))
        else:
            if pc.bound >= hi:
                base += coef
            elif pc.bound > lo:
                internal.append((pc.bound, False, coef))

    bounds = np.array([b for b, _, _ in internal], dtype=np.float64)
    order = np.argsort(bounds, kind="stable")
    m = len(order)
    n_int = m + 1
    coefs = np.tile(base, (n_int, 1))
    low_add = np.zeros((n_int + 1, 3))
    up_add = np.zeros((n_int + 1, 3))
    for posn, oi in enumerate(order):
        _, is_lower, coef = internal[oi]
        if is_lower:
            low_add[posn + 1] += coef  # active on intervals > posn
        else:
            up_add[posn] += coef       # active on intervals <= posn
    coefs += np.cumsum(low_add[:n_int], axis=0)
    coefs += np.cumsum(up_add[::-1], axis=0)[::-1][:n_int]

    edges = np.concatenate(([lo], bounds[order], [hi]))
    widths = np.diff(edges)
    keep = widths > 0
    edges = np.concatenate((edges[:-1][keep], [hi]))
    coefs = coefs[keep]

    D, E, F = coefs[:, 0], coefs[:, 1], coefs[:, 2]
    n_keep = len(D)
    kind = np.empty(n_keep, dtype=np.int64)
    log_mass = np.empty(n_keep)
    for t in range(n_keep):
        kind[t] = _classify(D[t], E[t], F[t])
        log_mass[t] = _log_mass_interval(D[t], E[t], F[t], edges[t], edges[t + 1])
    log_z = float(logsumexp(log_mass))
    if not np.isfinite(log_z):
        raise ImproperDensityError("total mass is zero (all intervals vanish)"
                                   if log_z == -np.inf else
                                   "total mass is not finite")
    return PiecewiseDensity(edges=edges, D=D, E=E, F=F, kind=kind,
                            log_mass=log_mass, log_z=log_z)
