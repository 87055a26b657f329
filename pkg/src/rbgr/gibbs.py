"""Node-wise MCMC: the full sweep over one regression and parallel orchestration.

Each node j runs an independent chain on its own state (coefficient factors
eta/xi, slab indicators, threshold, residual variance, random scales), with a
deterministic RNG stream derived from (master seed, node index) so results do
not depend on worker scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import _kernels
from .model import ChainConfig, Dataset, HyperParams, NodeState, csif_eval, other_nodes

SIGMA2_FLOOR = 1e-12
PROB_EPS = 1e-12


@dataclass(frozen=True)
class SamplerOptions:
    """Switches for documented model variants.

    update_scales=False pins every random scale to 1 (pure Gaussian fit).
    response_jacobian toggles the 1/d change-of-variables factor in the
    response-scale Metropolis ratio.  gamma_printed_exponent swaps the slab
    odds exponent for the uncorrected variant (comparison only).
    """

    update_scales: bool = True
    response_jacobian: bool = True
    gamma_printed_exponent: bool = False


@dataclass
class PosteriorDraws:
    """Retained post-burn-in draws for one node-wise regression."""

    node: int
    alpha: np.ndarray       # (R, p-1, q)
    slab: np.ndarray        # (R, p-1, q) bool, gamma == 1
    t: np.ndarray           # (R,)
    sigma2: np.ndarray      # (R,)
    loglik: np.ndarray      # (R,)
    iterations: np.ndarray  # (R,) chain iteration of each draw


def rescale_pair(eta, xi):
    """Move the magnitude of xi into eta, keeping the product alpha = eta*xi.

    Returns (eta*|xi|, sign(xi)); a zero xi is returned unchanged (the event
    has prior probability zero).
    """
    if xi == 0.0:
        return eta, xi
    a = abs(xi)
    return eta * a, xi / a


def m_slab_prob(xi):
    """P(m = +1 | xi) for the two-component location prior on xi."""
    return expit(2.0 * np.asarray(xi, dtype=np.float64))


def gamma_slab_logodds(eta, nu, rho, v0, printed_variant=False):
    """Log odds of gamma = 1 (slab) against gamma = v0 (spike)."""
    eta = np.asarray(eta, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    base = 0.5 * math.log(v0) + math.log(rho) - math.log1p(-rho)
    if printed_variant:
        expo = -eta ** 2 / (2.0 * nu)
    else:
        expo = eta ** 2 * (1.0 - v0) / (2.0 * v0 * nu)
    return base + expo


def nu_posterior(eta, gamma, hyper: HyperParams):
    """Shape and scale of the inverse-gamma full conditional of nu."""
    eta = np.asarray(eta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    return hyper.a_nu + 0.5, hyper.b_nu + eta ** 2 / (2.0 * gamma)


def rho_posterior(gamma, hyper: HyperParams):
    """Beta parameters of the full conditional of the slab weight."""
    gamma = np.asarray(gamma)
    if gamma.size == 0:
        raise ValueError("rho update needs at least one gamma entry")
    n_slab = int(np.sum(gamma == 1.0))
    return hyper.a_rho + n_slab, hyper.b_rho + gamma.size - n_slab


def sigma2_posterior(rss, n, hyper: HyperParams):
    """Shape and scale of the inverse-gamma full conditional of sigma^2."""
    return hyper.a_sigma + 0.5 * n, hyper.b_sigma + 0.5 * rss


def pi_posterior(d_col, hyper: HyperParams):
    """Beta parameters of the full conditional of one point-mass weight."""
    d_col = np.asarray(d_col)
    n_unit = int(np.sum(d_col == 1.0))
    return hyper.a_pi + n_unit, hyper.b_pi + d_col.size - n_unit


def _invgamma(shape, scale, rng, size=None):
    return scale / rng.gamma(shape, 1.0, size=size)


class NodeSampler:
    """Gibbs sweep over the state of one node-wise regression.

    Maintains the derived caches (scaled data, linear predictors theta,
    thresholded coefficients beta, fitted values); call refresh() after
    mutating the state from outside.
    """

    def __init__(self, data: Dataset, hyper: HyperParams, state: NodeState,
                 rng, options: SamplerOptions | None = None):
        self.data = data
        self.hyper = hyper
        self.state = state
        self.rng = rng
        self.options = options or SamplerOptions()
        self.j = state.j
        self.others = other_nodes(data.p, self.j)
        self.oth_pos = {int(v): k for k, v in enumerate(self.others)}
        self.refresh()

    # ------------------------------------------------------------------ caches

    def refresh(self):
        st, data = self.state, self.data
        self.ys = data.y / st.d
        self.theta = data.x @ st.alpha.T            # (n, p-1)
        self.beta = csif_eval(self.theta, st.t)     # (n, p-1)
        self._refit()

    def _refit(self):
        self.fitted = np.einsum("nk,nk->n", self.beta, self.ys[:, self.others])

    def _set_coef(self, k):
        """Recompute the caches that depend on coefficient row k."""
        st = self.state
        self.theta[:, k] = self.data.x @ st.alpha[k]
        self.beta[:, k] = csif_eval(self.theta[:, k], st.t)
        self._refit()

    def residuals(self):
        return self.ys[:, self.j] - self.fitted

    def loglik(self):
        """Gaussian log likelihood of the node regression at the current state."""
        st = self.state
        r = self.residuals()
        n = self.data.n
        ll = -0.5 * n * math.log(2.0 * math.pi * st.sigma2) \
            - float(r @ r) / (2.0 * st.sigma2)
        if self.options.response_jacobian:
            ll -= float(np.sum(np.log(st.d[:, self.j])))
        return ll

    # ----------------------------------------------------------- coefficients

    def _coef_rhs(self, k):
        col = self.others[k]
        ysc = self.ys[:, col]
        u = self.ys[:, self.j] - self.fitted + self.beta[:, k] * ysc
        return ysc, u

    def update_eta(self, k, h):
        st = self.state
        ysc, u = self._coef_rhs(k)
        s_prior = st.gamma[k, h] * st.nu[k, h]
        draw, status = _kernels._coef_draw(
            self.data.x[:, h], ysc, u, self.theta[:, k], st.alpha[k, h],
            st.xi[k, h], st.t, st.sigma2, -0.5 / s_prior, 0.0, self.rng)
        if status != _kernels.OK:
            raise FloatingPointError(
                f"non-finite coefficients in eta conditional at node {self.j}, "
                f"k={k}, h={h} (status {status})")
        st.eta[k, h] = draw
        self._set_coef(k)
        return draw

    def update_xi(self, k, h):
        st = self.state
        ysc, u = self._coef_rhs(k)
        draw, status = _kernels._coef_draw(
            self.data.x[:, h], ysc, u, self.theta[:, k], st.alpha[k, h],
            st.eta[k, h], st.t, st.sigma2, -0.5, float(st.m[k, h]), self.rng)
        if status != _kernels.OK:
            raise FloatingPointError(
                f"non-finite coefficients in xi conditional at node {self.j}, "
                f"k={k}, h={h} (status {status})")
        st.xi[k, h] = draw
        self._set_coef(k)
        return draw

    def rescale(self, k, h):
        st = self.state
        st.eta[k, h], st.xi[k, h] = rescale_pair(st.eta[k, h], st.xi[k, h])

    # -------------------------------------------------------------- threshold

    def update_threshold(self):
        st = self.state
        t_max = self.hyper.t_max
        z = self.theta * self.ys[:, self.others]
        absth = np.abs(self.theta)
        resp = self.ys[:, self.j]
        r0 = resp - np.einsum("nk,nk->n", z, (absth > 0).astype(np.float64))

        ev = (absth > 0) & (absth < t_max)
        bp = absth[ev]
        order = np.argsort(bp, kind="stable")
        bp = bp[order]
        z_ev = z[ev][order]
        obs = np.nonzero(ev)[0][order].astype(np.int64)
        levels = _kernels._threshold_log_levels(
            z_ev, obs, r0.copy(), 0.5 / st.sigma2)

        edges = np.concatenate(([0.0], bp, [t_max]))
        widths = np.diff(edges)
        with np.errstate(divide="ignore"):
            log_mass = levels + np.log(widths)
        log_z = logsumexp(log_mass)
        cum = np.cumsum(np.exp(log_mass - log_z))
        cum[-1] = 1.0
        u1, u2 = self.rng.random(2)
        idx = min(int(np.searchsorted(cum, u1, side="right")), len(widths) - 1)
        st.t = float(edges[idx] + u2 * widths[idx])
        self.beta = csif_eval(self.theta, st.t)
        self._refit()
        return st.t

    # ------------------------------------------------------- discrete / scalar

    def update_m(self):
        st = self.state
        p1 = m_slab_prob(st.xi)
        st.m = np.where(self.rng.random(st.m.shape) < p1, 1.0, -1.0)

    def update_gamma(self):
        st = self.state
        lo = gamma_slab_logodds(st.eta, st.nu, st.rho, self.hyper.v0,
                                self.options.gamma_printed_exponent)
        p1 = expit(lo)
        st.gamma = np.where(self.rng.random(st.gamma.shape) < p1,
                            1.0, self.hyper.v0)

    def update_nu(self):
        st = self.state
        shape, scale = nu_posterior(st.eta, st.gamma, self.hyper)
        st.nu = _invgamma(shape, scale, self.rng, size=st.nu.shape)

    def update_rho(self):
        st = self.state
        a, b = rho_posterior(st.gamma, self.hyper)
        st.rho = float(np.clip(self.rng.beta(a, b), PROB_EPS, 1.0 - PROB_EPS))

    def update_sigma2(self):
        st = self.state
        r = self.residuals()
        shape, scale = sigma2_posterior(float(r @ r), self.data.n, self.hyper)
        st.sigma2 = max(float(_invgamma(shape, scale, self.rng)), SIGMA2_FLOOR)

    def update_scales(self):
        """Metropolis step per (observation, variable) with the prior as proposal.

        The prior/proposal factors cancel, so the acceptance ratio is the
        single-observation likelihood ratio; the response scale additionally
        carries the 1/d Jacobian unless disabled.
        """
        st = self.state
        hyper = self.hyper
        n = self.data.n
        for v in range(self.data.p):
            u_mix = self.rng.random(n)
            d2 = _invgamma(hyper.a_d, hyper.b_d, self.rng, size=n)
            u_acc = self.rng.random(n)
            d_prop = np.where(u_mix < 1.0 - st.pi_mix[v], 1.0, np.sqrt(d2))
            yv = self.data.y[:, v]
            d_cur = st.d[:, v]
            r_cur = self.ys[:, self.j] - self.fitted
            if v == self.j:
                r_new = yv / d_prop - self.fitted
                dll = (r_cur ** 2 - r_new ** 2) / (2.0 * st.sigma2)
                if self.options.response_jacobian:
                    dll += np.log(d_cur) - np.log(d_prop)
            else:
                k = self.oth_pos[v]
                r_new = r_cur - self.beta[:, k] * (yv / d_prop - self.ys[:, v])
                dll = (r_cur ** 2 - r_new ** 2) / (2.0 * st.sigma2)
            acc = np.log(u_acc) < dll
            if np.any(acc):
                st.d[acc, v] = d_prop[acc]
                self.ys[acc, v] = yv[acc] / d_prop[acc]
                self._refit()

    def update_pi(self):
        st = self.state
        n1 = np.sum(st.d == 1.0, axis=0)
        a = self.hyper.a_pi + n1
        b = self.hyper.b_pi + self.data.n - n1
        st.pi_mix = np.clip(self.rng.beta(a, b), PROB_EPS, 1.0 - PROB_EPS)

    # ------------------------------------------------------------------ sweep

    def sweep(self):
        """One full pass in the fixed update order."""
        p1, q = self.state.eta.shape
        for k in range(p1):
            for h in range(q):
                self.update_eta(k, h)
                self.update_xi(k, h)
                self.rescale(k, h)
        self.update_threshold()
        self.update_m()
        self.update_gamma()
        self.update_nu()
        self.update_rho()
        self.update_sigma2()
        if self.options.update_scales:
            self.update_scales()
        self.update_pi()


def node_rng(seed, p, j):
    """Generator for node j, derived deterministically from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(p)[j])


def run_node(data: Dataset, hyper: HyperParams, config: ChainConfig, j,
             options: SamplerOptions | None = None) -> PosteriorDraws:
    """Run the chain for node j and return its retained draws."""
    options = options or SamplerOptions()
    rng = node_rng(config.seed, data.p, j)
    state = NodeState.init_prior(j, data.n, data.p, data.q, hyper, rng)
    if not options.update_scales:
        state.d = np.ones_like(state.d)
    smp = NodeSampler(data, hyper, state, rng, options)
    R = config.retained
    p1, q = data.p - 1, data.q
    out = PosteriorDraws(
        node=j,
        alpha=np.empty((R, p1, q)),
        slab=np.empty((R, p1, q), dtype=bool),
        t=np.empty(R),
        sigma2=np.empty(R),
        loglik=np.empty(R),
        iterations=np.empty(R, dtype=np.int64),
    )
    r = 0
    for it in range(config.iters):
        smp.sweep()
        if it >= config.burnin and (it - config.burnin) % config.thin == 0:
            out.alpha[r] = state.alpha
            out.slab[r] = state.gamma == 1.0
            out.t[r] = state.t
            out.sigma2[r] = state.sigma2
            out.loglik[r] = smp.loglik()
            out.iterations[r] = it
            r += 1
    assert r == R
    return out


def _run_node_star(args):
    return run_node(*args)


def run_all(data: Dataset, hyper: HyperParams, config: ChainConfig,
            options: SamplerOptions | None = None, threads: int = 1):
    """Run all p node chains; results are independent of the worker count."""
    jobs = [(data, hyper, config, j, options) for j in range(data.p)]
    if threads <= 1:
        return [run_node(*job) for job in jobs]
    results = [None] * data.p
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futs = {pool.submit(_run_node_star, job): job[3] for job in jobs}
        for fut in futs:
            j = futs[fut]
            try:
                results[j] = fut.result()
            except Exception as exc:
                raise RuntimeError(f"chain for node {j} failed") from exc
    return results
