"""Compiled hot-path kernels for the node-wise Gibbs sweep.

The coefficient full conditionals are mixtures of truncated normals over the
interval partition induced by per-observation activation bounds; the kernels
here assemble that partition, integrate each interval in log space and draw
by tail-safe inverse CDF.  All routines consume uniforms from the caller's
``numpy.random.Generator`` (numba shares the bit-generator stream), so results
are reproducible across thread counts.
"""

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)
SQRT2 = math.sqrt(2.0)

# status codes returned by the mixture kernels
OK = 0
ERR_ZERO_MASS = 1
ERR_BAD_COEF = 2


@njit(cache=True)
def _ndtri(p):
    """Inverse standard normal CDF (Wichura's AS 241, double precision)."""
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True)
def _ndtr(z):
    return 0.5 * math.erfc(-z / SQRT2)


@njit(cache=True)
def _log_ndtr(z):
    if z > 6.0:
        return math.log1p(-0.5 * math.erfc(z / SQRT2))
    if z > -20.0:
        return math.log(0.5 * math.erfc(-z / SQRT2))
    # asymptotic left tail: Mills-ratio expansion
    zi = 1.0 / (z * z)
    corr = zi * (-1.0 + zi * (3.0 + zi * (-15.0 + zi * 105.0)))
    return -0.5 * z * z - math.log(-z) - 0.5 * LOG_2PI + math.log1p(corr)


@njit(cache=True)
def _log_phi_diff(za, zb):
    """log(Phi(zb) - Phi(za)) for za < zb, stable in both tails."""
    if not zb > za:
        return -np.inf
    if za + zb > 0.0:
        tmp = za
        za = -zb
        zb = -tmp
    la = _log_ndtr(za)
    lb = _log_ndtr(zb)
    diff = la - lb
    if diff >= 0.0:
        return -np.inf
    return lb + math.log1p(-math.exp(diff))


@njit(cache=True)
def _tn_draw(mu, s, lo, hi, u):
    """Inverse-CDF draw from N(mu, s^2) truncated to (lo, hi), tail-safe."""
    za = (lo - mu) / s if lo > -np.inf else -np.inf
    zb = (hi - mu) / s if hi < np.inf else np.inf
    flip = False
    if za + zb > 0.0:  # nan (two-sided infinite) compares False, as intended
        flip = True
        tmp = za
        za = -zb
        zb = -tmp
    fa = _ndtr(za) if za > -np.inf else 0.0
    fb = _ndtr(zb) if zb < np.inf else 1.0
    if fb > fa:
        z = _ndtri(fa + u * (fb - fa))
    else:
        # both CDF values underflowed: exponential approximation of the far
        # left tail, mass concentrated just below zb with rate -zb
        lam = -zb
        span = zb - za
        frac = 1.0 - math.exp(-lam * span) if span < np.inf else 1.0
        z = zb + math.log1p(-u * frac) / lam
    if flip:
        z = -z
    x = mu + s * z
    # guard against rounding at the edges of very thin intervals
    if lo > -np.inf and x < lo:
        x = lo
    if hi < np.inf and x > hi:
        x = hi
    return x


@njit(cache=True)
def _normal_pair_mix_draw(ub, lb, a1, a2, a3, c1, c2, gen):
    """Draw from exp{sum_i q_i(x)[I(x > lb_i) + I(x < ub_i)] + c1 x^2 + c2 x}.

    Each of the ``npc`` pieces carries a quadratic q_i = a1 x^2 + a2 x + a3
    active outside its gap [ub_i, lb_i] (ub_i <= lb_i).  Requires c1 < 0 and
    a1 <= 0 so every interval is a proper truncated normal.  Returns
    (draw, status).
    """
    npc = ub.shape[0]
    m = 2 * npc
    nint = m + 1
    bounds = np.empty(m)
    for i in range(npc):
        bounds[i] = ub[i]
        bounds[npc + i] = lb[i]
    order = np.argsort(bounds, kind="mergesort")
    sortedb = bounds[order]
    pos = np.empty(m, dtype=np.int64)
    for tt in range(m):
        pos[order[tt]] = tt

    dD = np.zeros(nint)
    dE = np.zeros(nint)
    dF = np.zeros(nint)
    base_d = c1
    base_e = c2
    base_f = 0.0
    for i in range(npc):
        base_d += a1[i]
        base_e += a2[i]
        base_f += a3[i]
        pu = pos[i]
        pl = pos[npc + i]
        # the piece is inactive exactly on intervals pu+1 .. pl
        dD[pu + 1] -= a1[i]
        dE[pu + 1] -= a2[i]
        dF[pu + 1] -= a3[i]
        if pl + 1 < nint:
            dD[pl + 1] += a1[i]
            dE[pl + 1] += a2[i]
            dF[pl + 1] += a3[i]

    D = np.empty(nint)
    E = np.empty(nint)
    F = np.empty(nint)
    rd = base_d
    re = base_e
    rf = base_f
    for tt in range(nint):
        rd += dD[tt]
        re += dE[tt]
        rf += dF[tt]
        D[tt] = rd
        E[tt] = re
        F[tt] = rf

    logm = np.empty(nint)
    best = -np.inf
    for tt in range(nint):
        if D[tt] >= 0.0 or not np.isfinite(D[tt]) or not np.isfinite(E[tt]):
            return 0.0, ERR_BAD_COEF
        lo = sortedb[tt - 1] if tt > 0 else -np.inf
        hi = sortedb[tt] if tt < m else np.inf
        mu = -0.5 * E[tt] / D[tt]
        s = math.sqrt(-0.5 / D[tt])
        peak = F[tt] - 0.25 * E[tt] * E[tt] / D[tt]
        za = (lo - mu) / s if lo > -np.inf else -np.inf
        zb = (hi - mu) / s if hi < np.inf else np.inf
        logm[tt] = peak + math.log(s) + 0.5 * LOG_2PI + _log_phi_diff(za, zb)
        if logm[tt] > best:
            best = logm[tt]
    if best == -np.inf or np.isnan(best):
        return 0.0, ERR_ZERO_MASS

    total = 0.0
    for tt in range(nint):
        total += math.exp(logm[tt] - best)
    u1 = gen.random()
    target = u1 * total
    acc = 0.0
    pick = nint - 1
    for tt in range(nint):
        acc += math.exp(logm[tt] - best)
        if acc >= target:
            pick = tt
            break

    lo = sortedb[pick - 1] if pick > 0 else -np.inf
    hi = sortedb[pick] if pick < m else np.inf
    mu = -0.5 * E[pick] / D[pick]
    s = math.sqrt(-0.5 / D[pick])
    u2 = gen.random()
    return _tn_draw(mu, s, lo, hi, u2), OK


@njit(cache=True)
def _coef_draw(xh, ysc, u, theta_k, coef_kh, slope_mult, t, sigma2, c1, c2, gen):
    """Draw one covariate-coefficient factor from its full conditional.

    With slope_i = slope_mult * xh_i (slope_mult is the fixed other factor of
    the coefficient product), observation i activates the quadratic of its
    residual improvement outside the gap where |theta_k| <= t.  Observations
    with zero slope contribute a constant and are skipped.
    """
    n = xh.shape[0]
    ubw = np.empty(n)
    lbw = np.empty(n)
    a1w = np.empty(n)
    a2w = np.empty(n)
    a3w = np.empty(n)
    cnt = 0
    inv2s2 = 0.5 / sigma2
    for i in range(n):
        sl = slope_mult * xh[i]
        if sl == 0.0:
            continue
        tm = theta_k[i] - coef_kh * xh[i]
        t1 = (t - tm) / sl
        t2 = (-t - tm) / sl
        if t1 >= t2:
            lbw[cnt] = t1
            ubw[cnt] = t2
        else:
            lbw[cnt] = t2
            ubw[cnt] = t1
        v = sl * ysc[i]
        w = tm * ysc[i]
        a1w[cnt] = -v * v * inv2s2
        a2w[cnt] = 2.0 * (u[i] - w) * v * inv2s2
        a3w[cnt] = w * (2.0 * u[i] - w) * inv2s2
        cnt += 1
    return _normal_pair_mix_draw(ubw[:cnt], lbw[:cnt], a1w[:cnt], a2w[:cnt],
                                 a3w[:cnt], c1, c2, gen)


@njit(cache=True)
def _threshold_log_levels(z_sorted, obs_sorted, r, inv2s2):
    """Per-interval log-density levels for the threshold full conditional.

    Sweeping the threshold upward past each sorted |theta| breakpoint removes
    that edge term from its observation's residual; the output F[s] is
    -(RSS(interval s) - RSS(interval 0)) / (2 sigma^2).
    """
    ne = z_sorted.shape[0]
    F = np.empty(ne + 1)
    F[0] = 0.0
    for e in range(ne):
        i = obs_sorted[e]
        z = z_sorted[e]
        delta = z * (2.0 * r[i] + z)
        r[i] += z
        F[e + 1] = F[e] - delta * inv2s2
    return F
