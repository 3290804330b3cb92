"""Numba-compiled inner loops for the share simulators.

The panel-level share evaluations sit inside a contraction mapping inside a
one-dimensional parameter search, so they dominate estimation time. The
kernels here fuse the conditional-quantile transform and the logit
aggregation into tight per-market passes, using a branch-free exp that LLVM
can auto-vectorize (glibc's exp is scalar-only without SVML). shares.py falls
back to equivalent vectorized numpy when numba is unavailable; the two paths
agree to ~1e-12 (they differ only in exp/inverse-normal rounding and
summation order).
"""

from __future__ import annotations

import numpy as np

try:
    from llvmlite import ir
    from numba import njit, prange, types
    from numba.extending import intrinsic

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is installed in practice
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap

    def intrinsic(f):
        return f


if HAVE_NUMBA:

    @intrinsic
    def _bits_to_f64(typingctx, x):
        """Reinterpret an int64 bit pattern as a float64 (no conversion)."""
        sig = types.float64(types.int64)

        def codegen(context, builder, signature, args):
            return builder.bitcast(args[0], ir.DoubleType())

        return sig, codegen

else:  # pragma: no cover

    def _bits_to_f64(x):
        return np.int64(x).view(np.float64)


_LOG2E = 1.4426950408889634074
_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10
# exp saturates outside this window; clamping keeps the 2^k bit trick inside
# the normal range and maps -inf/huge arguments to ~0 / ~1.7e308, which is
# exact enough for probability weights (error < 3e-308).
_EXP_LO = -708.0
_EXP_HI = 709.0


@njit(cache=True, inline="always")
def _fast_exp(x: float) -> float:
    """Branch-free exp for finite math on [-708, 709]; saturates outside.

    Cody-Waite range reduction plus a degree-13 Taylor polynomial: relative
    error ~1 ulp against libm. Written without branches so loops calling it
    vectorize.
    """
    xx = min(max(x, _EXP_LO), _EXP_HI)
    k = np.rint(xx * _LOG2E)
    r = xx - k * _LN2_HI
    r = r - k * _LN2_LO
    p = 1.0 / 6227020800.0
    p = p * r + 1.0 / 479001600.0
    p = p * r + 1.0 / 39916800.0
    p = p * r + 1.0 / 3628800.0
    p = p * r + 1.0 / 362880.0
    p = p * r + 1.0 / 40320.0
    p = p * r + 1.0 / 5040.0
    p = p * r + 1.0 / 720.0
    p = p * r + 1.0 / 120.0
    p = p * r + 1.0 / 24.0
    p = p * r + 1.0 / 6.0
    p = p * r + 0.5
    p = p * r + 1.0
    p = p * r + 1.0
    return p * _bits_to_f64((np.int64(k) + 1023) << 52)


@njit(cache=True)
def _inv_norm_cdf(p: float) -> float:
    """Inverse standard-normal CDF (Wichura 1988, AS 241 PPND16).

    Full double precision; endpoints map to -inf/+inf so that downstream
    exp() turns them into the correct 0 / +inf alpha limits.
    """
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (
            (
                (
                    (
                        (
                            (
                                (2.5090809287301226727e3 * r + 3.3430575583588128105e4)
                                * r
                                + 6.7265770927008700853e4
                            )
                            * r
                            + 4.5921953931549871457e4
                        )
                        * r
                        + 1.3731693765509461125e4
                    )
                    * r
                    + 1.9715909503065514427e3
                )
                * r
                + 1.3314166789178437745e2
            )
            * r
            + 3.3871328727963666080e0
        )
        den = (
            (
                (
                    (
                        (
                            (
                                (5.2264952788528545610e3 * r + 2.8729085735721942674e4)
                                * r
                                + 3.9307895800092710610e4
                            )
                            * r
                            + 2.1213794301586595867e4
                        )
                        * r
                        + 5.3941960214247511077e3
                    )
                    * r
                    + 6.8718700749205790830e2
                )
                * r
                + 4.2313330701600911252e1
            )
            * r
            + 1.0
        )
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = np.sqrt(-np.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (
            (
                (
                    (
                        (
                            (
                                (7.74545014278341407640e-4 * r + 2.27238449892691845833e-2)
                                * r
                                + 2.41780725177450611770e-1
                            )
                            * r
                            + 1.27045825245236838258e0
                        )
                        * r
                        + 3.64784832476320460504e0
                    )
                    * r
                    + 5.76949722146069140550e0
                )
                * r
                + 4.63033784615654529590e0
            )
            * r
            + 1.42343711074968357734e0
        )
        den = (
            (
                (
                    (
                        (
                            (
                                (1.05075007164441684324e-9 * r + 5.47593808499534494600e-4)
                                * r
                                + 1.51986665636164571966e-2
                            )
                            * r
                            + 1.48103976427480074590e-1
                        )
                        * r
                        + 6.89767334985100004550e-1
                    )
                    * r
                    + 1.67638483018380384940e0
                )
                * r
                + 2.05319162663775882187e0
            )
            * r
            + 1.0
        )
    else:
        r = r - 5.0
        num = (
            (
                (
                    (
                        (
                            (
                                (2.01033439929228813265e-7 * r + 2.71155556874348757815e-5)
                                * r
                                + 1.24266094738807843860e-3
                            )
                            * r
                            + 2.65321895265761230930e-2
                        )
                        * r
                        + 2.96560571828504891230e-1
                    )
                    * r
                    + 1.78482653991729133580e0
                )
                * r
                + 5.46378491116411436990e0
            )
            * r
            + 6.65790464350110377720e0
        )
        den = (
            (
                (
                    (
                        (
                            (
                                (2.04426310338993978564e-15 * r + 1.42151175831644588870e-7)
                                * r
                                + 1.84631831751005468180e-5
                            )
                            * r
                            + 7.86869131145613259100e-4
                        )
                        * r
                        + 1.48753612908506148525e-2
                    )
                    * r
                    + 1.36929880922735805310e-1
                )
                * r
                + 5.99832206555887937690e-1
            )
            * r
            + 1.0
        )
    val = num / den
    if q < 0.0:
        return -val
    return val


@njit(cache=True, parallel=True)
def stratified_logit_shares(
    gamma: np.ndarray,
    prices: np.ndarray,
    cdf_at_cuts: np.ndarray,
    alpha_log_mean: np.ndarray,
    alpha_log_sd: np.ndarray,
    uniforms: np.ndarray,
    full_menu: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Stratum-weighted mean logit probabilities per market.

    Stratum k of market t carries mass cdf[t,k+1]-cdf[t,k] and menu depth k+1
    (or the full line when full_menu); its alpha draws are the shared uniforms
    pushed through the conditional lognormal quantile. Deltas are shifted by
    max(0, max gamma) per market, valid because alpha >= 0 and prices > 0.
    """
    t_n, j_n = gamma.shape
    n = uniforms.size
    inside = np.zeros((t_n, j_n))
    outside = np.zeros(t_n)
    for t in prange(t_n):
        shift = 0.0
        for j in range(j_n):
            if gamma[t, j] > shift:
                shift = gamma[t, j]
        out_w = _fast_exp(-shift)
        # Separate passes per stratum: the branchy inverse-CDF loop stays
        # scalar, everything downstream of it auto-vectorizes.
        z = np.empty(n)
        alpha = np.empty(n)
        w = np.empty((j_n, n))
        inv_denom = np.empty(n)
        for k in range(j_n):
            f_lo = cdf_at_cuts[t, k]
            mass = cdf_at_cuts[t, k + 1] - f_lo
            if mass <= 0.0:
                continue
            depth = j_n if full_menu else k + 1
            for i in range(n):
                z[i] = _inv_norm_cdf(f_lo + uniforms[i] * mass)
            for i in range(n):
                alpha[i] = _fast_exp(alpha_log_mean[t] + alpha_log_sd[t] * z[i])
            for j in range(depth):
                base = gamma[t, j] - shift
                pj = prices[t, j]
                for i in range(n):
                    w[j, i] = _fast_exp(base - alpha[i] * pj)
            for i in range(n):
                d = out_w
                for j in range(depth):
                    d += w[j, i]
                inv_denom[i] = 1.0 / d
            scale = mass / n
            for j in range(depth):
                acc = 0.0
                for i in range(n):
                    acc += w[j, i] * inv_denom[i]
                inside[t, j] += scale * acc
            acc_out = 0.0
            for i in range(n):
                acc_out += inv_denom[i]
            outside[t] += scale * out_w * acc_out
    return inside, outside


@njit(cache=True, parallel=True)
def full_logit_shares_from_parts(
    gamma: np.ndarray, price_part: np.ndarray, rows: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Mean full-line logit probabilities given precomputed exp(-alpha_i p_j).

    price_part is (T, N, J) and only depends on (theta, prices, incomes);
    gamma is (len(rows), J) and rows selects the price_part markets, so a
    share inversion can shrink its active set without copying the big array.
    """
    a_n, j_n = gamma.shape
    n = price_part.shape[1]
    inside = np.zeros((a_n, j_n))
    outside = np.zeros(a_n)
    for a in prange(a_n):
        t = rows[a]
        shift = 0.0
        for j in range(j_n):
            if gamma[a, j] > shift:
                shift = gamma[a, j]
        out_w = _fast_exp(-shift)
        wg = np.empty(j_n)
        for j in range(j_n):
            wg[j] = _fast_exp(gamma[a, j] - shift)
        acc = np.zeros(j_n)
        acc_out = 0.0
        for i in range(n):
            denom = out_w
            for j in range(j_n):
                denom += wg[j] * price_part[t, i, j]
            inv = 1.0 / denom
            for j in range(j_n):
                acc[j] += wg[j] * price_part[t, i, j] * inv
            acc_out += out_w * inv
        for j in range(j_n):
            inside[a, j] = acc[j] / n
        outside[a] = acc_out / n
    return inside, outside
