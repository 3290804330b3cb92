"""Smooth simulated market shares under endogenous menus.

Price sensitivity is alpha = theta / income with lognormal income, so alpha
itself is lognormal and its CDF/quantile are analytic. Shares integrate logit
choice probabilities over the alpha distribution, one stratum per menu depth:
consumers between two adjacent cutoffs face the same menu, and each stratum is
sampled by pushing one shared set of uniform draws through the conditional
quantile function. Because the draws are fixed and every map is smooth in the
parameters, the simulated shares are smooth in (gamma, theta) -- the property
the estimator's numerical search relies on.

A full-availability (standard logit) baseline lives here too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import _kernels
from .assortment import solve_cutoff_array
from .choice import ProductLine

N_DRAWS_DEFAULT = 2000
N_STANDARD_DRAWS_DEFAULT = 10_000

# Compiled kernels and the numpy fallback agree to ~1e-12; flip this off to
# force the fallback (slow, reference) path.
use_compiled_kernels = _kernels.HAVE_NUMBA


class ZeroMassIntervalError(ValueError):
    """The requested alpha interval carries no probability mass."""


@dataclass(frozen=True)
class TasteDistribution:
    """Population distribution of price sensitivity alpha = theta / income.

    Income is lognormal with log-mean ``income_log_mean`` and log-sd
    ``income_log_sd`` (income in 10,000-currency units), which makes
    log(alpha) normal with mean log(theta) - income_log_mean and the same sd.
    """

    theta: float
    income_log_mean: float
    income_log_sd: float

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be > 0")
        if self.income_log_sd <= 0:
            raise ValueError("income_log_sd must be > 0")

    @property
    def alpha_log_mean(self) -> float:
        return float(np.log(self.theta) - self.income_log_mean)

    @property
    def alpha_log_sd(self) -> float:
        return float(self.income_log_sd)


@dataclass(frozen=True, eq=False)
class DrawSet:
    """Uniform draws fixed once per run and reused everywhere.

    The same vector is reused in every cutoff interval and every market, and
    is held fixed across parameter evaluations; redrawing anywhere would break
    the smoothness of the simulated shares.
    """

    uniforms: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        u = np.asarray(self.uniforms, dtype=float)
        if u.ndim != 1 or u.size == 0:
            raise ValueError("uniforms must be a non-empty vector")
        if np.any(u <= 0) or np.any(u >= 1):
            raise ValueError("uniforms must lie strictly inside (0, 1)")
        object.__setattr__(self, "uniforms", u)

    @classmethod
    def from_seed(cls, seed: int, n: int = N_DRAWS_DEFAULT) -> "DrawSet":
        rng = np.random.default_rng(seed)
        u = rng.random(n)
        while np.any(u == 0.0):  # random() is [0,1); nudge the measure-zero edge
            u[u == 0.0] = rng.random(int(np.sum(u == 0.0)))
        return cls(u, seed)

    @property
    def size(self) -> int:
        return self.uniforms.size


@dataclass(frozen=True, eq=False)
class MarketShares:
    """Predicted or observed shares of the J products plus the outside share."""

    products: np.ndarray
    outside: float

    def __post_init__(self):
        p = np.asarray(self.products, dtype=float)
        object.__setattr__(self, "products", p)
        object.__setattr__(self, "outside", float(self.outside))

    @property
    def total(self) -> float:
        return float(self.products.sum() + self.outside)


def alpha_cdf(dist: TasteDistribution, alpha) -> np.ndarray | float:
    """P(price sensitivity <= alpha); zero on the non-positive axis."""
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = ndtr((np.log(a[pos]) - dist.alpha_log_mean) / dist.alpha_log_sd)
    if np.ndim(alpha) == 0:
        return float(out[0])
    return out.reshape(np.shape(alpha))


def alpha_quantile(dist: TasteDistribution, q) -> np.ndarray | float:
    """Inverse of alpha_cdf on [0, 1]; 0 and +inf at the endpoints."""
    z = ndtri(q)
    return np.exp(dist.alpha_log_mean + dist.alpha_log_sd * z)


def conditional_alpha_sample(
    dist: TasteDistribution, interval: tuple[float, float], draws: DrawSet
) -> np.ndarray:
    """Alpha sample conditional on one interval, via the quantile transform.

    Each uniform u maps to the alpha with conditional CDF u, so the same
    DrawSet yields samples that move smoothly with the distribution
    parameters. Raises ZeroMassIntervalError when the interval has no mass
    (its stratum contributes exactly zero share and is skipped upstream).
    """
    lo, hi = interval
    f_lo = alpha_cdf(dist, lo)
    f_hi = alpha_cdf(dist, hi)
    if not f_hi > f_lo:
        raise ZeroMassIntervalError(f"interval ({lo}, {hi}] has zero mass")
    q = f_lo + draws.uniforms * (f_hi - f_lo)
    return alpha_quantile(dist, q)


def _stratum_alphas(
    log_mean: np.ndarray,
    log_sd: np.ndarray,
    cdf_at_cuts: np.ndarray,
    uniforms: np.ndarray,
) -> np.ndarray:
    """Conditional alpha draws for every (market, stratum): shape (T, J, N)."""
    f_lo = cdf_at_cuts[:, :-1, None]
    f_hi = cdf_at_cuts[:, 1:, None]
    q = f_lo + uniforms[None, None, :] * (f_hi - f_lo)
    q = np.clip(q, 0.0, 1.0)
    return np.exp(log_mean[:, None, None] + log_sd[:, None, None] * ndtri(q))


def _cdf_at_cutoffs(
    cutoffs: np.ndarray, log_mean: np.ndarray, log_sd: np.ndarray
) -> np.ndarray:
    """Lognormal alpha CDF at the cutoff grid; non-positive cutoffs map to 0.

    Mapping every cutoff at or below zero to probability 0 is exactly the
    convention that consumers below the first positive cutoff face the
    shortest menu whose upper cutoff is positive.
    """
    t, m = cutoffs.shape
    out = np.zeros((t, m))
    out[:, -1] = 1.0
    interior = cutoffs[:, 1:-1]
    pos = interior > 0
    z = np.full_like(interior, -np.inf)
    np.log(interior, where=pos, out=z)
    out[:, 1:-1] = np.where(
        pos, ndtr((z - log_mean[:, None]) / log_sd[:, None]), 0.0
    )
    return out


def panel_foldable_shares(
    gamma: np.ndarray,
    prices: np.ndarray,
    margins: np.ndarray,
    theta: float,
    income_log_mean: np.ndarray,
    income_log_sd: np.ndarray,
    uniforms: np.ndarray,
    full_menu_everywhere: bool = False,
    cutoff_prices: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulated shares for a whole panel of markets at once.

    gamma/prices/margins are (T, J); returns (inside (T, J), outside (T,),
    stratum masses (T, J)). Stratum j carries the consumers whose optimal menu
    is the top-(j+1) set; with ``full_menu_everywhere`` the same strata and
    draws are kept but every stratum sees the full line, which gives an
    exactly-paired full-availability counterfactual. ``cutoff_prices`` freezes
    the menu assignment at a different price vector (counterfactuals that hold
    assortments fixed while prices move).
    """
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    margins = np.atleast_2d(np.asarray(margins, dtype=float))
    t, j = gamma.shape
    log_mean = np.log(theta) - np.asarray(income_log_mean, dtype=float)
    log_sd = np.asarray(income_log_sd, dtype=float)
    price_basis = prices if cutoff_prices is None else np.atleast_2d(
        np.asarray(cutoff_prices, dtype=float)
    )
    cutoffs = solve_cutoff_array(gamma, price_basis, margins)
    cdf = _cdf_at_cutoffs(cutoffs, log_mean, log_sd)
    masses = np.diff(cdf, axis=1)
    if use_compiled_kernels:
        inside, outside = _kernels.stratified_logit_shares(
            np.ascontiguousarray(gamma),
            np.ascontiguousarray(prices),
            cdf,
            log_mean,
            log_sd,
            uniforms,
            full_menu_everywhere,
        )
        return inside, outside, masses

    alphas = _stratum_alphas(log_mean, log_sd, cdf, uniforms)
    inside = np.zeros((t, j))
    outside = np.zeros(t)
    shift = np.maximum(0.0, np.max(gamma, axis=1))  # alpha >= 0 keeps delta <= gamma
    out_w = np.exp(-shift)
    for k in range(j):
        mass = masses[:, k]
        if not np.any(mass > 0):
            continue
        depth = j if full_menu_everywhere else k + 1
        delta = (
            gamma[:, None, :depth]
            - alphas[:, k, :, None] * prices[:, None, :depth]
        )
        w = np.exp(delta - shift[:, None, None])
        denom = out_w[:, None] + w.sum(axis=2)
        inside[:, :depth] += mass[:, None] * (w / denom[:, :, None]).mean(axis=1)
        outside += mass * (out_w[:, None] / denom).mean(axis=1)
    return inside, outside, masses


class StandardLogitKernel:
    """Full-availability logit shares with draw-dependent pieces precomputed.

    alpha_i = theta / exp(mu_t + sigma_t v_i) does not depend on gamma, so the
    exp(-alpha p) factors are built once per theta and reused across every
    contraction step of a share inversion.
    """

    def __init__(
        self,
        prices: np.ndarray,
        theta: float,
        income_log_mean: np.ndarray,
        income_log_sd: np.ndarray,
        normal_draws: np.ndarray,
    ):
        prices = np.atleast_2d(prices)
        mu = np.asarray(income_log_mean, dtype=float)
        sd = np.asarray(income_log_sd, dtype=float)
        v = np.asarray(normal_draws, dtype=float)
        alpha = np.exp(np.log(theta) - mu[:, None] - sd[:, None] * v[None, :])
        self._price_part = np.exp(-alpha[:, :, None] * prices[:, None, :])

    def shares(
        self, gamma: np.ndarray, idx: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Mean logit probabilities at gamma; idx restricts to a market subset."""
        gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
        if use_compiled_kernels:
            rows = (
                np.arange(self._price_part.shape[0], dtype=np.int64)
                if idx is None
                else np.asarray(idx, dtype=np.int64)
            )
            return _kernels.full_logit_shares_from_parts(
                np.ascontiguousarray(gamma), self._price_part, rows
            )
        e = self._price_part if idx is None else self._price_part[idx]
        shift = np.maximum(0.0, np.max(gamma, axis=1))
        w = np.exp(gamma - shift[:, None])
        num = w[:, None, :] * e
        out_w = np.exp(-shift)
        denom = out_w[:, None] + num.sum(axis=2)
        inside = (num / denom[:, :, None]).mean(axis=1)
        outside = (out_w[:, None] / denom).mean(axis=1)
        return inside, outside


def predicted_shares(
    gamma, line: ProductLine, dist: TasteDistribution, draws: DrawSet
) -> MarketShares:
    """Market shares under endogenous menus for one market.

    Solves the cutoffs implied by (gamma, prices, margins), weights each menu
    depth by its alpha-interval mass, and averages logit probabilities over
    the conditional alpha sample of each stratum. Deterministic given the
    DrawSet.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (line.size,):
        raise ValueError("gamma dimension does not match the line")
    inside, outside, _ = panel_foldable_shares(
        gamma[None, :],
        line.prices[None, :],
        line.margins[None, :],
        dist.theta,
        np.array([dist.income_log_mean]),
        np.array([dist.income_log_sd]),
        draws.uniforms,
    )
    return MarketShares(inside[0], float(outside[0]))


def standard_logit_shares(
    gamma, line: ProductLine, dist: TasteDistribution, normal_draws
) -> MarketShares:
    """Full-availability logit shares for one market (the baseline model)."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (line.size,):
        raise ValueError("gamma dimension does not match the line")
    kernel = StandardLogitKernel(
        line.prices[None, :],
        dist.theta,
        np.array([dist.income_log_mean]),
        np.array([dist.income_log_sd]),
        np.asarray(normal_draws, dtype=float),
    )
    inside, outside = kernel.shares(gamma[None, :])
    return MarketShares(inside[0], float(outside[0]))
