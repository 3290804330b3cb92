"""Synthetic-market generator, income-quintile fitting, and margin arithmetic.

The generator builds a Monte Carlo universe that mimics a province-year
cigarette panel: nominal tier prices and margins deflated by a per-market CPI,
lognormal incomes, mean-utility shocks, and observed shares simulated under
the endogenous-menu model at the true price-sensitivity scale. Also here:
fitting lognormal income parameters to published quintile means, and the
two-step after-tax wholesale-margin formula used to construct tier margins
from tax schedules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optimize import golden_section
from .panel import SyntheticPanel
from .shares import N_DRAWS_DEFAULT, DrawSet, panel_foldable_shares

DEFAULT_XI = (2.0, 1.5, 1.2, 1.0, 0.8)
DEFAULT_NOMINAL_PRICES = (3.6, 2.4, 1.6, 1.2, 1.0)
DEFAULT_NOMINAL_MARGINS = (2.5, 1.8, 1.2, 1.0, 0.8)


@dataclass(frozen=True)
class DgpConfig:
    """Parameters of the synthetic universe."""

    n_markets: int = 186
    xi: tuple[float, ...] = DEFAULT_XI
    nominal_prices: tuple[float, ...] = DEFAULT_NOMINAL_PRICES
    nominal_margins: tuple[float, ...] = DEFAULT_NOMINAL_MARGINS
    theta_true: float = 2.0
    shock_scale: float = 0.3
    seed: int = 0
    n_draws: int = N_DRAWS_DEFAULT

    def __post_init__(self):
        j = len(self.xi)
        if len(self.nominal_prices) != j or len(self.nominal_margins) != j:
            raise ValueError("xi, nominal_prices, nominal_margins need equal length")
        if self.theta_true <= 0:
            raise ValueError("theta_true must be > 0")
        if self.n_markets < 1:
            raise ValueError("n_markets must be >= 1")


def generate_panel(cfg: DgpConfig, draws: DrawSet | None = None) -> SyntheticPanel:
    """Draw a synthetic panel; bit-reproducible for a fixed config and seed.

    Per market: CPI = 1 + 0.2 u1, income log-mean = 1 + 0.1 u2, income log-sd
    = 0.5 + 0.1 u3 with u ~ U(0,1); real prices/margins are the nominal
    vectors deflated by 1/CPI; mean utilities are xi plus N(0, shock_scale^2)
    shocks; observed shares come from the menu-endogenous simulator at
    theta_true.
    """
    ss = np.random.SeedSequence(cfg.seed)
    key_panel, key_draws = ss.spawn(2)
    rng = np.random.default_rng(key_panel)
    t = cfg.n_markets
    j = len(cfg.xi)
    eps1 = rng.random(t)
    eps2 = rng.random(t)
    eps3 = rng.random(t)
    cpi = 1.0 + 0.2 * eps1
    inflate = 1.0 / cpi
    prices = np.outer(inflate, np.asarray(cfg.nominal_prices, dtype=float))
    margins = np.outer(inflate, np.asarray(cfg.nominal_margins, dtype=float))
    mu = 1.0 + 0.1 * eps2
    sigma = 0.5 + 0.1 * eps3
    shocks = cfg.shock_scale * rng.standard_normal((t, j))
    gamma = np.asarray(cfg.xi, dtype=float)[None, :] + shocks
    if draws is None:
        draws = DrawSet.from_seed(key_draws.generate_state(1)[0], cfg.n_draws)
    inside, _, _ = panel_foldable_shares(
        gamma, prices, margins, cfg.theta_true, mu, sigma, draws.uniforms
    )
    return SyntheticPanel(
        market_ids=[f"m{i:03d}" for i in range(t)],
        shares=inside,
        prices=prices,
        margins=margins,
        income_log_mean=mu,
        income_log_sd=sigma,
        cpi=cpi,
        true_theta=cfg.theta_true,
        true_xi=np.asarray(cfg.xi, dtype=float),
        true_gamma=gamma,
        seed=cfg.seed,
    )


def simulated_quintile_means(
    a: float, b: float, sorted_normals: np.ndarray
) -> np.ndarray:
    """Quintile means of exp(a + b z) over a fixed sorted z sample."""
    inc = np.exp(a + b * sorted_normals)
    return np.array([chunk.mean() for chunk in np.array_split(inc, 5)])


def fit_lognormal_from_quintiles(
    quintile_means,
    n_sim: int = 10_000,
    seed: int = 0,
    a_bounds: tuple[float, float] = (-2.0, 5.0),
    b_bounds: tuple[float, float] = (1e-6, 3.0),
    obj_tol: float = 1e-4,
    max_sweeps: int = 60,
) -> tuple[float, float]:
    """Fit lognormal income parameters to observed quintile means.

    Simulates n_sim incomes exp(a + b z) from one seeded normal sample,
    matches the five simulated quintile means to the observed ones, and
    minimizes the sum of squared gaps by coordinate-wise golden section over
    (a, b). Deterministic given the seed.
    """
    y = np.asarray(quintile_means, dtype=float)
    if y.shape != (5,):
        raise ValueError("exactly five quintile means are required")
    if np.any(y <= 0):
        raise ValueError("quintile means must be positive")
    if np.any(np.diff(y) <= 0):
        raise ValueError(
            "quintile means must be strictly increasing; equal quintiles imply "
            "a degenerate zero-variance income distribution"
        )
    rng = np.random.default_rng(seed)
    z = np.sort(rng.standard_normal(n_sim))

    def objective(a, b):
        return float(np.sum((simulated_quintile_means(a, b, z) - y) ** 2))

    a = float(np.log(y.mean()))
    a = min(max(a, a_bounds[0]), a_bounds[1])
    b = 0.5
    best = objective(a, b)
    for _ in range(max_sweeps):
        a, _ = golden_section(lambda x: objective(x, b), *a_bounds, xtol=1e-7)
        b, val = golden_section(lambda x: objective(a, x), *b_bounds, xtol=1e-7)
        if best - val < obj_tol:
            best = min(best, val)
            break
        best = val
    return a, b


@dataclass(frozen=True)
class TaxParams:
    """Inputs of the two-step after-tax wholesale-margin calculation."""

    wholesale_price: float
    allocation_wholesale_margin_rate: float
    wholesale_retail_margin_rate: float
    vat_rate: float
    advalorem_wholesale_rate: float
    specific_wholesale_tax: float = 0.0

    def __post_init__(self):
        if self.wholesale_price <= 0:
            raise ValueError("wholesale_price must be > 0")
        for name in (
            "allocation_wholesale_margin_rate",
            "wholesale_retail_margin_rate",
            "vat_rate",
            "advalorem_wholesale_rate",
        ):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.specific_wholesale_tax < 0:
            raise ValueError("specific_wholesale_tax must be >= 0")


def allocation_price(tax: TaxParams) -> float:
    """Back out the allocation price from the wholesale price and rates."""
    return tax.wholesale_price / (
        (1.0 + tax.allocation_wholesale_margin_rate) * (1.0 + tax.vat_rate)
    )


def wholesale_margin(tax: TaxParams) -> float:
    """After-tax wholesale unit margin: A*(a - t_a) - t_s with A the allocation price."""
    a = allocation_price(tax)
    return (
        a * tax.allocation_wholesale_margin_rate
        - a * tax.advalorem_wholesale_rate
        - tax.specific_wholesale_tax
    )
