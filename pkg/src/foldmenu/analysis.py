"""Post-estimation engine: elasticities, counterfactuals, menu distributions.

Every scenario is a paired evaluation: baseline and counterfactual shares use
the same fitted utilities, the same taste draws, and the same strata, so
reported changes carry no fresh simulation noise. Cross-market aggregates are
weighted averages with each market's baseline sales as weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .estimation import FOLDABLE, STANDARD, EstimationResult, _derived_seeds
from .panel import Panel
from .shares import DrawSet, StandardLogitKernel, panel_foldable_shares

ADJUSTED = "adjusted"
FIXED_ASSORTMENT = "fixed_assortment"
STANDARD_LOGIT = "standard_logit"

_MODES = (ADJUSTED, FIXED_ASSORTMENT, STANDARD_LOGIT)


@dataclass(frozen=True, eq=False)
class ElasticityMatrix:
    """entries[j, k]: percent change in tier-(k+1) sales when the price of
    tier (j+1) rises by ``pct`` percent; sales-weighted across markets."""

    entries: np.ndarray
    weights: np.ndarray
    mode: str
    pct: float

    def to_frame(self) -> pd.DataFrame:
        j = self.entries.shape[0]
        rows = []
        for a in range(j):
            for b in range(j):
                rows.append(
                    {
                        "mode": self.mode,
                        "price_tier": a + 1,
                        "sales_tier": b + 1,
                        "pct_change": self.entries[a, b],
                    }
                )
        return pd.DataFrame(rows)


@dataclass(eq=False)
class CounterfactualReport:
    scenario: str
    tier_sales_pct: np.ndarray
    total_sales_pct: float
    tier_revenue_pct: np.ndarray | None = None
    total_revenue_pct: float | None = None
    wholesale_profit_pct: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for k, v in enumerate(self.tier_sales_pct):
            rows.append(
                {"scenario": self.scenario, "tier": k + 1, "metric": "sales_pct",
                 "value": v}
            )
        rows.append(
            {"scenario": self.scenario, "tier": 0, "metric": "total_sales_pct",
             "value": self.total_sales_pct}
        )
        if self.tier_revenue_pct is not None:
            for k, v in enumerate(self.tier_revenue_pct):
                rows.append(
                    {"scenario": self.scenario, "tier": k + 1,
                     "metric": "tax_revenue_pct", "value": v}
                )
            rows.append(
                {"scenario": self.scenario, "tier": 0,
                 "metric": "total_tax_revenue_pct", "value": self.total_revenue_pct}
            )
        if self.wholesale_profit_pct is not None:
            rows.append(
                {"scenario": self.scenario, "tier": 0,
                 "metric": "wholesale_profit_pct", "value": self.wholesale_profit_pct}
            )
        return pd.DataFrame(rows)


def _rebuild_draws(result: EstimationResult, panel: Panel, draws, standard_draws):
    """Recover the estimation draws from result metadata unless given."""
    meta = result.metadata or {}
    if result.model == FOLDABLE and draws is None:
        seed = meta.get("draws_seed")
        if seed is None:
            raise ValueError(
                "result metadata has no draws seed; pass the DrawSet explicitly"
            )
        draws = DrawSet.from_seed(int(seed), int(meta.get("n_draws", 2000)))
    if result.model == STANDARD and standard_draws is None:
        base_seed = meta.get("seed")
        if base_seed is None:
            raise ValueError(
                "result metadata has no seed; pass standard_draws explicitly"
            )
        _, std_seed, _ = _derived_seeds(int(base_seed))
        standard_draws = np.random.default_rng(std_seed).standard_normal(
            int(meta.get("n_draws", 10_000))
        )
    return draws, standard_draws


class ScenarioEngine:
    """Paired share evaluations around one fitted model."""

    def __init__(
        self,
        result: EstimationResult,
        panel: Panel,
        draws: DrawSet | None = None,
        standard_draws: np.ndarray | None = None,
    ):
        draws, standard_draws = _rebuild_draws(result, panel, draws, standard_draws)
        self.result = result
        self.panel = panel
        self.draws = draws
        self.standard_draws = standard_draws
        self.theta = result.theta_hat
        self.gamma = result.gamma_hat

    def shares(
        self,
        prices: np.ndarray,
        mode: str = ADJUSTED,
        full_menu: bool = False,
    ) -> np.ndarray:
        """Inside shares (T, J) at the given prices, gamma held fixed."""
        if mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        p = self.panel
        if mode == STANDARD_LOGIT:
            if self.standard_draws is None:
                raise ValueError("standard_logit mode needs standard_draws")
            kernel = StandardLogitKernel(
                prices, self.theta, p.income_log_mean, p.income_log_sd,
                self.standard_draws,
            )
            return kernel.shares(self.gamma)[0]
        if self.draws is None:
            raise ValueError(f"{mode} mode needs a DrawSet")
        inside, _, _ = panel_foldable_shares(
            self.gamma,
            prices,
            p.margins,
            self.theta,
            p.income_log_mean,
            p.income_log_sd,
            self.draws.uniforms,
            full_menu_everywhere=full_menu,
            cutoff_prices=p.prices if mode == FIXED_ASSORTMENT else None,
        )
        return inside

    def stratum_masses(self, prices: np.ndarray | None = None) -> np.ndarray:
        p = self.panel
        _, _, masses = panel_foldable_shares(
            self.gamma,
            p.prices if prices is None else prices,
            p.margins,
            self.theta,
            p.income_log_mean,
            p.income_log_sd,
            self.draws.uniforms,
        )
        return masses

    def default_mode(self) -> str:
        return STANDARD_LOGIT if self.result.model == STANDARD else ADJUSTED

    def sales_weights(self, baseline_inside: np.ndarray) -> np.ndarray:
        total = self.panel.market_size * baseline_inside.sum(axis=1)
        return total / total.sum()


def _pct_changes(s0, s1, sizes, weights):
    """Sales-weighted mean per-market percent changes, per tier and total."""
    sales0 = sizes[:, None] * s0
    sales1 = sizes[:, None] * s1
    tier = 100.0 * np.sum(
        weights[:, None] * (sales1 - sales0) / sales0, axis=0
    )
    tot0 = sales0.sum(axis=1)
    tot1 = sales1.sum(axis=1)
    total = 100.0 * float(np.sum(weights * (tot1 - tot0) / tot0))
    return tier, total


def elasticities(
    result: EstimationResult,
    panel: Panel,
    mode: str | None = None,
    *,
    pct: float = 1.0,
    draws: DrawSet | None = None,
    standard_draws: np.ndarray | None = None,
    market_weights: np.ndarray | None = None,
) -> ElasticityMatrix:
    """Own- and cross-price responses to a one-tier price increase of ``pct``%.

    Row j holds the percent sales changes of every tier when only tier j+1's
    price rises, computed by discrete perturbation with gamma fixed. Modes:
    adjusted re-solves the menu cutoffs at the new prices, fixed_assortment
    freezes them at baseline prices, standard_logit gives everybody the full
    line.
    """
    engine = ScenarioEngine(result, panel, draws, standard_draws)
    mode = mode or engine.default_mode()
    s0 = engine.shares(panel.prices, mode=mode)
    weights = (
        engine.sales_weights(s0) if market_weights is None
        else np.asarray(market_weights, dtype=float) / np.sum(market_weights)
    )
    j = panel.n_tiers
    entries = np.zeros((j, j))
    for a in range(j):
        prices = panel.prices.copy()
        prices[:, a] *= 1.0 + pct / 100.0
        s1 = engine.shares(prices, mode=mode)
        entries[a], _ = _pct_changes(s0, s1, panel.market_size, weights)
    return ElasticityMatrix(entries=entries, weights=weights, mode=mode, pct=pct)


def decompose_elasticities(
    result: EstimationResult,
    panel: Panel,
    *,
    pct: float = 1.0,
    draws: DrawSet | None = None,
    market_weights: np.ndarray | None = None,
) -> dict[str, ElasticityMatrix | np.ndarray]:
    """Split the adjusted-menu response into a fixed-menu part plus the
    menu-adjustment term (their difference); closure is zero by construction
    and reported to confirm the plumbing."""
    adj = elasticities(
        result, panel, ADJUSTED, pct=pct, draws=draws, market_weights=market_weights
    )
    fix = elasticities(
        result, panel, FIXED_ASSORTMENT, pct=pct, draws=draws,
        market_weights=market_weights,
    )
    adjustment = adj.entries - fix.entries
    closure = adj.entries - fix.entries - adjustment
    return {
        "adjusted": adj,
        "fixed_assortment": fix,
        "adjustment": adjustment,
        "closure": closure,
    }


def uniform_price_change(
    result: EstimationResult,
    panel: Panel,
    pct: float,
    *,
    mode: str | None = None,
    draws: DrawSet | None = None,
    standard_draws: np.ndarray | None = None,
    market_weights: np.ndarray | None = None,
) -> CounterfactualReport:
    """Percent sales changes when every tier's price moves by ``pct``% at once."""
    engine = ScenarioEngine(result, panel, draws, standard_draws)
    mode = mode or engine.default_mode()
    s0 = engine.shares(panel.prices, mode=mode)
    weights = (
        engine.sales_weights(s0) if market_weights is None
        else np.asarray(market_weights, dtype=float) / np.sum(market_weights)
    )
    s1 = engine.shares(panel.prices * (1.0 + pct / 100.0), mode=mode)
    tier, total = _pct_changes(s0, s1, panel.market_size, weights)
    return CounterfactualReport(
        scenario=f"uniform_price_{pct:+g}pct_{mode}",
        tier_sales_pct=tier,
        total_sales_pct=total,
    )


def tax_counterfactual(
    result: EstimationResult,
    panel: Panel,
    advalorem_increase: float,
    *,
    unit_taxes: np.ndarray | None = None,
    mode: str | None = None,
    draws: DrawSet | None = None,
    standard_draws: np.ndarray | None = None,
    market_weights: np.ndarray | None = None,
) -> CounterfactualReport:
    """Ad valorem retail tax increase passed fully into retail prices.

    The rate is a fraction in [0, 1); retail prices scale by (1 + rate) while
    wholesale margins stay put, so the menu cutoffs shift only through the
    price side. Revenue outputs need baseline per-tier unit taxes (nominal,
    deflated per market by CPI like prices); without them the revenue columns
    are suppressed with a notice. The added per-unit tax is rate times the
    baseline retail price.
    """
    if not 0.0 <= advalorem_increase < 1.0:
        raise ValueError("advalorem_increase must lie in [0, 1)")
    engine = ScenarioEngine(result, panel, draws, standard_draws)
    mode = mode or engine.default_mode()
    rate = float(advalorem_increase)
    s0 = engine.shares(panel.prices, mode=mode)
    weights = (
        engine.sales_weights(s0) if market_weights is None
        else np.asarray(market_weights, dtype=float) / np.sum(market_weights)
    )
    s1 = engine.shares(panel.prices * (1.0 + rate), mode=mode)
    tier, total = _pct_changes(s0, s1, panel.market_size, weights)
    report = CounterfactualReport(
        scenario=f"tax_{rate:.2f}_{mode}",
        tier_sales_pct=tier,
        total_sales_pct=total,
    )
    if unit_taxes is None:
        report.notes.append(
            "per-tier baseline unit taxes not supplied; tax-revenue outputs "
            "suppressed"
        )
        return report
    unit_taxes = np.asarray(unit_taxes, dtype=float)
    if unit_taxes.shape != (panel.n_tiers,) or np.any(unit_taxes <= 0):
        raise ValueError("unit_taxes must be J positive per-tier amounts")
    tax0 = unit_taxes[None, :] / panel.cpi[:, None]
    tax1 = tax0 + rate * panel.prices
    sales0 = panel.market_size[:, None] * s0
    sales1 = panel.market_size[:, None] * s1
    rev0 = tax0 * sales0
    rev1 = tax1 * sales1
    report.tier_revenue_pct = 100.0 * np.sum(
        weights[:, None] * (rev1 - rev0) / rev0, axis=0
    )
    r0 = rev0.sum(axis=1)
    r1 = rev1.sum(axis=1)
    report.total_revenue_pct = 100.0 * float(np.sum(weights * (r1 - r0) / r0))
    return report


def full_availability(
    result: EstimationResult,
    panel: Panel,
    *,
    draws: DrawSet | None = None,
    market_weights: np.ndarray | None = None,
) -> CounterfactualReport:
    """Hand every consumer the full line and compare with the fitted menus.

    The counterfactual reuses the baseline strata and taste draws (everyone
    keeps their alpha; only the menu grows), which pairs the two sides
    exactly: per draw, the top tier can only lose and the bottom tier can
    only gain, and the per-consumer profit-maximality of the fitted menus
    makes wholesale profit fall weakly market by market.
    """
    engine = ScenarioEngine(result, panel, draws, None)
    s0 = engine.shares(panel.prices, mode=ADJUSTED)
    weights = (
        engine.sales_weights(s0) if market_weights is None
        else np.asarray(market_weights, dtype=float) / np.sum(market_weights)
    )
    s1 = engine.shares(panel.prices, mode=ADJUSTED, full_menu=True)
    tier, total = _pct_changes(s0, s1, panel.market_size, weights)
    profit0 = (panel.margins * panel.market_size[:, None] * s0).sum(axis=1)
    profit1 = (panel.margins * panel.market_size[:, None] * s1).sum(axis=1)
    profit_pct = 100.0 * float(np.sum(weights * (profit1 - profit0) / profit0))
    return CounterfactualReport(
        scenario="full_availability",
        tier_sales_pct=tier,
        total_sales_pct=total,
        wholesale_profit_pct=profit_pct,
    )


def assortment_distribution(
    result: EstimationResult,
    panel: Panel,
    *,
    draws: DrawSet | None = None,
) -> pd.DataFrame:
    """Per-market consumer mass served each menu depth (rows sum to one)."""
    engine = ScenarioEngine(result, panel, draws, None)
    masses = engine.stratum_masses()
    t, j = masses.shape
    return pd.DataFrame(
        {
            "market_id": np.repeat(panel.market_ids, j),
            "income_log_mean": np.repeat(panel.income_log_mean, j),
            "menu_depth": np.tile(np.arange(1, j + 1), t),
            "mass": masses.ravel(),
        }
    )
