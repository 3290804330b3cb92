"""Market panel container and its CSV schema.

A panel is the estimation input: one row per market x tier with observed
shares, real (CPI-deflated) prices and margins, and the market's lognormal
income parameters. The same schema is written by the synthetic generator and
read back by the estimator, so the estimator cannot tell synthetic panels
from user-supplied ones.

Columns: market_id, tier, observed_share, real_price, real_margin,
income_log_mean, income_log_sd, cpi. Optional: group (province-style label
for tier-by-group dummies), market_size (sales scale, default 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

REQUIRED_COLUMNS = [
    "market_id",
    "tier",
    "observed_share",
    "real_price",
    "real_margin",
    "income_log_mean",
    "income_log_sd",
    "cpi",
]
OPTIONAL_COLUMNS = ["group", "market_size"]

# Full-precision floats so written panels round-trip exactly.
FLOAT_FORMAT = "%.17g"


class PanelSchemaError(ValueError):
    """A panel file or frame violates the documented schema."""


@dataclass(eq=False)
class Panel:
    """Arrays for T markets and J tiers, tier index ascending (1 = top margin)."""

    market_ids: list[str]
    shares: np.ndarray  # (T, J) observed inside shares
    prices: np.ndarray  # (T, J) real retail prices
    margins: np.ndarray  # (T, J) real unit margins
    income_log_mean: np.ndarray  # (T,)
    income_log_sd: np.ndarray  # (T,)
    cpi: np.ndarray  # (T,)
    groups: list[str] | None = None
    market_size: np.ndarray | None = None

    def __post_init__(self):
        self.shares = np.asarray(self.shares, dtype=float)
        self.prices = np.asarray(self.prices, dtype=float)
        self.margins = np.asarray(self.margins, dtype=float)
        self.income_log_mean = np.asarray(self.income_log_mean, dtype=float)
        self.income_log_sd = np.asarray(self.income_log_sd, dtype=float)
        self.cpi = np.asarray(self.cpi, dtype=float)
        if self.market_size is None:
            self.market_size = np.ones(self.n_markets)
        else:
            self.market_size = np.asarray(self.market_size, dtype=float)
        self._validate()

    @property
    def n_markets(self) -> int:
        return self.shares.shape[0]

    @property
    def n_tiers(self) -> int:
        return self.shares.shape[1]

    @property
    def outside_shares(self) -> np.ndarray:
        return 1.0 - self.shares.sum(axis=1)

    def _validate(self) -> None:
        t, j = self.shares.shape
        if len(self.market_ids) != t:
            raise PanelSchemaError("market_ids length does not match shares")
        for name, arr, shape in [
            ("prices", self.prices, (t, j)),
            ("margins", self.margins, (t, j)),
            ("income_log_mean", self.income_log_mean, (t,)),
            ("income_log_sd", self.income_log_sd, (t,)),
            ("cpi", self.cpi, (t,)),
            ("market_size", self.market_size, (t,)),
        ]:
            if arr.shape != shape:
                raise PanelSchemaError(f"{name} has shape {arr.shape}, wanted {shape}")
        if self.groups is not None and len(self.groups) != t:
            raise PanelSchemaError("groups length does not match markets")
        if np.any(self.shares <= 0) or np.any(self.shares >= 1):
            raise PanelSchemaError("observed shares must lie strictly in (0, 1)")
        if np.any(self.outside_shares <= 0):
            raise PanelSchemaError("every market needs a positive outside share")
        if np.any(self.prices <= 0):
            raise PanelSchemaError("real prices must be positive")
        if np.any(self.income_log_sd <= 0):
            raise PanelSchemaError("income_log_sd must be positive")

    def require_strict_margins(self) -> None:
        if np.any(np.diff(self.margins, axis=1) >= 0) or np.any(self.margins <= 0):
            raise PanelSchemaError(
                "margins must be strictly descending and positive in every market"
            )

    def subset(self, idx) -> "Panel":
        idx = np.asarray(idx)
        return Panel(
            market_ids=[self.market_ids[i] for i in idx],
            shares=self.shares[idx],
            prices=self.prices[idx],
            margins=self.margins[idx],
            income_log_mean=self.income_log_mean[idx],
            income_log_sd=self.income_log_sd[idx],
            cpi=self.cpi[idx],
            groups=None if self.groups is None else [self.groups[i] for i in idx],
            market_size=self.market_size[idx],
        )

    def to_frame(self) -> pd.DataFrame:
        t, j = self.shares.shape
        rows = {
            "market_id": np.repeat(self.market_ids, j),
            "tier": np.tile(np.arange(1, j + 1), t),
            "observed_share": self.shares.ravel(),
            "real_price": self.prices.ravel(),
            "real_margin": self.margins.ravel(),
            "income_log_mean": np.repeat(self.income_log_mean, j),
            "income_log_sd": np.repeat(self.income_log_sd, j),
            "cpi": np.repeat(self.cpi, j),
        }
        if self.groups is not None:
            rows["group"] = np.repeat(self.groups, j)
        if not np.all(self.market_size == 1.0):
            rows["market_size"] = np.repeat(self.market_size, j)
        return pd.DataFrame(rows)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "Panel":
        missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
        if missing:
            raise PanelSchemaError(f"panel is missing columns: {missing}")
        bad = df[REQUIRED_COLUMNS].isna()
        if bad.any().any():
            rows = (np.nonzero(bad.any(axis=1).to_numpy())[0] + 2).tolist()
            raise PanelSchemaError(f"panel has missing values at file rows {rows}")
        tiers = np.sort(df["tier"].unique())
        j = len(tiers)
        if not np.array_equal(tiers, np.arange(1, j + 1)):
            raise PanelSchemaError("tiers must be the consecutive integers 1..J")
        market_ids = list(dict.fromkeys(df["market_id"].astype(str)))
        t = len(market_ids)
        if len(df) != t * j:
            raise PanelSchemaError(
                f"expected {t * j} rows for {t} markets x {j} tiers, got {len(df)}"
            )
        df = df.copy()
        df["market_id"] = df["market_id"].astype(str)
        df = df.sort_values(
            ["market_id", "tier"],
            key=lambda s: s.map({m: i for i, m in enumerate(market_ids)})
            if s.name == "market_id"
            else s,
            kind="stable",
        )
        if not np.array_equal(
            df["tier"].to_numpy(), np.tile(np.arange(1, j + 1), t)
        ):
            raise PanelSchemaError(
                "every market needs exactly one row per tier 1..J"
            )
        shares = df["observed_share"].to_numpy().reshape(t, j)
        prices = df["real_price"].to_numpy().reshape(t, j)
        margins = df["real_margin"].to_numpy().reshape(t, j)
        per_market = df.groupby("market_id", sort=False).first()
        per_market = per_market.loc[market_ids]
        groups = (
            per_market["group"].astype(str).tolist() if "group" in df.columns else None
        )
        size = (
            per_market["market_size"].to_numpy()
            if "market_size" in df.columns
            else None
        )
        return cls(
            market_ids=market_ids,
            shares=shares,
            prices=prices,
            margins=margins,
            income_log_mean=per_market["income_log_mean"].to_numpy(),
            income_log_sd=per_market["income_log_sd"].to_numpy(),
            cpi=per_market["cpi"].to_numpy(),
            groups=groups,
            market_size=size,
        )

    @classmethod
    def from_csv(cls, path) -> "Panel":
        try:
            # round_trip parsing keeps the %.17g writes bit-exact
            df = pd.read_csv(path, float_precision="round_trip")
        except Exception as exc:
            raise PanelSchemaError(f"cannot read panel csv: {exc}") from exc
        return cls.from_frame(df)


@dataclass(eq=False)
class SyntheticPanel(Panel):
    """A generated panel that also carries the generating truth."""

    true_theta: float = float("nan")
    true_xi: np.ndarray = field(default_factory=lambda: np.array([]))
    true_gamma: np.ndarray = field(default_factory=lambda: np.array([[]]))
    seed: int | None = None

    def truth_dict(self) -> dict:
        return {
            "theta": self.true_theta,
            "xi": np.asarray(self.true_xi, dtype=float).tolist(),
            "gamma": np.asarray(self.true_gamma, dtype=float).tolist(),
            "seed": self.seed,
        }
