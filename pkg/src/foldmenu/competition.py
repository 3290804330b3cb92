"""Multi-firm assortment competition on a shared logit demand.

Firms own disjoint margin-ranked product sets and choose how deep a menu to
offer; competitors' offered products enter every consumer's logit denominator.
Best responses live on the foldable menus, are non-decreasing in competitors'
menus, and iterating them bottom-up walks a finite lattice to the
Pareto-dominant (smallest-menu) equilibrium. A random-coefficient variant
perturbs mean utilities across simulated consumers and measures how much the
foldable-menu restriction costs against full subset search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .choice import ProductLine

MAX_SUBSET_PRODUCTS = 12


@dataclass(frozen=True)
class FirmProfile:
    """One competitor and its margin-descending product line."""

    firm_id: str
    owned: ProductLine

    def __post_init__(self):
        if self.owned.size < 1:
            raise ValueError(f"firm {self.firm_id!r} owns no products")


@dataclass(frozen=True)
class LatticePoint:
    """Per-firm foldable menu depths, partially ordered component-wise."""

    depths: tuple[int, ...]

    def __init__(self, depths):
        object.__setattr__(self, "depths", tuple(int(d) for d in depths))
        if any(d < 1 for d in self.depths):
            raise ValueError("every depth must be >= 1")

    def __le__(self, other: "LatticePoint") -> bool:
        return len(self.depths) == len(other.depths) and all(
            a <= b for a, b in zip(self.depths, other.depths)
        )


@dataclass(frozen=True)
class RandomCoefSpec:
    """Consumer-level taste dispersion around the mean utilities.

    Each simulated consumer d perturbs every product's mean utility by a
    normal draw with s.d. taste_dispersion * |delta|; dispersion 0 recovers
    the representative-consumer game exactly.
    """

    n_draws: int
    taste_dispersion: float
    seed: int = 0

    def __post_init__(self):
        if self.n_draws < 1:
            raise ValueError("n_draws must be >= 1")
        if self.taste_dispersion < 0:
            raise ValueError("taste_dispersion must be >= 0")


@dataclass
class NashReport:
    is_nash: bool
    deviations: list[dict] = field(default_factory=list)


def _validate_ownership(firms: Sequence[FirmProfile]) -> None:
    seen: dict[str, str] = {}
    for f in firms:
        for p in f.owned.products:
            if p.id in seen:
                raise ValueError(
                    f"product {p.id!r} owned by both {seen[p.id]!r} and "
                    f"{f.firm_id!r}"
                )
            seen[p.id] = f.firm_id


class _Game:
    """Shared evaluation engine: per-firm margins and exp-utility draws."""

    def __init__(
        self,
        firms: Sequence[FirmProfile],
        deltas: Mapping[str, float],
        rc: RandomCoefSpec | None = None,
    ):
        if not firms:
            raise ValueError("at least one firm is required")
        _validate_ownership(firms)
        self.firms = list(firms)
        missing = [
            p.id for f in firms for p in f.owned.products if p.id not in deltas
        ]
        if missing:
            raise ValueError(f"deltas missing for products: {missing}")
        self.margins = [f.owned.margins for f in firms]
        base = [
            np.array([deltas[p.id] for p in f.owned.products]) for f in firms
        ]
        if rc is None or rc.taste_dispersion == 0.0 and rc.n_draws == 1:
            draws = 1
            self.exp_delta = [np.exp(b)[None, :] for b in base]
        else:
            rng = np.random.default_rng(rc.seed)
            draws = rc.n_draws
            self.exp_delta = []
            for b in base:
                noise = rng.standard_normal((draws, b.size))
                self.exp_delta.append(
                    np.exp(b[None, :] + rc.taste_dispersion * np.abs(b)[None, :] * noise)
                )
        self.n_draws = draws

    def competitor_load(self, n: int, depths: Sequence[int]) -> np.ndarray:
        """Per-draw sum of exp-utilities offered by every firm but n."""
        load = np.zeros(self.n_draws)
        for m, d in enumerate(depths):
            if m != n:
                load += self.exp_delta[m][:, :d].sum(axis=1)
        return load

    def subset_profit(self, n: int, members: Sequence[int], load: np.ndarray) -> float:
        """Firm n's expected profit from offering 0-based product positions."""
        idx = list(members)
        e = self.exp_delta[n][:, idx]
        num = e @ self.margins[n][idx]
        return float(np.mean(num / (1.0 + load + e.sum(axis=1))))

    def foldable_profits(self, n: int, load: np.ndarray) -> np.ndarray:
        """Expected profit at every depth 1..J_n (same code path as subsets)."""
        j = self.margins[n].size
        return np.array(
            [self.subset_profit(n, range(k + 1), load) for k in range(j)]
        )

    def best_depth(self, n: int, depths: Sequence[int]) -> int:
        profits = self.foldable_profits(n, self.competitor_load(n, depths))
        return int(np.argmax(profits)) + 1  # argmax takes the first maximizer

    def best_subset(self, n: int, load: np.ndarray) -> tuple[tuple[int, ...], float]:
        j = self.margins[n].size
        if j > MAX_SUBSET_PRODUCTS:
            raise ValueError(
                f"subset enumeration refuses J={j} > {MAX_SUBSET_PRODUCTS}"
            )
        best: tuple[int, ...] = ()
        best_profit = -np.inf
        for r in range(1, j + 1):
            for members in combinations(range(j), r):
                profit = self.subset_profit(n, members, load)
                if profit > best_profit:
                    best_profit = profit
                    best = members
        return best, best_profit


def best_response(
    firm: FirmProfile,
    others: Sequence[tuple[FirmProfile, int]],
    deltas: Mapping[str, float],
    rc: RandomCoefSpec | None = None,
) -> int:
    """Profit-maximizing foldable depth against competitors' offered menus.

    ``others`` pairs each competitor with its current depth; exact profit
    ties break toward the smaller menu.
    """
    firms = [firm] + [f for f, _ in others]
    game = _Game(firms, deltas, rc)
    depths = [1] + [d for _, d in others]
    return game.best_depth(0, depths)


def find_equilibrium(
    firms: Sequence[FirmProfile],
    deltas: Mapping[str, float],
    rc: RandomCoefSpec | None = None,
    max_sweeps: int | None = None,
) -> LatticePoint:
    """Iterate simultaneous best responses from the bottom of the lattice.

    Every firm starts with only its top-margin product and all firms respond
    each round to the previous round's point. Without random coefficients the
    trajectory is non-decreasing (asserted every round) and the fixed point
    is the component-wise smallest Nash point, which all firms weakly prefer.
    With random coefficients monotonicity is not guaranteed; the sweep cap
    raises if the iteration fails to settle.
    """
    game = _Game(firms, deltas, rc)
    point = [1] * len(game.firms)
    deterministic = game.n_draws == 1
    if max_sweeps is None:
        max_sweeps = (
            sum(m.size for m in game.margins) + 2 if deterministic else 500
        )
    for _ in range(max_sweeps):
        nxt = [game.best_depth(n, point) for n in range(len(point))]
        if deterministic and any(b < a for a, b in zip(point, nxt)):
            raise RuntimeError(
                "best-response sweep decreased a depth in the deterministic "
                "game; monotone iteration violated"
            )
        if nxt == point:
            return LatticePoint(point)
        point = nxt
    raise RuntimeError(f"no fixed point within {max_sweeps} sweeps")


def is_nash(
    point: LatticePoint,
    firms: Sequence[FirmProfile],
    deltas: Mapping[str, float],
    all_subsets: bool = False,
    rc: RandomCoefSpec | None = None,
    tol: float = 1e-12,
) -> NashReport:
    """Check every firm's unilateral deviations; report any profitable one.

    Foldable deviations are always checked; ``all_subsets`` additionally
    sweeps every non-empty subset of the firm's products (J_n <= 12),
    confirming that restricting to foldable menus loses nothing.
    """
    game = _Game(firms, deltas, rc)
    depths = list(point.depths)
    if len(depths) != len(game.firms):
        raise ValueError("lattice point size does not match the firm list")
    report = NashReport(is_nash=True)
    for n, firm in enumerate(game.firms):
        load = game.competitor_load(n, depths)
        current = game.subset_profit(n, range(depths[n]), load)
        profits = game.foldable_profits(n, load)
        best_k = int(np.argmax(profits)) + 1
        if profits[best_k - 1] > current + tol:
            report.is_nash = False
            report.deviations.append(
                {
                    "firm_id": firm.firm_id,
                    "current_depth": depths[n],
                    "better_menu": list(range(1, best_k + 1)),
                    "gain": float(profits[best_k - 1] - current),
                }
            )
            continue
        if all_subsets:
            members, best = game.best_subset(n, load)
            if best > current + tol:
                report.is_nash = False
                report.deviations.append(
                    {
                        "firm_id": firm.firm_id,
                        "current_depth": depths[n],
                        "better_menu": [m + 1 for m in members],
                        "gain": float(best - current),
                    }
                )
    return report


def equilibrium_profits(
    firms: Sequence[FirmProfile],
    deltas: Mapping[str, float],
    point: LatticePoint,
    rc: RandomCoefSpec | None = None,
) -> dict[str, float]:
    """Expected profit of every firm at a lattice point."""
    game = _Game(firms, deltas, rc)
    return {
        f.firm_id: game.subset_profit(
            n, range(point.depths[n]), game.competitor_load(n, point.depths)
        )
        for n, f in enumerate(firms)
    }


def foldable_loss_random_coef(
    firms: Sequence[FirmProfile],
    deltas: Mapping[str, float],
    spec: RandomCoefSpec,
) -> np.ndarray:
    """Per-firm profit loss from restricting menus to the foldable family.

    Fixes competitors at the foldable-menu equilibrium of the
    random-coefficient game, then compares each firm's best foldable profit
    with its best profit over all subsets, both integrated over the same
    draws: loss = 1 - foldable/overall, in [0, 1]. Zero dispersion gives an
    exact zero (the representative-consumer optimum is foldable).
    """
    game = _Game(firms, deltas, spec)
    eq = find_equilibrium(firms, deltas, spec)
    losses = np.zeros(len(game.firms))
    for n in range(len(game.firms)):
        load = game.competitor_load(n, eq.depths)
        fold_best = float(np.max(game.foldable_profits(n, load)))
        _, overall = game.best_subset(n, load)
        if overall <= 0.0:
            losses[n] = 0.0
        else:
            losses[n] = min(max(1.0 - fold_best / overall, 0.0), 1.0)
    return losses


def loss_sweep(
    firms: Sequence[FirmProfile],
    deltas: Mapping[str, float],
    dispersions: Sequence[float] = (0.5, 1.0, 2.0, 5.0),
    draw_counts: Sequence[int] = (1000, 2000),
    seed: int = 0,
) -> list[dict]:
    """Foldable-menu loss across dispersion levels and draw counts.

    Returns one row per (dispersion, n_draws) with the mean and max per-firm
    loss; the shape mirrors a dispersion-on-x, loss-on-y sweep chart.
    """
    rows = []
    for a in dispersions:
        for n in draw_counts:
            losses = foldable_loss_random_coef(
                firms, deltas, RandomCoefSpec(n_draws=n, taste_dispersion=a, seed=seed)
            )
            rows.append(
                {
                    "taste_dispersion": float(a),
                    "n_draws": int(n),
                    "mean_loss": float(np.mean(losses)),
                    "max_loss": float(np.max(losses)),
                }
            )
    return rows
