"""Product types and the logit choice/profit kernel.

Everything downstream (menu optimization, share simulation, estimation,
competition) is built on the two operations here: per-consumer logit choice
probabilities over an offered assortment, and the seller's expected profit
from that assortment. The outside option is alternative 0 with deterministic
utility normalized to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class Product:
    """One sellable good with a fixed retail price and unit margin."""

    id: str
    unit_margin: float
    retail_price: float

    def __post_init__(self):
        if self.unit_margin < 0:
            raise ValueError(f"product {self.id!r}: unit_margin must be >= 0")
        if self.retail_price <= 0:
            raise ValueError(f"product {self.id!r}: retail_price must be > 0")


@dataclass(frozen=True)
class ProductLine:
    """Products ordered by weakly descending unit margin.

    Positions are 1-based throughout (0 is reserved for the outside option).
    Operations that solve cutoffs additionally require strict descent; plain
    choice/profit evaluation accepts ties.
    """

    products: tuple[Product, ...]

    def __init__(self, products: Iterable[Product]):
        object.__setattr__(self, "products", tuple(products))
        m = self.margins
        if np.any(np.diff(m) > 0):
            raise ValueError("products must be sorted by descending unit margin")

    @cached_property
    def margins(self) -> np.ndarray:
        return np.array([p.unit_margin for p in self.products], dtype=float)

    @cached_property
    def prices(self) -> np.ndarray:
        return np.array([p.retail_price for p in self.products], dtype=float)

    @property
    def size(self) -> int:
        return len(self.products)

    def has_strictly_descending_margins(self) -> bool:
        return bool(np.all(np.diff(self.margins) < 0))


@dataclass(frozen=True, eq=False)
class ConsumerTaste:
    """Price sensitivity and per-product consumption utilities of one consumer."""

    alpha: float
    gamma: np.ndarray

    def __init__(self, alpha: float, gamma):
        object.__setattr__(self, "alpha", float(alpha))
        object.__setattr__(self, "gamma", np.asarray(gamma, dtype=float))


@dataclass(frozen=True)
class Assortment:
    """A subset of product positions (1-based) offered to a consumer.

    The outside option (index 0) is always implicitly available and never a
    member. Empty assortments are legal for probability evaluation (everything
    goes outside) but carry zero expected profit.
    """

    member_ids: frozenset[int]

    def __init__(self, member_ids: Iterable[int]):
        members = frozenset(int(j) for j in member_ids)
        if any(j < 1 for j in members):
            raise ValueError("assortment members are 1-based product positions")
        object.__setattr__(self, "member_ids", members)

    @classmethod
    def full(cls, n_products: int) -> "Assortment":
        return cls(range(1, n_products + 1))

    def validate_for(self, line: ProductLine) -> None:
        if self.member_ids and max(self.member_ids) > line.size:
            raise ValueError(
                f"assortment references position {max(self.member_ids)} "
                f"but the line has {line.size} products"
            )

    def indices(self) -> np.ndarray:
        """Sorted 0-based indices into the line's product arrays."""
        return np.array(sorted(self.member_ids), dtype=int) - 1


@dataclass(frozen=True)
class FoldableAssortment:
    """The top-j set {1, ..., depth} of a margin-ranked product line."""

    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    def as_assortment(self) -> Assortment:
        return Assortment(range(1, self.depth + 1))


def _check_dimensions(taste: ConsumerTaste, line: ProductLine) -> None:
    if taste.gamma.shape != (line.size,):
        raise ValueError(
            f"taste has {taste.gamma.shape[0] if taste.gamma.ndim == 1 else '?'} "
            f"utilities but the line has {line.size} products"
        )


def choice_probabilities(
    taste: ConsumerTaste, line: ProductLine, a: Assortment
) -> np.ndarray:
    """Logit choice probabilities over an assortment, outside option included.

    Returns a vector of length J+1 whose entry 0 is the outside share and
    entry j is the probability of product j; entries outside the assortment
    are zero and the vector sums to one. Utilities are recomputed from
    (gamma, alpha, prices) on every call so price counterfactuals can never
    read stale values.
    """
    _check_dimensions(taste, line)
    a.validate_for(line)
    probs = np.zeros(line.size + 1)
    idx = a.indices()
    if idx.size == 0:
        probs[0] = 1.0
        return probs
    delta = taste.gamma[idx] - taste.alpha * line.prices[idx]
    # Shift by max(0, max delta) so neither the inside exps nor the outside
    # option's exp(0) can overflow.
    shift = max(0.0, float(np.max(delta)))
    w = np.exp(delta - shift)
    out = np.exp(-shift)
    denom = out + w.sum()
    probs[idx + 1] = w / denom
    probs[0] = out / denom
    return probs


def expected_profit(taste: ConsumerTaste, line: ProductLine, a: Assortment) -> float:
    """Expected per-consumer profit: sum of margin times choice probability."""
    probs = choice_probabilities(taste, line, a)
    idx = a.indices()
    if idx.size == 0:
        return 0.0
    return float(np.dot(line.margins[idx], probs[idx + 1]))
