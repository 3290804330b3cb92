"""Demand estimation under price rigidity and endogenous product assortments."""

from .assortment import (
    CutoffVector,
    assortment_for_alpha,
    brute_force_best,
    optimal_foldable,
    solve_cutoffs,
)
from .choice import (
    Assortment,
    ConsumerTaste,
    FoldableAssortment,
    Product,
    ProductLine,
    choice_probabilities,
    expected_profit,
)
from .dgp import (
    DgpConfig,
    TaxParams,
    fit_lognormal_from_quintiles,
    generate_panel,
    wholesale_margin,
)
from .analysis import (
    CounterfactualReport,
    ElasticityMatrix,
    assortment_distribution,
    decompose_elasticities,
    elasticities,
    full_availability,
    tax_counterfactual,
    uniform_price_change,
)
from .competition import (
    FirmProfile,
    LatticePoint,
    NashReport,
    RandomCoefSpec,
    best_response,
    equilibrium_profits,
    find_equilibrium,
    foldable_loss_random_coef,
    is_nash,
    loss_sweep,
)
from .estimation import (
    BracketError,
    ContractionError,
    EstimationConfig,
    EstimationResult,
    bootstrap_se,
    estimate,
    estimate_standard_logit,
    gmm_objective,
    invert_shares,
)
from .panel import Panel, PanelSchemaError, SyntheticPanel
from .shares import (
    DrawSet,
    MarketShares,
    TasteDistribution,
    alpha_cdf,
    conditional_alpha_sample,
    predicted_shares,
    standard_logit_shares,
)

__all__ = [
    "Assortment",
    "BracketError",
    "ConsumerTaste",
    "ContractionError",
    "CounterfactualReport",
    "CutoffVector",
    "DgpConfig",
    "DrawSet",
    "ElasticityMatrix",
    "EstimationConfig",
    "EstimationResult",
    "FirmProfile",
    "FoldableAssortment",
    "LatticePoint",
    "MarketShares",
    "NashReport",
    "Panel",
    "PanelSchemaError",
    "Product",
    "ProductLine",
    "RandomCoefSpec",
    "SyntheticPanel",
    "TasteDistribution",
    "TaxParams",
    "alpha_cdf",
    "assortment_distribution",
    "assortment_for_alpha",
    "best_response",
    "bootstrap_se",
    "brute_force_best",
    "choice_probabilities",
    "conditional_alpha_sample",
    "decompose_elasticities",
    "elasticities",
    "equilibrium_profits",
    "estimate",
    "estimate_standard_logit",
    "expected_profit",
    "find_equilibrium",
    "fit_lognormal_from_quintiles",
    "foldable_loss_random_coef",
    "full_availability",
    "generate_panel",
    "gmm_objective",
    "invert_shares",
    "is_nash",
    "loss_sweep",
    "optimal_foldable",
    "predicted_shares",
    "solve_cutoffs",
    "standard_logit_shares",
    "tax_counterfactual",
    "uniform_price_change",
    "wholesale_margin",
]

__version__ = "0.1.0"
