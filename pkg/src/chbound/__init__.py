"""Generalized Chernoff-Hoeffding tail bounds for dependent bounded variables.

The bound: if X_1..X_n take values in [a_i, a_i + b] with a_i <= 0 and every
subset S satisfies E[prod_{i in S} X_i] <= prod_{i in S} c_i, then

    P(sum X_i >= (cbar + t) n) <= exp(-n D((cbar - abar + t)/b || (cbar - abar)/b))

with D the binary relative entropy.  Alongside the closed form, the package
ships exact enumeration of small joint models, an executable version of the
coupled sampling process whose inequality chain proves the bound, and a
randomized detector that recovers a moment-violating subset from sample
access alone.
"""

from .dist_models import (
    BooleanIIDModel,
    ExchangeableMixtureModel,
    ExplicitTableModel,
    IndependentModel,
    JointModel,
    MomentCertificate,
    PlantedCliqueModel,
    certify_moments,
    check_support_range,
    exact_moment,
    exact_tail,
    model_from_spec,
    sample,
)
from .entropy_core import (
    BoundParams,
    LambdaChoice,
    NormalizedParams,
    chernoff_bound,
    g_objective,
    grid_search_lambda,
    kl_div,
    normalize,
    optimize_lambda,
    proof_case,
)
from .errors import (
    BudgetError,
    BudgetOverflowError,
    ChboundError,
    RejectionBudgetError,
    SubsetBudgetError,
    SupportTooLargeError,
    ValidationError,
)
from .mc_engine import (
    ChainLink,
    ChainReport,
    Estimate,
    SamplingRound,
    draw_round,
    estimate_product,
    exact_product_expectation,
    verify_chain,
)
from .witness import (
    WitnessParams,
    WitnessReport,
    default_budgets,
    find_dependent_set,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # entropy_core
    "BoundParams", "NormalizedParams", "LambdaChoice", "kl_div", "normalize",
    "proof_case", "g_objective", "optimize_lambda", "grid_search_lambda",
    "chernoff_bound",
    # dist_models
    "JointModel", "IndependentModel", "BooleanIIDModel", "PlantedCliqueModel",
    "ExchangeableMixtureModel", "ExplicitTableModel", "MomentCertificate",
    "model_from_spec", "sample", "exact_moment", "exact_tail",
    "certify_moments", "check_support_range",
    # mc_engine
    "SamplingRound", "Estimate", "ChainLink", "ChainReport", "draw_round",
    "estimate_product", "exact_product_expectation", "verify_chain",
    # witness
    "WitnessParams", "WitnessReport", "default_budgets", "find_dependent_set",
    # errors
    "ChboundError", "ValidationError", "BudgetError", "SupportTooLargeError",
    "SubsetBudgetError", "RejectionBudgetError", "BudgetOverflowError",
]
