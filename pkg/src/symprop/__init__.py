"""symprop: desk-scale machinery for adaptive symmetric-property estimation.

Validated discrete distributions and divergences, sample profiles with exact
profile probabilities, profile-maximum-likelihood solvers, adversarial
packings with matched 1-Lipschitz losses, a generalized Fano bound evaluator
with brute-force audits, and seeded risk harnesses tying it all together.
"""

__version__ = "0.1.0"

from .config import DEFAULT_BUDGETS, DEFAULT_TOLERANCES, Budgets, Tolerances
from .core import (
    DiscreteDistribution,
    SampleBatch,
    chi2,
    kl,
    sample,
    sorted_l1,
    tv,
)
from .errors import (
    BudgetExceededError,
    CheckFailedError,
    EstimatorError,
    EvaluationError,
    InfiniteDivergenceError,
    RejectionSamplingError,
    SympropError,
    ValidationError,
)
from .estimators import (
    Estimator,
    constant_estimator,
    empirical_estimator,
    oracle_estimator,
)
from .fano import (
    FanoInputs,
    FiniteExperiment,
    LemmaReport,
    experiment_from_packing,
    fano_bound,
    mutual_information_exact,
    test_rule,
    verify_lemma,
)
from .packing import (
    DeltaChoice,
    PackingInstance,
    build_packing,
    center_distribution,
    choose_delta,
    covers_center_intervals,
    gv_packing,
    mi_upper_bound,
    perturb,
    sample_membership,
    separation_check,
    separation_threshold,
)
from .pml import PmlSolution, pml_approx, pml_exact, pml_plugin_estimator
from .profiles import (
    Profile,
    ProfileSpace,
    count_partitions,
    enumerate_profiles,
    profile_of,
    profile_probability,
    profile_space_bounds,
)
from .properties import (
    SymmetricProperty,
    adversarial_property,
    builtin,
    evaluate,
    plugin_error,
)
from .risk import (
    AdaptiveRiskReport,
    CompetitiveTailReport,
    QualityGateReport,
    RateRow,
    RiskReport,
    adaptive_risk,
    assumption1_check,
    competitive_tail_check,
    exact_risk,
    mc_risk,
    rate_curve,
)
from .rng import derive_seed, generator
