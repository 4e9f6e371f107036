"""Heavy-tailed trajectory simulation, fractal dimension and generalization tools."""

__version__ = "0.1.0"

from .stable import (  # noqa: E402
    MultivariateStableSpec,
    StableParams,
    chf,
    sample_multivariate,
    sample_positive_stable,
    sample_sas,
)
from .processes import (  # noqa: E402
    DrivingSpec,
    Trajectory,
    interpolate,
    run_sgd,
    simulate_levy,
    simulate_sde,
)
from .fractal import DimensionEstimate, FitWindow, analytic_bg_index, box_count, estimate_dimension  # noqa: E402
from .tail_index import TailIndexReport, estimate_alpha, estimate_beta, preprocess_increments  # noqa: E402
from .learning import (  # noqa: E402
    MLP,
    Dataset,
    LogisticRegression,
    RiskReport,
    empirical_risk,
    gen_mixture_dataset,
    generalization_gap,
    logistic_loss,
    population_risk,
)
from .bounds import BoundInputs, chaining_bound, theorem1_bound, theorem2_bound  # noqa: E402
