"""Continual-resilient and classic first-order optimizers, desk-scale
training tasks, and a deterministic multi-seed benchmark harness."""

from .bench import (
    BenchmarkReport,
    ErrorTrace,
    SuiteConfig,
    TaskConfig,
    accuracy_scores,
    grid_select,
    min_test_error,
    overall_score,
    parse_config,
    run_suite,
    run_training,
    write_report,
)
from .errors import ConfigError, NumericFailure
from .estimator import MlpClassifier, MlpRegressor
from .nets import (
    Batch,
    MlpSpec,
    finite_diff_grad,
    forward,
    init_params,
    loss_and_grad,
)
from .optimizers import (
    ALGORITHMS,
    BaselineHyper,
    CoreHyper,
    CoreOptimizer,
    OptimizerSpec,
    beta1_schedule,
    make_optimizer,
)
from .params import Group, GroupLayout, ParamStore
from .rng import Prng, derive_rng, mean_std
from .tasks import (
    BUILTIN_TASKS,
    RECOMMENDED_S_MAX,
    TaskInstance,
    evaluate_test_error,
    make_cluster_classification,
    make_intermediate_regression,
    make_quadratic,
    make_rosenbrock,
    make_sine_regression,
    next_batch,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BUILTIN_TASKS",
    "Batch",
    "BaselineHyper",
    "BenchmarkReport",
    "ConfigError",
    "CoreHyper",
    "CoreOptimizer",
    "ErrorTrace",
    "Group",
    "GroupLayout",
    "MlpClassifier",
    "MlpRegressor",
    "MlpSpec",
    "NumericFailure",
    "OptimizerSpec",
    "ParamStore",
    "Prng",
    "RECOMMENDED_S_MAX",
    "SuiteConfig",
    "TaskConfig",
    "TaskInstance",
    "accuracy_scores",
    "beta1_schedule",
    "derive_rng",
    "evaluate_test_error",
    "finite_diff_grad",
    "forward",
    "grid_select",
    "init_params",
    "loss_and_grad",
    "make_cluster_classification",
    "make_intermediate_regression",
    "make_optimizer",
    "make_quadratic",
    "make_rosenbrock",
    "make_sine_regression",
    "mean_std",
    "min_test_error",
    "next_batch",
    "overall_score",
    "parse_config",
    "run_suite",
    "run_training",
    "write_report",
]
