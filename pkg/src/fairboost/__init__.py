"""Fair adversarial gradient tree boosting.

Binary classifiers built by gradient tree boosting, with an optional
adversary that tries to read the sensitive attribute off the model's
scores. Each boosting stage fits its tree to residuals nudged against
the adversary's gradient, trading accuracy for demographic parity or
equalized odds along a single knob (lambda).
"""

from .adversary import (
    AdamOptimizer,
    AdversaryNet,
    adversary_loss,
    forward,
    init_xavier,
    input_gradient,
    param_gradients,
    sgd_step,
)
from .cart import RegressionTree, TreeParams, fit_tree
from .data import Column, ColumnSchema, Dataset, load_csv, train_test_split
from .errors import ConfigError, DataError, MetricError, SchemaError, TrainingError
from .metrics import (
    FairnessReport,
    accuracy,
    disparate_impact,
    disparate_mistreatment,
    fairness_report,
    group_score_histograms,
    p_rule,
    permutation_importance,
)
from .synthetic import generate
from .training import (
    BoostingModel,
    TrainConfig,
    TrainingTrace,
    adversary_residuals,
    classify,
    combine_residuals,
    init_f0,
    line_search_gamma,
    load_model,
    predict_proba,
    predict_scores,
    predictor_loss,
    predictor_residuals,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamOptimizer",
    "AdversaryNet",
    "Column",
    "ColumnSchema",
    "ConfigError",
    "DataError",
    "Dataset",
    "BoostingModel",
    "FairnessReport",
    "MetricError",
    "RegressionTree",
    "SchemaError",
    "TrainConfig",
    "TrainingError",
    "TrainingTrace",
    "TreeParams",
    "accuracy",
    "adversary_loss",
    "adversary_residuals",
    "classify",
    "combine_residuals",
    "disparate_impact",
    "disparate_mistreatment",
    "fairness_report",
    "fit_tree",
    "forward",
    "generate",
    "group_score_histograms",
    "init_f0",
    "init_xavier",
    "input_gradient",
    "line_search_gamma",
    "load_csv",
    "load_model",
    "p_rule",
    "param_gradients",
    "permutation_importance",
    "predict_proba",
    "predict_scores",
    "predictor_loss",
    "predictor_residuals",
    "save_model",
    "sgd_step",
    "train",
    "train_test_split",
    "__version__",
]
