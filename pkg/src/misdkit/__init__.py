"""misdkit: misclassification detection via input-space robust radius.

Train small feed-forward classifiers, estimate how far each prediction sits
from the decision boundary (its L-inf robust radius), use that radius (or the
classic softmax scores) as a confidence measure, and grade detection quality
with AURC / AUROC / FPR@95TPR.
"""

from .attacks import AttackConfig, fgsm, fgsm_direction, pgd
from .data import Dataset, Split, corrupt, load_csv, load_idx, make_gaussian_mixture, save_csv, split_val_test
from .estimator import ConfidenceScorer, RobustRadiusClassifier
from .exceptions import (
    ConfigError,
    DimensionError,
    FormatError,
    GraphError,
    MisdkitError,
    ParameterError,
    TrainingError,
    UndefinedMetricError,
)
from .instrument import PassCounter
from .metrics import (
    DetectionReport,
    auroc,
    auroc_above_confidence,
    aurc,
    detection_report,
    fpr_at_tpr,
    risk_coverage,
)
from .model import MLP
from .radius import (
    NO_FLIP,
    RadiusConfig,
    RadiusEstimate,
    oracle_line_search,
    radius_batch,
    rr_bs,
    rr_fast,
    solve_crossing,
)
from .scores import (
    ConfidenceRecord,
    EPSILON_GRID,
    ScoreConfig,
    TEMPERATURE_GRID,
    confidence,
    confidence_records,
    confidence_scores,
    doctor,
    msr,
    preprocess_input,
    sweep_hyperparameters,
)
from .tensor import Tensor, backward, cross_entropy, matmul, no_grad, relu, softmax
from .training import TrainConfig, TrainLog, mixup_batch, perturb_for_objective, rat_loss, train

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "ConfidenceRecord",
    "ConfidenceScorer",
    "ConfigError",
    "Dataset",
    "DetectionReport",
    "DimensionError",
    "EPSILON_GRID",
    "FormatError",
    "GraphError",
    "MLP",
    "MisdkitError",
    "NO_FLIP",
    "ParameterError",
    "PassCounter",
    "RadiusConfig",
    "RadiusEstimate",
    "RobustRadiusClassifier",
    "ScoreConfig",
    "Split",
    "TEMPERATURE_GRID",
    "Tensor",
    "TrainConfig",
    "TrainingError",
    "TrainLog",
    "UndefinedMetricError",
    "auroc",
    "auroc_above_confidence",
    "aurc",
    "backward",
    "confidence",
    "confidence_records",
    "confidence_scores",
    "corrupt",
    "cross_entropy",
    "detection_report",
    "doctor",
    "fgsm",
    "fgsm_direction",
    "fpr_at_tpr",
    "load_csv",
    "load_idx",
    "make_gaussian_mixture",
    "matmul",
    "mixup_batch",
    "msr",
    "no_grad",
    "oracle_line_search",
    "perturb_for_objective",
    "pgd",
    "preprocess_input",
    "radius_batch",
    "rat_loss",
    "relu",
    "risk_coverage",
    "rr_bs",
    "rr_fast",
    "save_csv",
    "softmax",
    "solve_crossing",
    "split_val_test",
    "sweep_hyperparameters",
    "train",
]
