"""Sequential edge-intention classifier: features, model, losses, training."""

from .features import (
    DEPOT_FEATURE_DIM,
    NODE_FEATURE_DIM,
    STATE_DIM,
    EncodedSample,
    FeatureScales,
    feature_scales,
    featurize,
    node_features,
    state_vector,
)
from .losses import LOSS_TYPES, sequence_loss
from .metrics import macro_f1, per_step_recall, sequential_confusion
from .model import EdgeClassifier, ModelConfig
from .training import (
    TrainingConfig,
    TrainingHistory,
    evaluate_model,
    finite_difference_check,
    load_checkpoint,
    make_batches,
    predict,
    predict_batch,
    save_checkpoint,
    train,
)

__all__ = [
    "DEPOT_FEATURE_DIM",
    "NODE_FEATURE_DIM",
    "STATE_DIM",
    "EncodedSample",
    "FeatureScales",
    "feature_scales",
    "featurize",
    "node_features",
    "state_vector",
    "LOSS_TYPES",
    "sequence_loss",
    "macro_f1",
    "per_step_recall",
    "sequential_confusion",
    "EdgeClassifier",
    "ModelConfig",
    "TrainingConfig",
    "TrainingHistory",
    "evaluate_model",
    "finite_difference_check",
    "load_checkpoint",
    "make_batches",
    "predict",
    "predict_batch",
    "save_checkpoint",
    "train",
]
