"""Loss, optimiser, metrics and the offline training loop."""
from .config import ModelConfig
from .loop import (
    GraphBatchData,
    TrainingDivergedError,
    TrainReport,
    fit,
    predict_logits,
    sample_logits,
    train_step,
)
from .metrics import confusion_matrix, evaluate_metrics
from .optim import AdamState, adam_step, nll_loss
from .persist import load_model, save_model

__all__ = [
    "AdamState",
    "GraphBatchData",
    "ModelConfig",
    "TrainReport",
    "TrainingDivergedError",
    "adam_step",
    "confusion_matrix",
    "evaluate_metrics",
    "fit",
    "load_model",
    "nll_loss",
    "predict_logits",
    "sample_logits",
    "save_model",
    "train_step",
]
