"""Losses, metrics and the training protocol."""

from .loop import (
    EmptySpaceError,
    EvalReport,
    NonFiniteLossError,
    TrainConfig,
    TrainResult,
    aggregate,
    evaluate_metric,
    multi_seed,
    prepare_inputs,
    random_search,
    sample_search_space,
    train,
)
from .losses import AllMaskedError, masked_loss
from .metrics import EmptyError, SingleClassError, masked_rmse, rmse, roc_auc, roc_auc_multi

__all__ = [
    "AllMaskedError",
    "EmptyError",
    "EmptySpaceError",
    "EvalReport",
    "NonFiniteLossError",
    "SingleClassError",
    "TrainConfig",
    "TrainResult",
    "aggregate",
    "evaluate_metric",
    "masked_loss",
    "masked_rmse",
    "multi_seed",
    "prepare_inputs",
    "random_search",
    "rmse",
    "roc_auc",
    "roc_auc_multi",
    "sample_search_space",
    "train",
]
