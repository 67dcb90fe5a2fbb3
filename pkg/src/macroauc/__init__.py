"""Macro-AUC learning for multi-label data with linear models.

Pairwise and univariate surrogate losses, SVRG-BB training, imbalance-aware
generalization bounds and fractional-cover Rademacher estimates.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .dataset import MultiLabelDataset, label_stats, load_dataset
from .evaluation import macro_auc, per_label_auc
from .loss import get_loss
from .optim import TrainConfig, train
from .risk import LinearModel, Objective

__all__ = [
    "BACKEND",
    "LinearModel",
    "MultiLabelDataset",
    "Objective",
    "TrainConfig",
    "get_loss",
    "label_stats",
    "load_dataset",
    "macro_auc",
    "per_label_auc",
    "train",
]
