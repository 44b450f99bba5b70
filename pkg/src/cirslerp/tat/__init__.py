"""Text-anchored tuning: low-rank adaptation of a linear embedding tower."""

from .gap import GapStats, modality_gap, paired_cosine
from .loss import contrastive_loss, grad_contrastive
from .optim import AdamW
from .synthetic import SyntheticDataset, gen_synthetic
from .tower import (
    TowerParams,
    dropout_mask,
    forward_tower,
    init_tower,
    load_tower,
    tower_pre,
    write_tower,
)
from .train import (
    AnchorMode,
    TrainConfig,
    TrainResult,
    compare_anchoring,
    loss_and_grads,
    retrieval_probe,
    train,
)

__all__ = [
    "AdamW",
    "AnchorMode",
    "GapStats",
    "SyntheticDataset",
    "TowerParams",
    "TrainConfig",
    "TrainResult",
    "compare_anchoring",
    "contrastive_loss",
    "dropout_mask",
    "forward_tower",
    "gen_synthetic",
    "grad_contrastive",
    "init_tower",
    "load_tower",
    "loss_and_grads",
    "modality_gap",
    "paired_cosine",
    "retrieval_probe",
    "tower_pre",
    "train",
    "write_tower",
]
