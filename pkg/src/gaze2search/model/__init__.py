"""Desk-scale finding-conditioned scanpath predictor."""

from .checkpoint import load_checkpoint, read_manifest, save_checkpoint
from .config import ModelConfig
from .inference import predict_scanpath
from .losses import LossTargets, compute_losses, focal_heatmap_loss, target_heatmap
from .network import FeatureExtractor, HeadOutputs, ScanpathPredictor, build_model
from .training import (
    Batch,
    TrainingRecord,
    batch_loss,
    expand_elements,
    fit,
    gradient_check,
    make_batch,
    train_step,
)

__all__ = [
    "Batch",
    "FeatureExtractor",
    "HeadOutputs",
    "LossTargets",
    "ModelConfig",
    "ScanpathPredictor",
    "TrainingRecord",
    "batch_loss",
    "build_model",
    "compute_losses",
    "expand_elements",
    "fit",
    "focal_heatmap_loss",
    "gradient_check",
    "load_checkpoint",
    "make_batch",
    "predict_scanpath",
    "read_manifest",
    "save_checkpoint",
    "target_heatmap",
    "train_step",
]
