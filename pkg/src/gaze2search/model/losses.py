"""Joint training objective: termination BCE, penalty-reduced focal heatmap
loss, and L1 duration loss, applied to the target finding's query row only."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .config import ModelConfig
from .network import HeadOutputs

CLAMP_EPS = 1e-6


def target_heatmap(
    x: float,
    y: float,
    map_h: int,
    map_w: int,
    sigma: float,
    stride: float,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """Gaussian-splatted ground-truth heatmap with peak exactly 1 at the
    fixation's cell; sigma is in cells, sigma <= 0 degenerates to one-hot."""
    col = min(max(int(x // stride), 0), map_w - 1)
    row = min(max(int(y // stride), 0), map_h - 1)
    if sigma <= 0:
        heat = torch.zeros(map_h, map_w, dtype=dtype)
        heat[row, col] = 1.0
        return heat
    rows = torch.arange(map_h, dtype=dtype).unsqueeze(1)
    cols = torch.arange(map_w, dtype=dtype).unsqueeze(0)
    heat = torch.exp(-((rows - row) ** 2 + (cols - col) ** 2) / (2 * sigma**2))
    heat[row, col] = 1.0
    return heat


def focal_heatmap_loss(
    pred: torch.Tensor, target: torch.Tensor, alpha: float, gamma: float
) -> torch.Tensor:
    """Penalty-reduced pixel-wise focal loss, averaged over cells.

    Cells where the target is exactly 1 are positives; everywhere else the
    (1 - target)^alpha weight softens penalties near the peak.  Accepts
    (..., N) tensors and reduces over the last dimension.
    """
    pred = pred.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
    positive = target == 1.0
    pos_loss = (1.0 - pred) ** gamma * torch.log(pred)
    neg_loss = (1.0 - target) ** alpha * pred**gamma * torch.log(1.0 - pred)
    return -torch.where(positive, pos_loss, neg_loss).mean(dim=-1)


def termination_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    pred = pred.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
    return -(target * torch.log(pred) + (1.0 - target) * torch.log(1.0 - pred))


@dataclass
class LossTargets:
    """Per-element supervision: stop flag, duration, and splatted heatmap."""

    termination: torch.Tensor  # (B,)
    duration: torch.Tensor  # (B,)
    heatmap: torch.Tensor  # (B, N)


def compute_losses(
    outputs: HeadOutputs,
    targets: LossTargets,
    query_index: torch.Tensor,
    config: ModelConfig,
) -> dict[str, torch.Tensor]:
    """Mean per-term losses over the batch, taken on the target query rows."""
    rows = torch.arange(outputs.termination.shape[0], device=query_index.device)
    tau_hat = outputs.termination[rows, query_index]
    d_hat = outputs.duration[rows, query_index]
    heat_hat = outputs.heatmap[rows, query_index]

    loss_tau = termination_loss(tau_hat, targets.termination).mean()
    loss_heat = focal_heatmap_loss(
        heat_hat, targets.heatmap, config.focal_alpha, config.focal_gamma
    ).mean()
    loss_dur = (d_hat - targets.duration).abs().mean()
    total = loss_tau + loss_heat + loss_dur
    return {
        "loss_tau": loss_tau,
        "loss_heatmap": loss_heat,
        "loss_duration": loss_dur,
        "loss": total,
    }
