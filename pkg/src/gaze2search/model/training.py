"""Teacher-forced training of the scanpath predictor, plus a finite-difference
gradient audit of the whole loss."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import torch

from .config import ModelConfig
from .losses import LossTargets, compute_losses, target_heatmap
from .network import ScanpathPredictor, build_model


@dataclass
class TrainingRecord:
    """One supervised tuple: image, target finding index, and its scanpath.

    ``fixations`` are (x, y, d) in pixel/second units, center fixation first.
    """

    image: np.ndarray  # (H, W) float32 in [0, 1]
    finding_index: int
    fixations: tuple[tuple[float, float, float], ...]


def expand_elements(records: Sequence[TrainingRecord]) -> list[tuple[int, int]]:
    """Teacher forcing: one element per (record, step).

    Element (r, t) feeds fixations[:t] as the prefix and supervises fixation
    t; the stop flag is set on the step that targets the last fixation.
    """
    elements = []
    for r, rec in enumerate(records):
        for t in range(1, len(rec.fixations)):
            elements.append((r, t))
    return elements


@dataclass
class Batch:
    images: torch.Tensor  # (U, 1, H, W)
    image_index: torch.Tensor  # (B,)
    prefix_xy: torch.Tensor  # (B, T, 2)
    prefix_len: torch.Tensor  # (B,)
    query_index: torch.Tensor  # (B,)
    targets: LossTargets
    eps: torch.Tensor  # (B,)


def make_batch(
    records: Sequence[TrainingRecord],
    elements: Sequence[tuple[int, int]],
    config: ModelConfig,
    eps: Optional[torch.Tensor] = None,
    dtype: torch.dtype = torch.float32,
) -> Batch:
    uniq = sorted({r for r, _ in elements})
    slot = {r: i for i, r in enumerate(uniq)}
    images = torch.stack(
        [torch.as_tensor(records[r].image, dtype=dtype).unsqueeze(0) for r in uniq]
    )
    bsz = len(elements)
    t_max = max(t for _, t in elements)
    prefix_xy = torch.zeros(bsz, t_max, 2, dtype=dtype)
    prefix_len = torch.zeros(bsz, dtype=torch.long)
    query_index = torch.zeros(bsz, dtype=torch.long)
    image_index = torch.zeros(bsz, dtype=torch.long)
    tau = torch.zeros(bsz, dtype=dtype)
    dur = torch.zeros(bsz, dtype=dtype)
    res, stride = config.high_res, config.image_size / config.high_res
    heat = torch.zeros(bsz, res * res, dtype=dtype)
    for b, (r, t) in enumerate(elements):
        fix = records[r].fixations
        for i in range(t):
            prefix_xy[b, i, 0] = fix[i][0]
            prefix_xy[b, i, 1] = fix[i][1]
        prefix_len[b] = t
        query_index[b] = records[r].finding_index
        image_index[b] = slot[r]
        tau[b] = 1.0 if t == len(fix) - 1 else 0.0
        dur[b] = fix[t][2]
        heat[b] = target_heatmap(
            fix[t][0], fix[t][1], res, res, config.heatmap_sigma, stride, dtype
        ).flatten()
    if eps is None:
        eps = torch.zeros(bsz, dtype=dtype)
    return Batch(
        images,
        image_index,
        prefix_xy,
        prefix_len,
        query_index,
        LossTargets(tau, dur, heat),
        eps.to(dtype),
    )


def batch_loss(model: ScanpathPredictor, batch: Batch, config: ModelConfig) -> dict:
    p_low, p_high = model.extract_pyramid(batch.images)
    pyramid = (p_low[batch.image_index], p_high[batch.image_index])
    outputs = model(
        pyramid=pyramid,
        prefix_xy=batch.prefix_xy,
        prefix_len=batch.prefix_len,
        eps=batch.eps,
    )
    return compute_losses(outputs, batch.targets, batch.query_index, config)


def train_step(
    model: ScanpathPredictor,
    optimizer: torch.optim.Optimizer,
    batch: Batch,
    config: ModelConfig,
) -> dict[str, float]:
    """One AdamW update on the mean joint loss over the batch elements."""
    model.train()
    optimizer.zero_grad()
    losses = batch_loss(model, batch, config)
    if not torch.isfinite(losses["loss"]):
        raise FloatingPointError(
            f"non-finite loss: tau={losses['loss_tau']}, "
            f"heatmap={losses['loss_heatmap']}, duration={losses['loss_duration']}"
        )
    losses["loss"].backward()
    optimizer.step()
    return {k: v.detach().item() for k, v in losses.items()}


def fit(
    model: ScanpathPredictor,
    records: Sequence[TrainingRecord],
    config: ModelConfig,
    steps: int,
    batch_size: int = 32,
    stop_below: Optional[float] = None,
    checkpoint_every: Optional[int] = None,
    checkpoint_fn: Optional[Callable[[int], None]] = None,
) -> list[dict[str, float]]:
    """Run the optimizer for up to ``steps`` updates; returns the loss log.

    All randomness (element order, duration noise) flows from config.seed, so
    identical seeds produce identical logs.  ``stop_below`` ends training
    early once the joint loss of a step falls under the threshold.
    """
    elements = expand_elements(records)
    if not elements:
        raise ValueError("no trainable (record, step) elements")
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )
    order_rng = random.Random(config.seed)
    noise = torch.Generator().manual_seed(config.seed)
    log: list[dict[str, float]] = []
    queue: list[tuple[int, int]] = []
    for step in range(1, steps + 1):
        if len(queue) < batch_size:
            refill = list(elements)
            order_rng.shuffle(refill)
            queue.extend(refill)
        chunk, queue = queue[:batch_size], queue[batch_size:]
        eps = torch.randn(len(chunk), generator=noise)
        batch = make_batch(records, chunk, config, eps=eps)
        record = train_step(model, optimizer, batch, config)
        record["step"] = step
        log.append(record)
        if checkpoint_every and checkpoint_fn and step % checkpoint_every == 0:
            checkpoint_fn(step)
        if stop_below is not None and record["loss"] < stop_below:
            break
    return log


def gradient_check(
    config: Optional[ModelConfig] = None,
    fd_step: float = 1e-5,
    corrupt_duration_head: bool = False,
    param_filter: Optional[Callable[[str], bool]] = None,
) -> float:
    """Max relative error between autograd and central finite differences.

    Runs the full joint loss on a fixed synthetic batch in double precision
    and perturbs every trainable parameter element.  ``corrupt_duration_head``
    scales the analytic duration-head gradients by 1.5 as a negative control:
    a correct comparison must flag it.  Parameters whose name fails
    ``param_filter`` are excluded, as are frozen parameters.
    """
    if config is None:
        config = ModelConfig.tiny()
    model = build_model(config).double()
    rng = np.random.default_rng(config.seed)
    size = config.image_size
    records = []
    for k in range(2):
        image = rng.random((size, size), dtype=np.float64).astype(np.float32)
        fixations = [(size / 2.0, size / 2.0, 0.3)]
        for _ in range(2):
            fixations.append(
                (
                    float(rng.uniform(0, size)),
                    float(rng.uniform(0, size)),
                    float(rng.uniform(0.1, 1.0)),
                )
            )
        records.append(TrainingRecord(image, k % config.num_queries, tuple(fixations)))
    elements = expand_elements(records)
    eps = torch.randn(len(elements), generator=torch.Generator().manual_seed(config.seed))
    batch = make_batch(records, elements, config, eps=eps, dtype=torch.float64)

    def loss_value() -> torch.Tensor:
        return batch_loss(model, batch, config)["loss"]

    params = [
        (name, p)
        for name, p in model.named_parameters()
        if p.requires_grad and (param_filter is None or param_filter(name))
    ]
    model.zero_grad()
    loss_value().backward()
    analytic = {name: p.grad.detach().clone() for name, p in params}
    if corrupt_duration_head:
        for name in analytic:
            if name.startswith(("head_mu", "head_logvar")):
                analytic[name] = analytic[name] * 1.5

    max_err = 0.0
    with torch.no_grad():
        for name, p in params:
            flat = p.view(-1)
            grad = analytic[name].view(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + fd_step
                up = loss_value().item()
                flat[i] = original - fd_step
                down = loss_value().item()
                flat[i] = original
                fd = (up - down) / (2 * fd_step)
                g = grad[i].item()
                err = abs(fd - g) / max(abs(fd), abs(g), 1e-3)
                max_err = max(max_err, err)
    return max_err
