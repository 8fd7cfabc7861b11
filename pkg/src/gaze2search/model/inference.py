"""Autoregressive scanpath generation from a trained predictor."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import torch

from ..core import DEFAULT_FINDINGS, Fixation, Scanpath
from .config import ModelConfig
from .network import ScanpathPredictor


def predict_scanpath(
    model: ScanpathPredictor,
    image: np.ndarray,
    finding: str,
    config: ModelConfig,
    seed: int = 0,
    mode: str = "sample",
    image_id: str = "",
    vocabulary: Sequence[str] = DEFAULT_FINDINGS,
    pyramid: Optional[tuple[torch.Tensor, torch.Tensor]] = None,
) -> Scanpath:
    """Generate a scanpath for one (image, finding) pair.

    Starts from the default center fixation and repeatedly queries the heads
    on the target finding's row: generation stops when the termination output
    crosses the threshold or the length cap is reached.  The next coordinate
    is drawn from the normalized heatmap row (``mode="sample"``) or taken as
    the argmax cell (``mode="argmax"``); either way it is emitted at the cell
    center.  Durations use the deterministic mean and are clamped to the
    configured range.
    """
    if mode not in ("sample", "argmax"):
        raise ValueError(f"unknown mode {mode!r}")
    query = vocabulary.index(finding)
    if query >= config.num_queries:
        raise ValueError(f"finding index {query} exceeds query count")
    size = config.image_size
    if image.shape != (size, size):
        raise ValueError(f"expected a {size}x{size} image, got {image.shape}")

    model.eval()
    generator = torch.Generator().manual_seed(seed)
    res = config.high_res
    stride = size / res
    fixations = [Fixation(size / 2.0, size / 2.0, 0.3)]
    with torch.no_grad():
        if pyramid is None:
            tensor = torch.as_tensor(image, dtype=torch.float32)[None, None]
            pyramid = model.extract_pyramid(tensor)
        while len(fixations) < config.max_length:
            prefix = torch.tensor(
                [[(f.x, f.y) for f in fixations]], dtype=pyramid[1].dtype
            )
            outputs = model(
                pyramid=pyramid,
                prefix_xy=prefix,
                prefix_len=torch.tensor([len(fixations)]),
            )
            if float(outputs.termination[0, query]) >= config.termination_threshold:
                break
            row = outputs.heatmap[0, query]
            if mode == "sample":
                cell = int(torch.multinomial(row / row.sum(), 1, generator=generator))
            else:
                cell = int(row.argmax())
            r, c = divmod(cell, res)
            duration = float(outputs.duration_mean[0, query])
            duration = min(max(duration, config.duration_min), config.duration_max)
            fixations.append(
                Fixation((c + 0.5) * stride, (r + 0.5) * stride, duration)
            )
    return Scanpath(image_id, finding, tuple(fixations))
