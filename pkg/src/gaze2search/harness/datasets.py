"""Assemble model training/prediction inputs from files.

Scanpath coordinates live in the native image frame; the model works in its
own square frame, so records are rescaled on the way in and predictions on
the way out.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..core import Fixation, Scanpath
from ..model import ModelConfig, TrainingRecord
from .io import DataError, load_image, resize_image


def _native_size(images_dir: Path, image_id: str, cache: dict) -> tuple[float, float]:
    if image_id not in cache:
        path = images_dir / f"{image_id}.png"
        if not path.exists():
            raise DataError(f"no image file for {image_id!r} under {images_dir}")
        array = load_image(path)
        cache[image_id] = (array, (float(array.shape[1]), float(array.shape[0])))
    return cache[image_id][1]


def build_training_records(
    scanpaths: Sequence[Scanpath],
    images_dir,
    config: ModelConfig,
    vocabulary: Sequence[str],
) -> list[TrainingRecord]:
    images_dir = Path(images_dir)
    index = {name: i for i, name in enumerate(vocabulary)}
    cache: dict = {}
    resized: dict[str, np.ndarray] = {}
    records = []
    for sp in scanpaths:
        if sp.finding not in index:
            raise DataError(f"finding {sp.finding!r} not in the vocabulary")
        width, height = _native_size(images_dir, sp.image_id, cache)
        if sp.image_id not in resized:
            resized[sp.image_id] = resize_image(cache[sp.image_id][0], config.image_size)
        sx, sy = config.image_size / width, config.image_size / height
        fixations = tuple((f.x * sx, f.y * sy, f.d) for f in sp.fixations)
        records.append(
            TrainingRecord(resized[sp.image_id], index[sp.finding], fixations)
        )
    return records


def load_model_image(images_dir, image_id: str, config: ModelConfig) -> tuple[np.ndarray, float, float]:
    """Image in the model frame plus its native width/height."""
    path = Path(images_dir) / f"{image_id}.png"
    if not path.exists():
        raise DataError(f"no image file for {image_id!r} under {images_dir}")
    array = load_image(path)
    height, width = array.shape
    return resize_image(array, config.image_size), float(width), float(height)


def to_native_frame(
    scanpath: Scanpath, width: float, height: float, model_size: int
) -> Scanpath:
    sx, sy = width / model_size, height / model_size
    return Scanpath(
        scanpath.image_id,
        scanpath.finding,
        tuple(Fixation(f.x * sx, f.y * sy, f.d) for f in scanpath.fixations),
    )
