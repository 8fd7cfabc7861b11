"""Synthetic desk-scale data: procedural images, anatomy boxes, transcripts,
and free-view fixations whose late segment settles inside the target region.

The generator guarantees by construction that, for every mentioned finding,
at least one pre-cutoff fixation lies inside the finding's target box, so
conversion hardly ever skips a finding for lack of a target fixation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..core import (
    DEFAULT_FINDINGS,
    Box,
    FreeViewFixation,
    Sample,
    Scanpath,
    Fixation,
    TranscriptSentence,
)

# Stand-in chest layout in relative coordinates (left, top, right, bottom).
ANATOMY_LAYOUT: dict[str, tuple[float, float, float, float]] = {
    "right lung": (0.08, 0.15, 0.45, 0.80),
    "left lung": (0.55, 0.15, 0.92, 0.80),
    "cardiac silhouette": (0.38, 0.45, 0.66, 0.82),
    "upper mediastinum": (0.40, 0.08, 0.60, 0.45),
    "right costophrenic angle": (0.08, 0.68, 0.30, 0.86),
    "left costophrenic angle": (0.70, 0.68, 0.92, 0.86),
    "trachea": (0.44, 0.05, 0.56, 0.30),
    "spine": (0.44, 0.10, 0.56, 0.92),
}

# Stand-in finding -> anatomy relations covering the default vocabulary.
DEFAULT_RELATIONS: dict[str, frozenset[str]] = {
    "atelectasis": frozenset({"right lung", "left lung"}),
    "cardiomegaly": frozenset({"cardiac silhouette"}),
    "consolidation": frozenset({"right lung", "left lung"}),
    "edema": frozenset({"right lung", "left lung"}),
    "enlarged cardiomediastinum": frozenset({"cardiac silhouette", "upper mediastinum"}),
    "fracture": frozenset({"spine"}),
    "lung lesion": frozenset({"right lung", "left lung"}),
    "lung opacity": frozenset({"right lung", "left lung"}),
    "pleural effusion": frozenset({"right costophrenic angle", "left costophrenic angle"}),
    "pleural other": frozenset({"right costophrenic angle", "left costophrenic angle"}),
    "pneumonia": frozenset({"right lung", "left lung"}),
    "pneumothorax": frozenset({"right lung", "left lung"}),
    "support devices": frozenset({"upper mediastinum", "trachea"}),
}


@dataclass(frozen=True)
class SyntheticSpec:
    n_images: int = 20
    findings_per_image: tuple[int, int] = (1, 3)
    fixations_per_phase: tuple[int, int] = (4, 8)
    noise_radius: float = 0.02  # burst tightness, fraction of image size
    box_placement: str = "fixed"  # or "jitter"
    seed: int = 0
    image_size: int = 224

    def __post_init__(self) -> None:
        if self.n_images < 1:
            raise ValueError("n_images must be at least 1")
        if self.findings_per_image[0] < 1:
            raise ValueError("need at least one finding per image")
        if self.fixations_per_phase[0] < 1:
            raise ValueError("need at least one fixation per phase")
        if self.box_placement not in ("fixed", "jitter"):
            raise ValueError("box_placement must be 'fixed' or 'jitter'")


def _place_boxes(spec: SyntheticSpec, rng: random.Random) -> dict[str, Box]:
    size = spec.image_size
    boxes = {}
    for name, (l, t, r, b) in ANATOMY_LAYOUT.items():
        if spec.box_placement == "jitter":
            dx = rng.uniform(-0.03, 0.03)
            dy = rng.uniform(-0.03, 0.03)
            l, r = max(0.0, l + dx), min(1.0, r + dx)
            t, b = max(0.0, t + dy), min(1.0, b + dy)
        boxes[name] = Box(l * size, t * size, r * size, b * size)
    return boxes


def generate_sample(spec: SyntheticSpec, image_id: str, rng: random.Random) -> Sample:
    size = spec.image_size
    boxes = _place_boxes(spec, rng)
    n_findings = rng.randint(*spec.findings_per_image)
    findings = rng.sample(DEFAULT_FINDINGS, n_findings)

    fixations: list[FreeViewFixation] = []
    sentences: list[TranscriptSentence] = []
    clock = 0.0
    for finding in findings:
        phase_start = clock
        # Wandering stretch anywhere on the image, short durations.
        for _ in range(rng.randint(*spec.fixations_per_phase)):
            d = rng.uniform(0.08, 0.35)
            fixations.append(
                FreeViewFixation(rng.uniform(0, size), rng.uniform(0, size), clock, d)
            )
            clock += d + rng.uniform(0.01, 0.05)
        # Settling burst inside one target anatomy, long durations.
        anatomy = rng.choice(sorted(DEFAULT_RELATIONS[finding]))
        box = boxes[anatomy]
        margin = spec.noise_radius * size
        cx = rng.uniform(box.left + margin, max(box.left + margin, box.right - margin))
        cy = rng.uniform(box.top + margin, max(box.top + margin, box.bottom - margin))
        for _ in range(rng.randint(2, 4)):
            x = min(max(cx + rng.uniform(-margin, margin), box.left), box.right)
            y = min(max(cy + rng.uniform(-margin, margin), box.top), box.bottom)
            d = rng.uniform(0.35, 0.9)
            fixations.append(FreeViewFixation(x, y, clock, d))
            clock += d + rng.uniform(0.01, 0.05)
        clock += rng.uniform(0.1, 0.4)
        sentences.append(
            TranscriptSentence(
                text=f"there is {finding}.",
                begin=phase_start,
                end=clock,
                findings=frozenset({finding}),
            )
        )
    sentences.append(
        TranscriptSentence(
            text="no further remarks.", begin=clock, end=clock + 1.0, findings=frozenset()
        )
    )
    return Sample(
        image_id=image_id,
        width=float(size),
        height=float(size),
        fixations=tuple(fixations),
        transcript=tuple(sentences),
        anatomy_boxes=boxes,
    )


def generate_samples(spec: SyntheticSpec) -> list[Sample]:
    rng = random.Random(spec.seed)
    return [
        generate_sample(spec, f"synth{i:05d}", rng) for i in range(spec.n_images)
    ]


def render_image(sample: Sample, rng: np.random.Generator) -> np.ndarray:
    """Procedural grayscale blobs: one soft ellipse per anatomy box plus noise."""
    size = int(sample.width)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32)
    canvas = np.full((size, size), 0.15, dtype=np.float32)
    for box in sample.anatomy_boxes.values():
        cx, cy = (box.left + box.right) / 2.0, (box.top + box.bottom) / 2.0
        rx = max((box.right - box.left) / 2.0, 1.0)
        ry = max((box.bottom - box.top) / 2.0, 1.0)
        blob = np.exp(-(((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2))
        canvas += 0.35 * blob
    noise = rng.uniform(-0.02, 0.02, size=(size, size)).astype(np.float32)
    return np.clip(canvas + noise, 0.0, 1.0)


def render_images(samples: Sequence[Sample], seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed + 1)
    return {s.image_id: render_image(s, rng) for s in samples}


def random_scanpaths(
    references: Iterable[Scanpath],
    width: float,
    height: float,
    seed: int = 0,
    max_length: int = 7,
) -> list[Scanpath]:
    """Uniform-random baseline: coordinates over the image, durations in
    [0.1, 1] s, lengths in [1, max_length]."""
    rng = random.Random(seed)
    out = []
    for ref in references:
        n = rng.randint(1, max_length)
        fixations = tuple(
            Fixation(rng.uniform(0, width), rng.uniform(0, height), rng.uniform(0.1, 1.0))
            for _ in range(n)
        )
        out.append(Scanpath(ref.image_id, ref.finding, fixations))
    return out
