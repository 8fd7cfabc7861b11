"""Domain types shared by the conversion pipeline, the metric suite, and the model.

Coordinates are floating-point pixels in the native image frame, origin at
the top-left corner.  All types are immutable after construction and safe to
share across threads.

Findings are plain strings drawn from a configurable vocabulary.  The default
13-label vocabulary below uses CheXpert-style names and is a documented
stand-in: any vocabulary of the same shape can be loaded in its place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

DEFAULT_FINDINGS: tuple[str, ...] = (
    "atelectasis",
    "cardiomegaly",
    "consolidation",
    "edema",
    "enlarged cardiomediastinum",
    "fracture",
    "lung lesion",
    "lung opacity",
    "pleural effusion",
    "pleural other",
    "pneumonia",
    "pneumothorax",
    "support devices",
)


@dataclass(frozen=True)
class FreeViewFixation:
    """A raw gaze stop: position, onset timestamp, and duration (seconds)."""

    x: float
    y: float
    t: float
    d: float


@dataclass(frozen=True)
class Fixation:
    """A gaze stop after timestamps have been dropped: position and duration."""

    x: float
    y: float
    d: float

    def distance_to(self, other: "Fixation") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class TranscriptSentence:
    """One dictated sentence with its time span and pre-computed finding labels."""

    text: str
    begin: float
    end: float
    findings: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in pixel coordinates, boundaries inclusive."""

    left: float
    top: float
    right: float
    bottom: float

    def contains(self, x: float, y: float) -> bool:
        return self.left <= x <= self.right and self.top <= y <= self.bottom

    def is_valid(self) -> bool:
        return self.left < self.right and self.top < self.bottom


@dataclass(frozen=True)
class BoundingBoxSet:
    """The target region for one finding: the union of its anatomy boxes."""

    finding: str
    boxes: tuple[Box, ...]

    def __post_init__(self) -> None:
        if not self.boxes:
            raise ValueError(f"empty box set for finding {self.finding!r}")


# Finding name -> anatomy names whose boxes form the target region.
RelationMatrix = Mapping[str, frozenset[str]]


def validate_relation_matrix(
    matrix: RelationMatrix, vocabulary: Sequence[str] = DEFAULT_FINDINGS
) -> list[str]:
    """Return one message per vocabulary finding missing or empty in the matrix."""
    problems = []
    for finding in vocabulary:
        anatomies = matrix.get(finding)
        if anatomies is None:
            problems.append(f"finding {finding!r} has no relation-matrix entry")
        elif not anatomies:
            problems.append(f"finding {finding!r} maps to no anatomies")
    return problems


@dataclass(frozen=True)
class Sample:
    """One recording: free-view fixations, transcript, and anatomy boxes on one image."""

    image_id: str
    width: float
    height: float
    fixations: tuple[FreeViewFixation, ...]
    transcript: tuple[TranscriptSentence, ...]
    anatomy_boxes: Mapping[str, Box]


@dataclass(frozen=True)
class Scanpath:
    """An ordered fixation sequence over one image, conditioned on a finding."""

    image_id: str
    finding: str
    fixations: tuple[Fixation, ...]

    def __len__(self) -> int:
        return len(self.fixations)


def validate_sample(sample: Sample) -> list[str]:
    """Check every type invariant of a sample; violations are data, not failures.

    Returns an empty list iff the sample is well formed.  Each violation names
    the offending field or element index.
    """
    problems: list[str] = []
    if sample.width <= 0 or sample.height <= 0:
        problems.append(
            f"image dimensions must be positive, got {sample.width}x{sample.height}"
        )
    prev_t = -math.inf
    for i, f in enumerate(sample.fixations):
        if not (0 <= f.x <= sample.width and 0 <= f.y <= sample.height):
            problems.append(f"fixation {i} at ({f.x}, {f.y}) is out of bounds")
        if f.d <= 0:
            problems.append(f"fixation {i} has non-positive duration {f.d}")
        if f.t < 0:
            problems.append(f"fixation {i} has negative onset {f.t}")
        if f.t < prev_t:
            problems.append(f"fixation {i} onset {f.t} precedes fixation {i - 1}")
        prev_t = f.t
    prev_begin = -math.inf
    for i, s in enumerate(sample.transcript):
        if s.begin > s.end:
            problems.append(f"sentence {i} begins at {s.begin} after its end {s.end}")
        if s.begin < prev_begin:
            problems.append(f"sentence {i} begins before sentence {i - 1}")
        prev_begin = s.begin
    for name, box in sample.anatomy_boxes.items():
        if not box.is_valid():
            problems.append(f"anatomy box {name!r} is degenerate: {box}")
        elif not (
            0 <= box.left
            and box.right <= sample.width
            and 0 <= box.top
            and box.bottom <= sample.height
        ):
            problems.append(f"anatomy box {name!r} exceeds image bounds: {box}")
    return problems
