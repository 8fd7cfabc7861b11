"""Free-view fixations -> finding-conditioned visual-search scanpaths.

Per finding, the conversion runs four stages:

1. transcript cutoff: keep only fixations recorded before the end of the last
   sentence that mentions the finding,
2. anatomy lookup: collect the bounding boxes of the anatomies related to the
   finding into the target region B,
3. radius filtering: cluster fixations by backward chaining (a fixation joins
   the current cluster iff it lies within the radius of the immediately
   following raw fixation), starting from the last fixation inside B,
4. time-spent constraining: truncate the front of the sequence until the
   total duration spent inside B is at least the total spent outside.

Every produced scanpath starts with a default center fixation and has at most
``max_length`` fixations.  Findings that cannot be converted are skipped and
counted by cause; skipping is data, not failure.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import (
    DEFAULT_FINDINGS,
    BoundingBoxSet,
    Box,
    Fixation,
    FreeViewFixation,
    RelationMatrix,
    Sample,
    Scanpath,
    TranscriptSentence,
)


class SkipFinding(Exception):
    """A finding cannot be converted for this sample; the pair is skipped."""

    reason = "skipped"


class NotMentioned(SkipFinding):
    reason = "not_mentioned"


class NoFixationsBeforeCutoff(SkipFinding):
    reason = "no_fixations_before_cutoff"


class NoAnatomyBoxes(SkipFinding):
    reason = "no_anatomy_boxes"


class NoTargetFixation(SkipFinding):
    reason = "no_target_fixation"


class Unconstrainable(SkipFinding):
    reason = "unconstrainable"


SKIP_REASONS = (
    NotMentioned.reason,
    NoFixationsBeforeCutoff.reason,
    NoAnatomyBoxes.reason,
    NoTargetFixation.reason,
    Unconstrainable.reason,
)


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the conversion.

    ``radius`` is the chaining radius in pixels; ``None`` resolves to W/16 per
    image, a documented stand-in for the two-degree visual angle of the source
    recordings (screen geometry is not part of the data).  ``containment``
    selects whether a point must fall inside at least one target box (union)
    or inside all of them (intersection).  ``constrain_center`` makes the
    default center fixation participate in the time-spent constraint instead
    of being exempt.
    """

    max_length: int = 7
    radius: float | None = None
    center_duration: float = 0.3
    containment: str = "union"
    constrain_center: bool = False

    def __post_init__(self) -> None:
        if self.max_length < 2:
            raise ValueError("max_length must be at least 2")
        if self.radius is not None and self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.center_duration <= 0:
            raise ValueError("center_duration must be positive")
        if self.containment not in ("union", "intersection"):
            raise ValueError(f"unknown containment mode {self.containment!r}")

    def resolve_radius(self, width: float) -> float:
        return self.radius if self.radius is not None else width / 16.0


def finding_cutoff(transcript: Sequence[TranscriptSentence], target: str) -> float:
    """End time of the last transcript sentence that mentions the target finding."""
    if not transcript:
        raise NotMentioned(f"empty transcript, {target!r} never mentioned")
    cutoff = None
    for sentence in transcript:
        if target in sentence.findings:
            cutoff = sentence.end
    if cutoff is None:
        raise NotMentioned(f"{target!r} not mentioned in transcript")
    return cutoff


def map_finding_fixations(
    fixations: Sequence[FreeViewFixation], cutoff: float
) -> tuple[Fixation, ...]:
    """Keep fixations with onset in [0, cutoff] and drop their timestamps."""
    kept = tuple(Fixation(f.x, f.y, f.d) for f in fixations if 0 <= f.t <= cutoff)
    if not kept:
        raise NoFixationsBeforeCutoff(f"no fixation starts before t={cutoff}")
    return kept


def boxes_for_finding(
    matrix: RelationMatrix, anatomy_boxes: Mapping[str, Box], target: str
) -> BoundingBoxSet:
    """Target region for a finding: boxes of its related anatomies present in the sample."""
    if target not in matrix:
        raise KeyError(f"finding {target!r} missing from relation matrix")
    boxes = tuple(
        anatomy_boxes[name] for name in sorted(matrix[target]) if name in anatomy_boxes
    )
    if not boxes:
        raise NoAnatomyBoxes(f"no anatomy box available for {target!r}")
    return BoundingBoxSet(target, boxes)


def point_in_boxes(
    x: float, y: float, boxes: BoundingBoxSet, containment: str = "union"
) -> bool:
    """Containment test with closed boundaries.

    Union mode: inside at least one box.  Intersection mode: inside all boxes
    (the literal reading; near-useless for findings spanning disjoint
    anatomies, kept for fidelity experiments).
    """
    hits = (b.contains(x, y) for b in boxes.boxes)
    return any(hits) if containment == "union" else all(hits)


def radius_filter(
    fixations: Sequence[Fixation],
    boxes: BoundingBoxSet,
    width: float,
    height: float,
    config: PipelineConfig,
) -> tuple[Fixation, ...]:
    """Cluster fixations by backward chaining and cap the scanpath length.

    Walking backward from the last fixation inside the target region, a
    fixation joins the current cluster iff its distance to the immediately
    following raw fixation is within the radius; otherwise the cluster is
    flushed (centroid coordinates, summed duration) and a new one starts.
    Clusters older than the ``max_length - 1`` most recent are dropped, as are
    raw fixations after the last in-region one.  The output is time-ordered:
    the default center fixation first, then clusters from earliest to latest.
    """
    if not fixations:
        raise ValueError("radius_filter needs at least one fixation")
    radius = config.resolve_radius(width)
    center = Fixation(width / 2.0, height / 2.0, config.center_duration)

    j = None
    for i in range(len(fixations) - 1, -1, -1):
        if point_in_boxes(fixations[i].x, fixations[i].y, boxes, config.containment):
            j = i
            break
    if j is None:
        raise NoTargetFixation(f"no fixation inside target region of {boxes.finding!r}")

    def aggregate(members: list[Fixation]) -> Fixation:
        cx = sum(m.x for m in members) / len(members)
        cy = sum(m.y for m in members) / len(members)
        return Fixation(cx, cy, sum(m.d for m in members))

    clusters: list[Fixation] = []  # latest first
    current = [fixations[j]]
    for i in range(j - 1, -1, -1):
        if fixations[i].distance_to(fixations[i + 1]) <= radius:
            current.append(fixations[i])
        else:
            clusters.append(aggregate(current))
            current = [fixations[i]]
            if len(clusters) + 1 == config.max_length:
                current = []
                break
    if current and len(clusters) + 1 < config.max_length:
        clusters.append(aggregate(current))

    return (center, *reversed(clusters))


def time_constrain(
    scanpath: Sequence[Fixation],
    boxes: BoundingBoxSet,
    center_duration: float,
    containment: str = "union",
    constrain_center: bool = False,
) -> tuple[Fixation, ...]:
    """Truncate the scanpath front until in-region time dominates.

    Over the body (everything after the center fixation, unless
    ``constrain_center``), suffix sums of durations inside and outside the
    target region are compared: the body is cut to start at the first index
    whose in-region suffix total is at least the out-of-region one.  A body
    that already satisfies the constraint is returned unchanged; one where no
    index satisfies it cannot be converted.
    """
    scanpath = tuple(scanpath)
    if constrain_center:
        head, body = (), scanpath
    else:
        head, body = scanpath[:1], scanpath[1:]
        if head and head[0].d != center_duration:
            raise ValueError(
                f"expected leading center fixation with duration {center_duration}"
            )
    if not body:
        raise Unconstrainable("empty scanpath body")

    inside = [point_in_boxes(f.x, f.y, boxes, containment) for f in body]
    d_in = d_out = 0.0
    start = None  # min index with in-region suffix >= out-of-region suffix
    for k in range(len(body) - 1, -1, -1):
        if inside[k]:
            d_in += body[k].d
        else:
            d_out += body[k].d
        if d_in >= d_out:
            start = k
    if start is None:
        raise Unconstrainable(
            f"no suffix of the scanpath is dominated by {boxes.finding!r} time"
        )
    return head + body[start:]


@dataclass
class ConversionResult:
    """Scanpaths produced for one sample plus per-cause skip counts."""

    image_id: str
    scanpaths: dict[str, Scanpath] = field(default_factory=dict)
    skips: Counter = field(default_factory=Counter)


def convert_sample(
    sample: Sample,
    matrix: RelationMatrix,
    config: PipelineConfig = PipelineConfig(),
    vocabulary: Sequence[str] = DEFAULT_FINDINGS,
) -> ConversionResult:
    """Run the full conversion for every vocabulary finding of one sample.

    Findings that fail any stage are absent from the output and counted by
    cause in the result's ``skips``.
    """
    result = ConversionResult(sample.image_id)
    for finding in vocabulary:
        try:
            cutoff = finding_cutoff(sample.transcript, finding)
            kept = map_finding_fixations(sample.fixations, cutoff)
            boxes = boxes_for_finding(matrix, sample.anatomy_boxes, finding)
            filtered = radius_filter(kept, boxes, sample.width, sample.height, config)
            constrained = time_constrain(
                filtered,
                boxes,
                config.center_duration,
                config.containment,
                config.constrain_center,
            )
        except SkipFinding as skip:
            result.skips[skip.reason] += 1
            continue
        result.scanpaths[finding] = Scanpath(sample.image_id, finding, constrained)
    return result


def split_dataset(
    scanpaths: Iterable[Scanpath],
    ratios: tuple[float, float, float] = (0.70, 0.10, 0.20),
    seed: int = 0,
) -> tuple[list[Scanpath], list[Scanpath], list[Scanpath]]:
    """Deterministic train/val/test partition, grouped by image.

    All scanpaths of one image land in the same split.  Split sizes are the
    floor of ratio * image count; leftover images go to train.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    scanpaths = list(scanpaths)
    images = sorted({sp.image_id for sp in scanpaths})
    if len(images) < len(ratios):
        raise ValueError(f"need at least {len(ratios)} images, got {len(images)}")
    random.Random(seed).shuffle(images)

    n = len(images)
    n_val = math.floor(ratios[1] * n)
    n_test = math.floor(ratios[2] * n)
    n_train = n - n_val - n_test  # floor(train) plus the remainder
    train_ids = set(images[:n_train])
    val_ids = set(images[n_train : n_train + n_val])

    splits: tuple[list[Scanpath], ...] = ([], [], [])
    for sp in scanpaths:
        if sp.image_id in train_ids:
            splits[0].append(sp)
        elif sp.image_id in val_ids:
            splits[1].append(sp)
        else:
            splits[2].append(sp)
    return splits
