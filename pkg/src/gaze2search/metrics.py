"""Scanpath similarity metrics: ScanMatch, MultiMatch, SED, STDE.

The metric definitions fix no universal parameter set, so every function
takes its parameters explicitly and :func:`evaluate` records the set used;
absolute values are comparable only under identical parameters.

Conventions used throughout:

* grids quantize fixations to cells with boundary points assigned to the
  lower-index cell,
* ScanMatch runs Needleman-Wunsch global alignment with substitution score
  ``max(0, threshold - dist(cell centers)) / threshold`` and a configurable
  gap penalty, normalized by the longer (duration-expanded) length so that
  identical sequences score exactly 1,
* MultiMatch aligns saccade vectors by a cheapest-path dynamic program over
  pairwise vector-difference costs and averages five per-pair similarities,
* SED is the plain Levenshtein distance between quantized cell strings,
* STDE averages, over all length-k windows of the prediction, the minimum
  mean point distance to any same-length window of the reference, scaled by
  the image diagonal.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import Fixation, Scanpath


class MissingReference(Exception):
    """A prediction has no reference with the same (image_id, finding)."""


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid over an image; cell ids are row-major."""

    cols: int
    rows: int
    width: float
    height: float

    def __post_init__(self) -> None:
        if self.cols < 1 or self.rows < 1:
            raise ValueError("grid must have at least one cell")
        if self.cols * self.rows > 676:
            raise ValueError("grid exceeds the 676-cell two-letter alphabet bound")

    @property
    def cell_width(self) -> float:
        return self.width / self.cols

    @property
    def cell_height(self) -> float:
        return self.height / self.rows

    def cell_of(self, x: float, y: float) -> int:
        # Boundary points belong to the lower-index cell.
        col = min(max(math.ceil(x / self.cell_width) - 1, 0), self.cols - 1)
        row = min(max(math.ceil(y / self.cell_height) - 1, 0), self.rows - 1)
        return row * self.cols + col

    def center_of(self, cell: int) -> tuple[float, float]:
        row, col = divmod(cell, self.cols)
        return (col + 0.5) * self.cell_width, (row + 0.5) * self.cell_height


def _diagonal(width: float, height: float) -> float:
    return math.hypot(width, height)


@dataclass(frozen=True)
class ScanMatchConfig:
    grid: GridSpec
    substitution_threshold: float
    gap_penalty: float = 0.0
    duration_bin: float = 0.05

    def __post_init__(self) -> None:
        if self.substitution_threshold <= 0:
            raise ValueError("substitution_threshold must be positive")
        if self.duration_bin <= 0:
            raise ValueError("duration_bin must be positive")

    @classmethod
    def default(cls, width: float, height: float) -> "ScanMatchConfig":
        return cls(
            grid=GridSpec(12, 8, width, height),
            substitution_threshold=_diagonal(width, height) / 4.0,
        )


def default_sed_grid(width: float, height: float) -> GridSpec:
    return GridSpec(5, 5, width, height)


def quantize(
    scanpath: Scanpath | Sequence[Fixation],
    grid: GridSpec,
    with_duration: bool = False,
    duration_bin: float = 0.05,
) -> list[int]:
    """Map fixations to grid-cell symbols, optionally repeated per duration bin."""
    fixations = scanpath.fixations if isinstance(scanpath, Scanpath) else scanpath
    symbols: list[int] = []
    for f in fixations:
        cell = grid.cell_of(f.x, f.y)
        repeats = math.ceil(f.d / duration_bin) if with_duration else 1
        symbols.extend([cell] * max(repeats, 1))
    return symbols


def scanmatch(
    a: Scanpath | Sequence[Fixation],
    b: Scanpath | Sequence[Fixation],
    config: ScanMatchConfig,
    with_duration: bool = False,
) -> float:
    """Normalized Needleman-Wunsch similarity between two quantized scanpaths."""
    sa = quantize(a, config.grid, with_duration, config.duration_bin)
    sb = quantize(b, config.grid, with_duration, config.duration_bin)
    if not sa or not sb:
        raise ValueError("scanmatch needs non-empty scanpaths")

    centers = {c: config.grid.center_of(c) for c in set(sa) | set(sb)}
    thr = config.substitution_threshold

    def sub(p: int, q: int) -> float:
        (px, py), (qx, qy) = centers[p], centers[q]
        return max(0.0, thr - math.hypot(px - qx, py - qy)) / thr

    gap = config.gap_penalty
    n, m = len(sa), len(sb)
    score = np.empty((n + 1, m + 1))
    score[0, :] = np.arange(m + 1) * gap
    score[:, 0] = np.arange(n + 1) * gap
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            score[i, j] = max(
                score[i - 1, j - 1] + sub(sa[i - 1], sb[j - 1]),
                score[i - 1, j] + gap,
                score[i, j - 1] + gap,
            )
    return float(score[n, m]) / max(n, m)


@dataclass(frozen=True)
class MultiMatchResult:
    """Five similarity dimensions; None when a scanpath has no saccade."""

    vector: Optional[float]
    direction: Optional[float]
    length: Optional[float]
    position: Optional[float]
    duration: Optional[float]

    def as_dict(self) -> dict[str, Optional[float]]:
        return {
            "vector": self.vector,
            "direction": self.direction,
            "length": self.length,
            "position": self.position,
            "duration": self.duration,
        }


def _saccades(fixations: Sequence[Fixation]) -> np.ndarray:
    pts = np.array([(f.x, f.y) for f in fixations])
    return pts[1:] - pts[:-1]


def _cheapest_alignment(cost: np.ndarray) -> list[tuple[int, int]]:
    """Min-cost monotone path through the cost matrix from (0,0) to (n-1,m-1).

    Moves are right, down, and diagonal; the path cost is the sum of visited
    cells.  Ties prefer the diagonal so identical sequences align pairwise.
    """
    n, m = cost.shape
    total = np.full((n, m), np.inf)
    total[0, 0] = cost[0, 0]
    for i in range(n):
        for j in range(m):
            if i == 0 and j == 0:
                continue
            best = np.inf
            if i > 0 and j > 0:
                best = total[i - 1, j - 1]
            if i > 0:
                best = min(best, total[i - 1, j])
            if j > 0:
                best = min(best, total[i, j - 1])
            total[i, j] = cost[i, j] + best
    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        candidates = []
        if i > 0 and j > 0:
            candidates.append((total[i - 1, j - 1], 0, (i - 1, j - 1)))
        if i > 0:
            candidates.append((total[i - 1, j], 1, (i - 1, j)))
        if j > 0:
            candidates.append((total[i, j - 1], 2, (i, j - 1)))
        _, _, (i, j) = min(candidates)
        path.append((i, j))
    path.reverse()
    return path


def _angle_difference(u: np.ndarray, v: np.ndarray) -> float:
    diff = abs(math.atan2(u[1], u[0]) - math.atan2(v[1], v[0]))
    return min(diff, 2 * math.pi - diff)


def _simplify(
    fixations: list[Fixation],
    amplitude_threshold: float,
    direction_threshold: float,
    duration_threshold: float,
) -> list[Fixation]:
    """Merge consecutive saccades that are short or co-directed.

    A shared fixation between two saccades is removed when its duration is
    below the duration threshold and either both saccades are shorter than
    the amplitude threshold or the angle between them is below the direction
    threshold (radians).  Repeats until stable.
    """
    changed = True
    while changed and len(fixations) > 2:
        changed = False
        for i in range(1, len(fixations) - 1):
            if fixations[i].d >= duration_threshold:
                continue
            u = np.array([fixations[i].x - fixations[i - 1].x, fixations[i].y - fixations[i - 1].y])
            v = np.array([fixations[i + 1].x - fixations[i].x, fixations[i + 1].y - fixations[i].y])
            short = (
                np.hypot(*u) < amplitude_threshold and np.hypot(*v) < amplitude_threshold
            )
            aligned = _angle_difference(u, v) < direction_threshold
            if short or aligned:
                del fixations[i]
                changed = True
                break
    return fixations


def multimatch(
    a: Scanpath | Sequence[Fixation],
    b: Scanpath | Sequence[Fixation],
    width: float,
    height: float,
    simplify: bool = False,
    amplitude_threshold: Optional[float] = None,
    direction_threshold: float = math.radians(45.0),
    duration_threshold: float = 0.3,
) -> MultiMatchResult:
    """Five-dimensional scanpath similarity over aligned saccade pairs.

    Saccade simplification is off by default (sequences here are short); when
    enabled it merges small or co-directed consecutive saccades first.
    Scanpaths with fewer than two fixations have no saccades, and all
    dimensions are reported absent.
    """
    fa = list(a.fixations if isinstance(a, Scanpath) else a)
    fb = list(b.fixations if isinstance(b, Scanpath) else b)
    if simplify:
        amp = amplitude_threshold
        if amp is None:
            amp = _diagonal(width, height) / 10.0
        fa = _simplify(fa, amp, direction_threshold, duration_threshold)
        fb = _simplify(fb, amp, direction_threshold, duration_threshold)
    if len(fa) < 2 or len(fb) < 2:
        return MultiMatchResult(None, None, None, None, None)

    ua, ub = _saccades(fa), _saccades(fb)
    cost = np.linalg.norm(ua[:, None, :] - ub[None, :, :], axis=2)
    path = _cheapest_alignment(cost)

    diag = _diagonal(width, height)
    vec, drn, ln, pos, dur = [], [], [], [], []
    for i, j in path:
        vec.append(1.0 - float(np.linalg.norm(ua[i] - ub[j])) / (2 * diag))
        drn.append(1.0 - _angle_difference(ua[i], ub[j]) / math.pi)
        ln.append(
            1.0 - abs(float(np.linalg.norm(ua[i])) - float(np.linalg.norm(ub[j]))) / diag
        )
        pos.append(
            1.0 - math.hypot(fa[i].x - fb[j].x, fa[i].y - fb[j].y) / diag
        )
        dur.append(1.0 - abs(fa[i].d - fb[j].d) / max(fa[i].d, fb[j].d))
    mean = lambda xs: float(np.mean(xs))
    return MultiMatchResult(mean(vec), mean(drn), mean(ln), mean(pos), mean(dur))


def sed(
    a: Scanpath | Sequence[Fixation],
    b: Scanpath | Sequence[Fixation],
    grid: GridSpec,
) -> int:
    """Levenshtein distance between the quantized cell strings of two scanpaths."""
    sa = quantize(a, grid)
    sb = quantize(b, grid)
    if not sa or not sb:
        raise ValueError("sed needs non-empty scanpaths")
    prev = list(range(len(sb) + 1))
    for i, p in enumerate(sa, start=1):
        cur = [i] + [0] * len(sb)
        for j, q in enumerate(sb, start=1):
            cur[j] = min(
                prev[j] + 1,  # delete
                cur[j - 1] + 1,  # insert
                prev[j - 1] + (p != q),  # substitute
            )
        prev = cur
    return prev[-1]


def stde(
    pred: Scanpath | Sequence[Fixation],
    gt: Scanpath | Sequence[Fixation],
    width: float,
    height: float,
    k: int = 3,
) -> float:
    """Window-based similarity: mean minimum distance between sub-sequences.

    Directional (prediction against reference).  When either scanpath is
    shorter than k, the window length drops to the shorter length.
    """
    pa = np.array([(f.x, f.y) for f in (pred.fixations if isinstance(pred, Scanpath) else pred)])
    pb = np.array([(f.x, f.y) for f in (gt.fixations if isinstance(gt, Scanpath) else gt)])
    if len(pa) == 0 or len(pb) == 0:
        raise ValueError("stde needs non-empty scanpaths")
    k = max(1, min(k, len(pa), len(pb)))
    wins_a = np.stack([pa[i : i + k] for i in range(len(pa) - k + 1)])
    wins_b = np.stack([pb[j : j + k] for j in range(len(pb) - k + 1)])
    # (na, nb, k): mean per-point distance of every window pair
    dists = np.linalg.norm(wins_a[:, None, :, :] - wins_b[None, :, :, :], axis=3).mean(axis=2)
    avg_min = float(dists.min(axis=1).mean())
    return min(1.0, max(0.0, 1.0 - avg_min / _diagonal(width, height)))


REPORT_KEYS = (
    "scanmatch_wo_dur",
    "scanmatch_w_dur",
    "mm_vector",
    "mm_direction",
    "mm_length",
    "mm_position",
    "mm_duration",
    "sed",
    "stde",
)


@dataclass
class MetricReport:
    """Per-pair metric values, their means, and the parameter set used."""

    means: dict[str, Optional[float]]
    per_pair: list[dict]
    params: dict
    n_pairs: int
    n_references: int = 0
    n_unmatched_references: int = 0

    def to_json_dict(self) -> dict:
        # Fixed schema: exactly the metric keys plus n_pairs and params.
        out: dict = {key: self.means.get(key) for key in REPORT_KEYS}
        out["n_pairs"] = self.n_pairs
        out["params"] = self.params
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image_id", "finding", *REPORT_KEYS])
            for row in self.per_pair:
                writer.writerow(
                    [row["image_id"], row["finding"]]
                    + [row[key] if row[key] is not None else "" for key in REPORT_KEYS]
                )


def evaluate(
    predictions: Iterable[Scanpath],
    references: Iterable[Scanpath],
    width: float,
    height: float,
    scanmatch_config: Optional[ScanMatchConfig] = None,
    sed_grid: Optional[GridSpec] = None,
    stde_k: int = 3,
    mm_simplify: bool = False,
) -> MetricReport:
    """Score every prediction against its (image_id, finding) reference.

    A prediction without a reference is an error; references without a
    prediction only lower coverage and are counted in the report.
    """
    predictions = list(predictions)
    ref_index = {(r.image_id, r.finding): r for r in references}
    if scanmatch_config is None:
        scanmatch_config = ScanMatchConfig.default(width, height)
    if sed_grid is None:
        sed_grid = default_sed_grid(width, height)

    per_pair: list[dict] = []
    matched_keys = set()
    for pred in predictions:
        key = (pred.image_id, pred.finding)
        ref = ref_index.get(key)
        if ref is None:
            raise MissingReference(f"no reference for image {key[0]!r}, finding {key[1]!r}")
        matched_keys.add(key)
        mm = multimatch(pred, ref, width, height, simplify=mm_simplify)
        row = {
            "image_id": pred.image_id,
            "finding": pred.finding,
            "scanmatch_wo_dur": scanmatch(pred, ref, scanmatch_config, with_duration=False),
            "scanmatch_w_dur": scanmatch(pred, ref, scanmatch_config, with_duration=True),
            "mm_vector": mm.vector,
            "mm_direction": mm.direction,
            "mm_length": mm.length,
            "mm_position": mm.position,
            "mm_duration": mm.duration,
            "sed": sed(pred, ref, sed_grid),
            "stde": stde(pred, ref, width, height, k=stde_k),
        }
        per_pair.append(row)

    means: dict[str, Optional[float]] = {}
    for key in REPORT_KEYS:
        values = [row[key] for row in per_pair if row[key] is not None]
        means[key] = float(np.mean(values)) if values else None

    params = {
        "width": width,
        "height": height,
        "scanmatch_grid": [scanmatch_config.grid.cols, scanmatch_config.grid.rows],
        "substitution_threshold": scanmatch_config.substitution_threshold,
        "gap_penalty": scanmatch_config.gap_penalty,
        "duration_bin": scanmatch_config.duration_bin,
        "sed_grid": [sed_grid.cols, sed_grid.rows],
        "stde_k": stde_k,
        "mm_simplify": mm_simplify,
    }
    return MetricReport(
        means=means,
        per_pair=per_pair,
        params=params,
        n_pairs=len(per_pair),
        n_references=len(ref_index),
        n_unmatched_references=len(ref_index) - len(matched_keys),
    )
