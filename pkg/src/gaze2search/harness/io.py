"""File formats and loaders.

A samples directory holds:

* ``fixations.jsonl``       one record per fixation: {image_id, x, y, t, d}
* ``transcripts/<id>.json`` JSON array of {text, begin, end, findings: [...]}
* ``anatomy_boxes.jsonl``   {image_id, anatomy, left, top, right, bottom}
* ``relation_matrix.json``  JSON object finding -> [anatomy names]
* ``images/<id>.png``       8-bit grayscale image (optional for conversion)
* ``sizes.jsonl``           {image_id, width, height} (optional, else PNG)

Scanpaths are JSON-lines {image_id, finding, fixations: [[x, y, d], ...]}.
All formats are line-oriented where possible so outputs diff and stream well.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np
from PIL import Image

from ..core import (
    Box,
    Fixation,
    FreeViewFixation,
    Sample,
    Scanpath,
    TranscriptSentence,
    validate_sample,
)


class DataError(Exception):
    """Input data is malformed; maps to exit code 2 at the CLI."""


class ParseError(DataError):
    def __init__(self, path, line: Optional[int], field: Optional[str], message: str):
        self.path = str(path)
        self.line = line
        self.field = field
        where = self.path if line is None else f"{self.path}:{line}"
        if field:
            where += f" (field {field!r})"
        super().__init__(f"{where}: {message}")


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, None, f"invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise ParseError(path, lineno, None, "expected a JSON object")
            yield lineno, record


def _require(record: dict, keys: Sequence[str], path: Path, lineno: int) -> None:
    for key in keys:
        if key not in record:
            raise ParseError(path, lineno, key, "missing field")


def load_relation_matrix(path) -> dict[str, frozenset[str]]:
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(path, None, None, f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ParseError(path, None, None, "expected a JSON object")
    matrix = {}
    for finding, anatomies in data.items():
        if not isinstance(anatomies, list) or not all(isinstance(a, str) for a in anatomies):
            raise ParseError(path, None, finding, "expected a list of anatomy names")
        matrix[str(finding)] = frozenset(anatomies)
    return matrix


def save_relation_matrix(path, matrix: Mapping[str, Iterable[str]]) -> None:
    with open(path, "w") as fh:
        json.dump({k: sorted(v) for k, v in matrix.items()}, fh, indent=2)
        fh.write("\n")


def _load_transcript(path: Path) -> tuple[TranscriptSentence, ...]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(path, None, None, f"invalid JSON: {exc}") from None
    if not isinstance(data, list):
        raise ParseError(path, None, None, "expected a JSON array of sentences")
    sentences = []
    for i, rec in enumerate(data):
        for key in ("text", "begin", "end", "findings"):
            if key not in rec:
                raise ParseError(path, None, f"[{i}].{key}", "missing field")
        sentences.append(
            TranscriptSentence(
                text=str(rec["text"]),
                begin=float(rec["begin"]),
                end=float(rec["end"]),
                findings=frozenset(rec["findings"]),
            )
        )
    return tuple(sentences)


def _image_sizes(samples_dir: Path, image_ids: Iterable[str]) -> dict[str, tuple[float, float]]:
    sizes: dict[str, tuple[float, float]] = {}
    sizes_path = samples_dir / "sizes.jsonl"
    if sizes_path.exists():
        for lineno, rec in _iter_jsonl(sizes_path):
            _require(rec, ("image_id", "width", "height"), sizes_path, lineno)
            sizes[rec["image_id"]] = (float(rec["width"]), float(rec["height"]))
    for image_id in image_ids:
        if image_id in sizes:
            continue
        png = samples_dir / "images" / f"{image_id}.png"
        if not png.exists():
            raise ParseError(
                samples_dir / "sizes.jsonl",
                None,
                image_id,
                "no size record and no images/<id>.png to read dimensions from",
            )
        with Image.open(png) as img:
            sizes[image_id] = (float(img.width), float(img.height))
    return sizes


def load_samples(samples_dir) -> list[Sample]:
    """Load and validate every sample in a directory.

    Samples failing validation are rejected with an error naming the image
    and the violated invariants.
    """
    samples_dir = Path(samples_dir)
    fixations_path = samples_dir / "fixations.jsonl"
    if not fixations_path.exists():
        raise ParseError(fixations_path, None, None, "file not found")

    fixations: dict[str, list[FreeViewFixation]] = {}
    for lineno, rec in _iter_jsonl(fixations_path):
        _require(rec, ("image_id", "x", "y", "t", "d"), fixations_path, lineno)
        try:
            fix = FreeViewFixation(
                float(rec["x"]), float(rec["y"]), float(rec["t"]), float(rec["d"])
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(fixations_path, lineno, None, str(exc)) from None
        fixations.setdefault(str(rec["image_id"]), []).append(fix)

    boxes: dict[str, dict[str, Box]] = {}
    boxes_path = samples_dir / "anatomy_boxes.jsonl"
    if boxes_path.exists():
        for lineno, rec in _iter_jsonl(boxes_path):
            _require(
                rec,
                ("image_id", "anatomy", "left", "top", "right", "bottom"),
                boxes_path,
                lineno,
            )
            boxes.setdefault(str(rec["image_id"]), {})[str(rec["anatomy"])] = Box(
                float(rec["left"]), float(rec["top"]), float(rec["right"]), float(rec["bottom"])
            )

    sizes = _image_sizes(samples_dir, fixations.keys())
    samples = []
    for image_id in sorted(fixations):
        transcript_path = samples_dir / "transcripts" / f"{image_id}.json"
        transcript = _load_transcript(transcript_path) if transcript_path.exists() else ()
        width, height = sizes[image_id]
        sample = Sample(
            image_id=image_id,
            width=width,
            height=height,
            fixations=tuple(fixations[image_id]),
            transcript=transcript,
            anatomy_boxes=boxes.get(image_id, {}),
        )
        problems = validate_sample(sample)
        if problems:
            raise ParseError(
                fixations_path, None, image_id, "; ".join(problems)
            )
        samples.append(sample)
    return samples


def write_samples_dir(
    samples: Sequence[Sample],
    out_dir,
    matrix: Optional[Mapping[str, Iterable[str]]] = None,
    images: Optional[Mapping[str, np.ndarray]] = None,
) -> None:
    out = Path(out_dir)
    (out / "transcripts").mkdir(parents=True, exist_ok=True)
    with open(out / "fixations.jsonl", "w") as fh:
        for sample in samples:
            for f in sample.fixations:
                fh.write(
                    json.dumps(
                        {"image_id": sample.image_id, "x": f.x, "y": f.y, "t": f.t, "d": f.d}
                    )
                    + "\n"
                )
    with open(out / "anatomy_boxes.jsonl", "w") as fh:
        for sample in samples:
            for name, box in sample.anatomy_boxes.items():
                fh.write(
                    json.dumps(
                        {
                            "image_id": sample.image_id,
                            "anatomy": name,
                            "left": box.left,
                            "top": box.top,
                            "right": box.right,
                            "bottom": box.bottom,
                        }
                    )
                    + "\n"
                )
    with open(out / "sizes.jsonl", "w") as fh:
        for sample in samples:
            fh.write(
                json.dumps(
                    {"image_id": sample.image_id, "width": sample.width, "height": sample.height}
                )
                + "\n"
            )
    for sample in samples:
        with open(out / "transcripts" / f"{sample.image_id}.json", "w") as fh:
            json.dump(
                [
                    {
                        "text": s.text,
                        "begin": s.begin,
                        "end": s.end,
                        "findings": sorted(s.findings),
                    }
                    for s in sample.transcript
                ],
                fh,
                indent=2,
            )
            fh.write("\n")
    if matrix is not None:
        save_relation_matrix(out / "relation_matrix.json", matrix)
    if images:
        (out / "images").mkdir(exist_ok=True)
        for image_id, array in images.items():
            save_image(out / "images" / f"{image_id}.png", array)


def save_scanpaths(path, scanpaths: Iterable[Scanpath]) -> None:
    with open(path, "w") as fh:
        for sp in scanpaths:
            fh.write(
                json.dumps(
                    {
                        "image_id": sp.image_id,
                        "finding": sp.finding,
                        "fixations": [[f.x, f.y, f.d] for f in sp.fixations],
                    }
                )
                + "\n"
            )


def load_scanpaths(path) -> list[Scanpath]:
    path = Path(path)
    scanpaths = []
    for lineno, rec in _iter_jsonl(path):
        _require(rec, ("image_id", "finding", "fixations"), path, lineno)
        fixations = []
        for i, triple in enumerate(rec["fixations"]):
            if not isinstance(triple, (list, tuple)) or len(triple) != 3:
                raise ParseError(path, lineno, f"fixations[{i}]", "expected [x, y, d]")
            fixations.append(Fixation(float(triple[0]), float(triple[1]), float(triple[2])))
        if not fixations:
            raise ParseError(path, lineno, "fixations", "scanpath is empty")
        scanpaths.append(
            Scanpath(str(rec["image_id"]), str(rec["finding"]), tuple(fixations))
        )
    return scanpaths


def load_image(path) -> np.ndarray:
    """8-bit grayscale PNG -> float32 array in [0, 1]."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.float32) / 255.0


def save_image(path, array: np.ndarray) -> None:
    if array.dtype != np.uint8:
        array = np.clip(np.asarray(array) * 255.0, 0, 255).astype(np.uint8)
    Image.fromarray(array, mode="L").save(path)


def resize_image(array: np.ndarray, size: int) -> np.ndarray:
    if array.shape == (size, size):
        return array
    img = Image.fromarray(np.clip(array * 255.0, 0, 255).astype(np.uint8), mode="L")
    return np.asarray(img.resize((size, size), Image.BILINEAR), dtype=np.float32) / 255.0


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
