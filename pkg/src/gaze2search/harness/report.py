"""Render one or more metric reports as a side-by-side comparison table."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

COLUMNS = (
    ("ScanMatch w/o Dur.", "scanmatch_wo_dur"),
    ("ScanMatch w/ Dur.", "scanmatch_w_dur"),
    ("Vector", "mm_vector"),
    ("Direction", "mm_direction"),
    ("Length", "mm_length"),
    ("Position", "mm_position"),
    ("Duration", "mm_duration"),
    ("SED", "sed"),
    ("STDE", "stde"),
)


def render_comparison(named_reports: Sequence[tuple[str, dict]]) -> str:
    """Fixed-layout comparison: ScanMatch pair, the five MultiMatch
    dimensions in Vector/Direction/Length/Position/Duration order, SED, STDE."""
    headers = ["Method"] + [title for title, _ in COLUMNS]
    rows = []
    for name, report in named_reports:
        row = [name]
        for _, key in COLUMNS:
            value = report.get(key)
            row.append("-" if value is None else f"{value:.4f}")
        rows.append(row)
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in rows)) if rows else len(headers[i])
        for i in range(len(headers))
    ]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*headers), fmt.format(*["-" * w for w in widths])]
    lines.extend(fmt.format(*row) for row in rows)
    return "\n".join(lines)


def render_comparison_files(paths: Sequence, names: Sequence[str] | None = None) -> str:
    reports = []
    for i, path in enumerate(paths):
        with open(path) as fh:
            data = json.load(fh)
        name = names[i] if names and i < len(names) else Path(path).stem
        reports.append((name, data))
    return render_comparison(reports)
