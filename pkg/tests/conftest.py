import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from gaze2search.core import (
    Box,
    BoundingBoxSet,
    Fixation,
    FreeViewFixation,
    Sample,
    TranscriptSentence,
)


@pytest.fixture
def hand_trace_raw():
    """The worked filtering example: 100x100 image, box (40,40,60,60), r=10."""
    return [
        Fixation(10, 10, 0.2),
        Fixation(12, 12, 0.3),
        Fixation(50, 50, 0.5),
        Fixation(52, 52, 0.4),
        Fixation(90, 90, 0.1),
    ]


@pytest.fixture
def hand_trace_boxes():
    return BoundingBoxSet("lung opacity", (Box(40, 40, 60, 60),))


@pytest.fixture
def hand_trace_sample():
    """Full sample wrapping the worked example so convert_sample reproduces it."""
    fixations = tuple(
        FreeViewFixation(x, y, t, d)
        for (x, y, d), t in zip(
            [(10, 10, 0.2), (12, 12, 0.3), (50, 50, 0.5), (52, 52, 0.4), (90, 90, 0.1)],
            [0.0, 0.5, 1.0, 1.6, 2.1],
        )
    )
    transcript = (
        TranscriptSentence("there is lung opacity.", 0.0, 3.0, frozenset({"lung opacity"})),
    )
    return Sample(
        image_id="trace",
        width=100.0,
        height=100.0,
        fixations=fixations,
        transcript=transcript,
        anatomy_boxes={"right lung": Box(40, 40, 60, 60)},
    )
