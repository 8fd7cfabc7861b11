import pytest

from gaze2search.core import (
    DEFAULT_FINDINGS,
    Box,
    BoundingBoxSet,
    FreeViewFixation,
    Sample,
    TranscriptSentence,
    validate_relation_matrix,
    validate_sample,
)


def make_sample(**overrides):
    base = dict(
        image_id="img0",
        width=100.0,
        height=80.0,
        fixations=(
            FreeViewFixation(10, 10, 0.0, 0.2),
            FreeViewFixation(50, 40, 0.5, 0.3),
        ),
        transcript=(
            TranscriptSentence("a sentence.", 0.0, 1.0, frozenset({"edema"})),
        ),
        anatomy_boxes={"left lung": Box(55, 10, 90, 70)},
    )
    base.update(overrides)
    return Sample(**base)


def test_well_formed_sample_has_no_violations():
    assert validate_sample(make_sample()) == []


def test_zero_duration_names_the_fixation():
    sample = make_sample(
        fixations=(FreeViewFixation(10, 10, 0.0, 0.2), FreeViewFixation(20, 20, 0.5, 0.0))
    )
    problems = validate_sample(sample)
    assert len(problems) == 1
    assert "fixation 1" in problems[0] and "duration" in problems[0]


def test_unsorted_onsets_flagged():
    sample = make_sample(
        fixations=(FreeViewFixation(10, 10, 1.0, 0.2), FreeViewFixation(20, 20, 0.5, 0.2))
    )
    problems = validate_sample(sample)
    assert any("precedes" in p for p in problems)


def test_out_of_bounds_and_negative_onset():
    sample = make_sample(
        fixations=(FreeViewFixation(150, 10, 0.0, 0.2), FreeViewFixation(20, 20, -1.0, 0.2))
    )
    problems = validate_sample(sample)
    assert any("out of bounds" in p for p in problems)
    # the second fixation both has a negative onset and precedes nothing
    assert any("negative onset" in p for p in problems)


def test_transcript_violations():
    sample = make_sample(
        transcript=(
            TranscriptSentence("b", 2.0, 1.0, frozenset()),
            TranscriptSentence("a", 0.0, 3.0, frozenset()),
        )
    )
    problems = validate_sample(sample)
    assert any("after its end" in p for p in problems)
    assert any("begins before" in p for p in problems)


def test_bad_boxes_flagged():
    sample = make_sample(anatomy_boxes={"x": Box(50, 10, 40, 70), "y": Box(0, 0, 200, 10)})
    problems = validate_sample(sample)
    assert any("degenerate" in p for p in problems)
    assert any("exceeds image bounds" in p for p in problems)


def test_empty_box_set_rejected():
    with pytest.raises(ValueError):
        BoundingBoxSet("edema", ())


def test_default_vocabulary_has_13_findings():
    assert len(DEFAULT_FINDINGS) == 13
    assert len(set(DEFAULT_FINDINGS)) == 13


def test_relation_matrix_validation():
    matrix = {f: frozenset({"left lung"}) for f in DEFAULT_FINDINGS}
    assert validate_relation_matrix(matrix) == []
    del matrix["edema"]
    matrix["pneumonia"] = frozenset()
    problems = validate_relation_matrix(matrix)
    assert any("edema" in p for p in problems)
    assert any("pneumonia" in p for p in problems)
