"""gaze2search: finding-conditioned visual-search scanpaths over chest X-rays.

Three layers: a conversion pipeline turning free-view eye-tracking recordings
into finding-conditioned search scanpaths, a scanpath-similarity metric suite
(ScanMatch, MultiMatch, SED, STDE), and a desk-scale predictor that learns to
generate such scanpaths from an image and a target finding.
"""

from .core import (
    DEFAULT_FINDINGS,
    BoundingBoxSet,
    Box,
    Fixation,
    FreeViewFixation,
    Sample,
    Scanpath,
    TranscriptSentence,
    validate_relation_matrix,
    validate_sample,
)
from .pipeline import (
    ConversionResult,
    NoAnatomyBoxes,
    NoFixationsBeforeCutoff,
    NoTargetFixation,
    NotMentioned,
    PipelineConfig,
    SkipFinding,
    Unconstrainable,
    boxes_for_finding,
    convert_sample,
    finding_cutoff,
    map_finding_fixations,
    point_in_boxes,
    radius_filter,
    split_dataset,
    time_constrain,
)
from .metrics import (
    GridSpec,
    MetricReport,
    MissingReference,
    MultiMatchResult,
    ScanMatchConfig,
    evaluate,
    multimatch,
    quantize,
    scanmatch,
    sed,
    stde,
)

__version__ = "0.1.0"
