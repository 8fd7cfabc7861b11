"""File formats, synthetic data, CLI, and report rendering."""

from .config import ConfigStack
from .datasets import build_training_records, load_model_image, to_native_frame
from .io import (
    DataError,
    ParseError,
    load_image,
    load_relation_matrix,
    load_samples,
    load_scanpaths,
    resize_image,
    save_image,
    save_relation_matrix,
    save_scanpaths,
    write_samples_dir,
)
from .report import render_comparison, render_comparison_files
from .synth import (
    ANATOMY_LAYOUT,
    DEFAULT_RELATIONS,
    SyntheticSpec,
    generate_sample,
    generate_samples,
    random_scanpaths,
    render_image,
    render_images,
)

__all__ = [
    "ANATOMY_LAYOUT",
    "ConfigStack",
    "DEFAULT_RELATIONS",
    "DataError",
    "ParseError",
    "SyntheticSpec",
    "build_training_records",
    "generate_sample",
    "generate_samples",
    "load_image",
    "load_model_image",
    "load_relation_matrix",
    "load_samples",
    "load_scanpaths",
    "random_scanpaths",
    "render_comparison",
    "render_comparison_files",
    "render_image",
    "render_images",
    "resize_image",
    "save_image",
    "save_relation_matrix",
    "save_scanpaths",
    "to_native_frame",
    "write_samples_dir",
]
