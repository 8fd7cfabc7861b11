"""Batch command-line interface.

Subcommands: convert, evaluate, train, predict, synth, report.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

Every value can come from a CLI flag, a config file section (via --config),
or a built-in default, in that order of precedence; the effective
configuration is echoed into the output directory of each command.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import Counter
from pathlib import Path

from ..core import DEFAULT_FINDINGS
from ..metrics import (
    GridSpec,
    MissingReference,
    ScanMatchConfig,
    evaluate,
)
from ..model import (
    ModelConfig,
    build_model,
    fit,
    load_checkpoint,
    predict_scanpath,
    save_checkpoint,
)
from ..pipeline import PipelineConfig, convert_sample, split_dataset
from .config import ConfigStack
from .datasets import build_training_records, load_model_image, to_native_frame
from .io import (
    DataError,
    load_relation_matrix,
    load_samples,
    load_scanpaths,
    save_scanpaths,
    write_json,
    _iter_jsonl,
)
from .report import render_comparison_files
from .synth import DEFAULT_RELATIONS, SyntheticSpec, generate_samples, render_images
from .io import write_samples_dir


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line diagnostic, exit code 1
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_convert(args) -> int:
    stack = ConfigStack(args.config)
    pcfg = PipelineConfig(
        max_length=stack.resolve("pipeline", "max_length", args.max_length, 7),
        radius=stack.resolve("pipeline", "radius", args.radius, None, float),
        center_duration=stack.resolve(
            "pipeline", "center_duration", args.center_duration, 0.3
        ),
        containment=stack.resolve("pipeline", "containment", args.containment, "union"),
        constrain_center=stack.resolve(
            "pipeline", "constrain_center", args.constrain_center, False, bool
        ),
    )
    relations = args.relations or str(Path(args.samples) / "relation_matrix.json")
    matrix = load_relation_matrix(relations)
    vocabulary = list(matrix.keys())
    samples = load_samples(args.samples)

    out = _out_dir(args.out)
    scanpaths = []
    per_sample = []
    totals: Counter = Counter()
    for sample in samples:
        result = convert_sample(sample, matrix, pcfg, vocabulary)
        scanpaths.extend(result.scanpaths.values())
        totals.update(result.skips)
        per_sample.append(
            {
                "image_id": sample.image_id,
                "produced": sorted(result.scanpaths.keys()),
                "skips": dict(result.skips),
            }
        )
    save_scanpaths(out / "scanpaths.jsonl", scanpaths)
    write_json(
        out / "conversion_report.json",
        {
            "n_samples": len(samples),
            "n_scanpaths": len(scanpaths),
            "skips": dict(totals),
            "per_sample": per_sample,
        },
    )
    if args.split:
        try:
            ratios = tuple(float(r) for r in args.split.split(","))
        except ValueError:
            raise DataError(f"cannot parse split ratios {args.split!r}")
        if len(ratios) != 3:
            raise DataError("--split needs three comma-separated ratios")
        train, val, test = split_dataset(scanpaths, ratios, seed=args.seed)
        save_scanpaths(out / "scanpaths_train.jsonl", train)
        save_scanpaths(out / "scanpaths_val.jsonl", val)
        save_scanpaths(out / "scanpaths_test.jsonl", test)
    write_json(
        out / "effective_config.json",
        {
            "command": "convert",
            "seed": args.seed,
            "pipeline": {
                "max_length": pcfg.max_length,
                "radius": pcfg.radius,
                "center_duration": pcfg.center_duration,
                "containment": pcfg.containment,
                "constrain_center": pcfg.constrain_center,
            },
        },
    )
    print(
        f"converted {len(samples)} samples into {len(scanpaths)} scanpaths "
        f"(skips: {dict(totals) or 'none'})"
    )
    return 0


def cmd_evaluate(args) -> int:
    stack = ConfigStack(args.config)
    width = stack.resolve("metrics", "width", args.width, 224.0)
    height = stack.resolve("metrics", "height", args.height, 224.0)
    grid = GridSpec(
        stack.resolve("metrics", "grid_cols", args.grid_cols, 12),
        stack.resolve("metrics", "grid_rows", args.grid_rows, 8),
        width,
        height,
    )
    threshold = stack.resolve("metrics", "threshold", args.threshold, None, float)
    if threshold is None:
        threshold = (width**2 + height**2) ** 0.5 / 4.0
    smcfg = ScanMatchConfig(
        grid=grid,
        substitution_threshold=threshold,
        gap_penalty=stack.resolve("metrics", "gap_penalty", args.gap_penalty, 0.0),
        duration_bin=stack.resolve("metrics", "duration_bin", args.duration_bin, 0.05),
    )
    sed_grid = GridSpec(
        stack.resolve("metrics", "sed_cols", args.sed_cols, 5),
        stack.resolve("metrics", "sed_rows", args.sed_rows, 5),
        width,
        height,
    )
    predictions = load_scanpaths(args.predictions)
    references = load_scanpaths(args.references)
    report = evaluate(
        predictions,
        references,
        width,
        height,
        scanmatch_config=smcfg,
        sed_grid=sed_grid,
        stde_k=stack.resolve("metrics", "stde_k", args.stde_k, 3),
        mm_simplify=stack.resolve("metrics", "mm_simplify", args.mm_simplify, False, bool),
    )
    out = _out_dir(args.out)
    report.write_json(out / "report.json")
    report.write_csv(out / "report.csv")
    write_json(
        out / "effective_config.json",
        {"command": "evaluate", "seed": args.seed, "metrics": report.params},
    )
    means = ", ".join(
        f"{k}={v:.4f}" for k, v in report.means.items() if v is not None
    )
    print(f"evaluated {report.n_pairs} pairs: {means}")
    if report.n_unmatched_references:
        print(
            f"coverage: {report.n_references - report.n_unmatched_references}"
            f"/{report.n_references} references have predictions"
        )
    return 0


def _model_config(args, stack: ConfigStack, num_queries: int) -> ModelConfig:
    res = lambda key, cli, default, kind=None: stack.resolve("model", key, cli, default, kind)
    return ModelConfig(
        image_size=res("image_size", args.image_size, 224),
        channels=res("channels", args.channels, 64),
        embed_dim=res("embed_dim", args.embed_dim, 64),
        decoder_layers=res("decoder_layers", args.decoder_layers, 2),
        embed_layers=res("embed_layers", args.embed_layers, 2),
        num_queries=num_queries,
        num_heads=res("num_heads", args.num_heads, 4),
        max_length=res("max_length", args.max_length, 7),
        focal_alpha=res("focal_alpha", args.focal_alpha, 4.0),
        focal_gamma=res("focal_gamma", args.focal_gamma, 2.0),
        heatmap_sigma=res("heatmap_sigma", args.heatmap_sigma, 2.0),
        reference_map=res("reference_map", args.reference_map, "low"),
        indexing_map=res("indexing_map", args.indexing_map, "high"),
        termination_threshold=res(
            "termination_threshold", args.termination_threshold, 0.5
        ),
        learning_rate=res("learning_rate", args.learning_rate, 1e-3),
        weight_decay=res("weight_decay", args.weight_decay, 1e-2),
        seed=args.seed,
        activation=res("activation", args.activation, "relu"),
    )


def cmd_train(args) -> int:
    stack = ConfigStack(args.config)
    if args.relations:
        vocabulary = list(load_relation_matrix(args.relations).keys())
    else:
        vocabulary = list(DEFAULT_FINDINGS)
    mcfg = _model_config(args, stack, len(vocabulary))
    scanpaths = load_scanpaths(args.scanpaths)
    records = build_training_records(scanpaths, args.images, mcfg, vocabulary)
    steps = stack.resolve("model", "steps", args.steps, 500)
    batch_size = stack.resolve("model", "batch_size", args.batch_size, 32)

    out = _out_dir(args.out)
    model = build_model(mcfg)
    checkpoint_path = out / "checkpoint.bin"

    def save(step: int) -> None:
        save_checkpoint(
            checkpoint_path, model, mcfg, args.seed, step, extra={"vocabulary": vocabulary}
        )

    log = fit(
        model,
        records,
        mcfg,
        steps=steps,
        batch_size=batch_size,
        checkpoint_every=args.checkpoint_every,
        checkpoint_fn=args.checkpoint_every and save or None,
    )
    save(log[-1]["step"] if log else 0)
    with open(out / "loss_log.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss_tau", "loss_heatmap", "loss_duration", "loss"])
        for row in log:
            writer.writerow(
                [
                    row["step"],
                    repr(row["loss_tau"]),
                    repr(row["loss_heatmap"]),
                    repr(row["loss_duration"]),
                    repr(row["loss"]),
                ]
            )
    write_json(
        out / "effective_config.json",
        {
            "command": "train",
            "seed": args.seed,
            "steps": steps,
            "batch_size": batch_size,
            "vocabulary": vocabulary,
            "model": mcfg.to_dict(),
        },
    )
    print(
        f"trained {log[-1]['step'] if log else 0} steps on {len(records)} scanpaths; "
        f"final loss {log[-1]['loss']:.6f}" if log else "no training steps ran"
    )
    return 0


def _load_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    for lineno, rec in _iter_jsonl(Path(path)):
        if "image_id" not in rec or "finding" not in rec:
            raise DataError(f"{path}:{lineno}: pair records need image_id and finding")
        pairs.append((str(rec["image_id"]), str(rec["finding"])))
    return pairs


def cmd_predict(args) -> int:
    model, mcfg, manifest = load_checkpoint(args.checkpoint)
    vocabulary = manifest.get("vocabulary", list(DEFAULT_FINDINGS))
    pairs = _load_pairs(args.pairs)
    out = _out_dir(args.out)
    predictions = []
    cache: dict[str, tuple] = {}
    for i, (image_id, finding) in enumerate(pairs):
        if finding not in vocabulary:
            raise DataError(f"finding {finding!r} not in the checkpoint vocabulary")
        if image_id not in cache:
            cache[image_id] = load_model_image(args.images, image_id, mcfg)
        image, width, height = cache[image_id]
        sp = predict_scanpath(
            model,
            image,
            finding,
            mcfg,
            seed=args.seed + i,
            mode=args.mode,
            image_id=image_id,
            vocabulary=vocabulary,
        )
        predictions.append(to_native_frame(sp, width, height, mcfg.image_size))
    save_scanpaths(out / "predictions.jsonl", predictions)
    write_json(
        out / "effective_config.json",
        {
            "command": "predict",
            "seed": args.seed,
            "mode": args.mode,
            "checkpoint": str(args.checkpoint),
            "model": mcfg.to_dict(),
        },
    )
    print(f"predicted {len(predictions)} scanpaths")
    return 0


def cmd_synth(args) -> int:
    stack = ConfigStack(args.config)
    spec = SyntheticSpec(
        n_images=stack.resolve("synth", "n_images", args.images, 20),
        findings_per_image=(
            stack.resolve("synth", "findings_min", args.findings_min, 1),
            stack.resolve("synth", "findings_max", args.findings_max, 3),
        ),
        fixations_per_phase=(
            stack.resolve("synth", "fixations_min", args.fixations_min, 4),
            stack.resolve("synth", "fixations_max", args.fixations_max, 8),
        ),
        noise_radius=stack.resolve("synth", "noise_radius", args.noise_radius, 0.02),
        box_placement=stack.resolve("synth", "placement", args.placement, "fixed"),
        seed=args.seed,
        image_size=stack.resolve("synth", "image_size", args.image_size, 224),
    )
    samples = generate_samples(spec)
    images = render_images(samples, spec.seed) if not args.no_images else None
    out = _out_dir(args.out)
    write_samples_dir(samples, out, matrix=DEFAULT_RELATIONS, images=images)
    write_json(
        out / "effective_config.json",
        {
            "command": "synth",
            "seed": args.seed,
            "synth": {
                "n_images": spec.n_images,
                "findings_per_image": list(spec.findings_per_image),
                "fixations_per_phase": list(spec.fixations_per_phase),
                "noise_radius": spec.noise_radius,
                "box_placement": spec.box_placement,
                "image_size": spec.image_size,
            },
        },
    )
    print(f"generated {len(samples)} synthetic samples under {out}")
    return 0


def cmd_report(args) -> int:
    names = args.names.split(",") if args.names else None
    text = render_comparison_files(args.reports, names)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="gaze2search", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="config file with key=value sections")
        p.add_argument("--seed", type=int, default=0, help="seed for all randomness")

    p = sub.add_parser("convert", help="free-view samples -> search scanpaths")
    common(p)
    p.add_argument("--samples", required=True, help="samples directory")
    p.add_argument("--relations", help="relation matrix JSON (default: in samples dir)")
    p.add_argument("--out", required=True)
    p.add_argument("--max-length", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--center-duration", type=float)
    p.add_argument("--containment", choices=["union", "intersection"])
    p.add_argument("--constrain-center", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--split", help="write train/val/test files, e.g. 0.7,0.1,0.2")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("evaluate", help="score predictions against references")
    common(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=float)
    p.add_argument("--height", type=float)
    p.add_argument("--grid-cols", type=int)
    p.add_argument("--grid-rows", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--gap-penalty", type=float)
    p.add_argument("--duration-bin", type=float)
    p.add_argument("--sed-cols", type=int)
    p.add_argument("--sed-rows", type=int)
    p.add_argument("--stde-k", type=int)
    p.add_argument("--mm-simplify", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_evaluate)

    def model_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--image-size", type=int)
        p.add_argument("--channels", type=int)
        p.add_argument("--embed-dim", type=int)
        p.add_argument("--decoder-layers", type=int)
        p.add_argument("--embed-layers", type=int)
        p.add_argument("--num-heads", type=int)
        p.add_argument("--max-length", type=int)
        p.add_argument("--focal-alpha", type=float)
        p.add_argument("--focal-gamma", type=float)
        p.add_argument("--heatmap-sigma", type=float)
        p.add_argument("--reference-map", choices=["low", "high"])
        p.add_argument("--indexing-map", choices=["low", "high"])
        p.add_argument("--termination-threshold", type=float)
        p.add_argument("--learning-rate", type=float)
        p.add_argument("--weight-decay", type=float)
        p.add_argument("--activation", choices=["relu", "gelu"])

    p = sub.add_parser("train", help="train the scanpath predictor")
    common(p)
    p.add_argument("--scanpaths", required=True)
    p.add_argument("--images", required=True, help="directory of <image_id>.png files")
    p.add_argument("--relations", help="relation matrix JSON fixing the vocabulary order")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--checkpoint-every", type=int)
    model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="generate scanpaths from a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--images", required=True, help="directory of <image_id>.png files")
    p.add_argument("--pairs", required=True, help="JSONL with image_id and finding")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["sample", "argmax"], default="sample")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic samples directory")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--images", type=int, help="number of images")
    p.add_argument("--image-size", type=int)
    p.add_argument("--findings-min", type=int)
    p.add_argument("--findings-max", type=int)
    p.add_argument("--fixations-min", type=int)
    p.add_argument("--fixations-max", type=int)
    p.add_argument("--noise-radius", type=float)
    p.add_argument("--placement", choices=["fixed", "jitter"])
    p.add_argument("--no-images", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="render metric reports side by side")
    common(p)
    p.add_argument("reports", nargs="+", help="metric report JSON files")
    p.add_argument("--names", help="comma-separated method names")
    p.add_argument("--out", help="also write the table to a file")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, MissingReference) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
