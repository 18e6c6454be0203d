"""Command line entry point: ``boutmetrics compare|segment|features|synth``.

Exit status is 0 on success. Each error class has its own status (see
``boutmetrics.errors.EXIT_CODES``); argument errors exit with 2.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .config import RunConfig, load_config
from .core import LabelSet, Timebase
from .errors import BoutError, ConfigError
from .features import (
    HeuristicRule,
    classify,
    facing_angle,
    interanimal_distance,
    speed,
)
from .io import (
    AnnotationTableSpec,
    PoseTableSpec,
    ReportDocument,
    annotation_text,
    bout_table_text,
    features_text,
    parse_annotation_table,
    parse_pose_table,
    read_label_column,
    render_report,
    write_text,
)
from .metrics import evaluate
from .postprocess import apply_pipeline
from .synth import Perturbation, SynthConfig, generate, perturb


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def _annotation_spec(path, cfg: RunConfig) -> AnnotationTableSpec:
    a = cfg.annotation
    return AnnotationTableSpec(
        path,
        format=a.format,
        label_column=a.label_column,
        frame_column=a.frame_column,
        fps=cfg.fps,
        label_map=a.label_map,
    )


def _label_set_for(cfg: RunConfig, specs) -> LabelSet:
    ls = cfg.label_set()
    if ls is not None:
        return ls
    names = set()
    for spec in specs:
        names.update(read_label_column(spec))
    return LabelSet.from_names(sorted(names), cfg.background)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--fps", type=float, help="frames per second (default 25)")
    p.add_argument("--out", help="output path (default: standard output)")


def _add_annotation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--background", help="name of the no-behavior label (default 'other')")
    p.add_argument("--label-column", help="label column name (default 'label')")
    p.add_argument("--frame-column", help="optional frame index column")


def _base_config(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.override(
        fps=args.fps,
        background=getattr(args, "background", None),
        **{
            "annotation.label_column": getattr(args, "label_column", None),
            "annotation.frame_column": getattr(args, "frame_column", None),
        },
    )


def cmd_compare(args) -> int:
    cfg = _base_config(args).override(
        **{
            "metrics.tolerance": args.tolerance,
            "metrics.iou_thresholds": args.iou_curve,
            "metrics.overlap_scope": args.overlap_scope,
            "metrics.continuity_weight": args.continuity_weight,
        }
    )
    gt_spec = _annotation_spec(args.gt, cfg)
    pred_spec = _annotation_spec(args.pred, cfg)
    ls = _label_set_for(cfg, [gt_spec, pred_spec])
    tb = Timebase(cfg.fps)
    gt = parse_annotation_table(gt_spec, ls, tb)
    pred = parse_annotation_table(pred_spec, ls, tb)
    m = cfg.metrics
    ev = evaluate(
        pred,
        gt,
        tolerance=m.tolerance,
        overlap_scope=m.overlap_scope,
        continuity_weight=m.continuity_weight,
        iou_thresholds=m.iou_thresholds,
    )
    provenance = {
        "gt": os.fspath(args.gt),
        "pred": os.fspath(args.pred),
        "config_hash": cfg.digest(),
        "tool_version": __version__,
    }
    doc = ReportDocument.from_evaluation(ev, provenance)
    _emit(render_report(doc, args.format), args.out)
    return 0


def cmd_segment(args) -> int:
    cfg = _base_config(args).override(
        **{
            "postprocess.max_gap": args.max_gap,
            "postprocess.min_duration": args.min_dur,
            "postprocess.max_duration": args.max_dur,
            "postprocess.smooth_window": args.window,
        }
    )
    spec = _annotation_spec(args.input, cfg)
    ls = _label_set_for(cfg, [spec])
    series = parse_annotation_table(spec, ls, Timebase(cfg.fps))
    segs = apply_pipeline(series, cfg.postprocess)
    _emit(bout_table_text(segs, cfg.fps), args.out)
    return 0


def cmd_features(args) -> int:
    cfg = _base_config(args).override(
        **{
            "pose.px_per_cm": args.px_per_cm,
            "pose.ref_keypoint": args.ref_keypoint,
            "pose.nose_keypoint": args.nose,
            "pose.tail_keypoint": args.tail,
            "pose.min_likelihood": args.min_likelihood,
        }
    )
    try:
        rules = tuple(HeuristicRule.parse(r) for r in args.rule) if args.rule else cfg.rules
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rules = rules or (HeuristicRule("proximity"),)
    po = cfg.pose

    def load(path, animal):
        return parse_pose_table(
            PoseTableSpec(path, keypoints=po.keypoints, animal_id=animal, fps=cfg.fps, px_per_cm=po.px_per_cm)
        )

    a = load(args.pose_a, "a")
    b = load(args.pose_b, "b")
    dist = interanimal_distance(a, b, po.ref_keypoint, po.min_likelihood)
    feats = [dist]
    spd = None
    if len(a) >= 2:
        spd = speed(a, po.ref_keypoint, po.min_likelihood)
        feats.append(spd)
    if po.nose_keypoint and po.tail_keypoint:
        feats.append(
            facing_angle(a, b, po.nose_keypoint, po.tail_keypoint, po.target_keypoint, po.min_likelihood)
        )
    background = args.background or "none"
    series = classify(rules, dist, spd, background)
    if args.emit_features:
        write_text(args.emit_features, features_text(feats, len(a)))
    _emit(annotation_text(series), args.out)
    return 0


def _parse_perturb(text: str) -> tuple[str, float]:
    kind, _, mag = text.partition(":")
    try:
        return kind, float(mag) if mag else 0.0
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected kind:magnitude, got {text!r}") from None


def cmd_synth(args) -> int:
    try:
        cfg = SynthConfig(
            seed=args.seed,
            length=args.length,
            n_labels=args.labels,
            bout_min=args.bout_min,
            bout_max=args.bout_max,
            density=args.density,
            min_gap=args.min_gap,
            fps=args.fps or 25.0,
        )
        pert = None
        if args.perturb:
            kind, mag = args.perturb
            pert = Perturbation(kind, mag, args.perturb_seed if args.perturb_seed is not None else args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    clean = generate(cfg)
    if not args.pair:
        series = perturb(clean, pert) if pert else clean
        _emit(annotation_text(series), args.out)
        return 0
    if not args.out:
        raise ConfigError("--pair needs --out")
    pert = pert or Perturbation("flicker", 0.0)
    noisy = perturb(clean, pert)
    out_b = args.out_perturbed
    if not out_b:
        root, ext = os.path.splitext(args.out)
        out_b = f"{root}_perturbed{ext or '.csv'}"
    write_text(args.out, annotation_text(clean))
    write_text(out_b, annotation_text(noisy))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boutmetrics",
        description="Bout-level evaluation and post-processing of behavioral annotations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="score a predicted annotation against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tolerance", type=int, help="boundary tolerance in frames for temporal precision")
    p.add_argument("--iou-curve", type=_floats, help="IoU thresholds, e.g. 0.3,0.5,0.7")
    p.add_argument("--overlap-scope", choices=("all", "matched"))
    p.add_argument("--continuity-weight", choices=("bouts", "frames"))
    _add_common(p)
    _add_annotation_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("segment", help="extract and clean up bouts from an annotation")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--max-gap", type=int)
    p.add_argument("--min-dur", type=int)
    p.add_argument("--max-dur", type=int)
    p.add_argument("--window", type=int, help="odd smoothing window in frames")
    _add_common(p)
    _add_annotation_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("features", help="annotate social behavior from two pose tracks")
    p.add_argument("--pose-a", required=True)
    p.add_argument("--pose-b", required=True)
    p.add_argument("--rule", action="append", help="proximity[:cm] or approach:cm:cm_per_s (repeatable)")
    p.add_argument("--px-per-cm", type=float)
    p.add_argument("--ref-keypoint", help="keypoint for distance and speed (default: centroid)")
    p.add_argument("--nose", help="nose keypoint, enables the facing angle feature")
    p.add_argument("--tail", help="tail keypoint, enables the facing angle feature")
    p.add_argument("--min-likelihood", type=float)
    p.add_argument("--background", help="background label name (default 'none')")
    p.add_argument("--emit-features", metavar="PATH", help="also write the raw feature series here")
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("synth", help="generate synthetic annotations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=int, default=1000)
    p.add_argument("--labels", type=int, default=1)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--bout-min", type=int, default=5)
    p.add_argument("--bout-max", type=int, default=20)
    p.add_argument("--min-gap", type=int, default=1)
    p.add_argument("--pair", action="store_true", help="write a clean and a perturbed file")
    p.add_argument("--perturb", type=_parse_perturb, help="kind:magnitude, e.g. flicker:0.5")
    p.add_argument("--perturb-seed", type=int)
    p.add_argument("--out-perturbed")
    p.add_argument("--fps", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BoutError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
