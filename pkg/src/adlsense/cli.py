"""Command-line interface.

Subcommands: synth (generate a dataset), experiment (run the grid),
train (build a pipeline bundle), classify (window file -> activity
result), report (re-render a saved report). Exit codes: 0 success,
1 validation/configuration error, 2 runtime or divergence error.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import harness, ingest, recognizer
from .errors import (
    AdlSenseError,
    ConfigError,
    DataError,
    DivergenceError,
    ModelLoadError,
    ParseError,
    SensorUnavailableError,
    UnsupportedDeviceError,
    ValidationError,
)
from .taxonomy import STAGE_ADL, STAGE_ENV, STAGE_STANDING, STAGES

_VALIDATION_ERRORS = (
    ConfigError,
    ParseError,
    ValidationError,
    DataError,
    SensorUnavailableError,
    UnsupportedDeviceError,
    ModelLoadError,
)


def _load_config(path):
    return harness.load_config(path) if path else harness.HarnessConfig()


def _apply_overrides(config, args):
    experiment = config.experiment
    if getattr(args, "seed", None) is not None:
        experiment = replace(experiment, seed=args.seed)
    if getattr(args, "iters_scale", None) is not None:
        experiment = replace(experiment, iters_scale=args.iters_scale)
    return replace(config, experiment=experiment)


def _cmd_synth(args):
    config = _load_config(args.config)
    seed = args.seed if args.seed is not None else config.synth_seed
    spec = config.synth_spec(args.stage, count=args.count, seed=seed)
    windows = ingest.synthesize_dataset(spec)
    ingest.save_dataset(windows, args.out)
    print(f"wrote {len(windows)} windows ({spec.stage}, classes={len(spec.classes)}) to {args.out}")
    return 0


def _cmd_experiment(args):
    config = _apply_overrides(_load_config(args.config), args)
    windows = ingest.load_dataset(args.data) if args.data else None
    report = harness.run_experiment(config, windows=windows)
    text = harness.emit_report(report, "text")
    machine = harness.emit_report(report, "json")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text, encoding="utf-8")
        (out / "report.json").write_text(machine, encoding="utf-8")
    sys.stdout.write(machine if args.format == "json" else text)
    return 0


def _cmd_train(args):
    config = _apply_overrides(_load_config(args.config), args)
    datasets = {}
    for stage, path in (
        (STAGE_ADL, args.data_adl),
        (STAGE_ENV, args.data_env),
        (STAGE_STANDING, args.data_standing),
    ):
        if path:
            datasets[stage] = ingest.load_dataset(path)
    pipeline, metrics = harness.train_pipeline(config, datasets)
    recognizer.save_pipeline(pipeline, args.out)
    for stage in (STAGE_ADL, STAGE_ENV, STAGE_STANDING):
        m = metrics[stage]
        print(f"{stage}: test accuracy {100.0 * m['accuracy']:.2f}% ({m['iterations']} iterations)")
    print(f"pipeline bundle written to {args.out}")
    return 0


def _render_result(result, format):
    if format == "json":
        return json.dumps(result.to_doc(), indent=2) + "\n"
    lines = [f"adl: {result.adl}"]
    lines.append("  scores: " + _fmt_scores(result.adl_scores))
    if result.environment is not None:
        lines.append(f"environment: {result.environment}")
        lines.append("  scores: " + _fmt_scores(result.environment_scores))
    else:
        lines.append("environment: - (no audio)")
    if result.standing is not None:
        lines.append(f"standing activity: {result.standing}")
        lines.append("  scores: " + _fmt_scores(result.standing_scores))
    else:
        lines.append("standing activity: -")
    return "\n".join(lines) + "\n"


def _fmt_scores(scores):
    return ", ".join(f"{label}={value:.3f}" for label, value in scores.items())


def _cmd_classify(args):
    pipeline = recognizer.load_pipeline(args.model)
    text = Path(args.window).read_text(encoding="utf-8")
    window = ingest.parse_window(text)
    result = recognizer.recognize(window, pipeline, strict=args.strict)
    sys.stdout.write(_render_result(result, args.format))
    return 0


def _cmd_report(args):
    report = harness.parse_report(Path(args.report).read_text(encoding="utf-8"))
    sys.stdout.write(harness.emit_report(report, args.format))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adlsense",
        description="Multi-sensor activity recognition: synthetic data, experiments, and classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--stage", choices=STAGES, default=STAGE_STANDING)
    p.add_argument("--count", type=int, default=None, help="window count (default from config)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("experiment", help="run the training/evaluation grid")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--data", help="dataset directory (default: synthesize per config)")
    p.add_argument("--out", help="directory for report.txt and report.json")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--iters-scale", dest="iters_scale", type=float, default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("train", help="train the three-stage pipeline and save a bundle")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--data-adl", help="dataset directory for the common-activity stage")
    p.add_argument("--data-env", help="dataset directory for the environment stage")
    p.add_argument("--data-standing", help="dataset directory for the standing stage")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--iters-scale", dest="iters_scale", type=float, default=None)
    p.add_argument("--out", required=True, help="pipeline bundle directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="classify one window file with a trained bundle")
    p.add_argument("--model", required=True, help="pipeline bundle directory")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--strict", action="store_true", help="error on missing optional sensors")
    p.add_argument("window", help="window file to classify")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("report", help="re-render a saved machine-readable report")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("report", help="report.json produced by `experiment`")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AdlSenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
