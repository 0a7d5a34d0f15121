"""Experiment runner: dataset splitting, the (combination x variant x model
kind x normalization) training grid, evaluation, and report emission.

Reports come in two shapes: a text rendering with a
"Dataset (Combination) | Iterations | Accuracy" grid plus a per-stage
summary, and a schema-versioned JSON document. The JSON form is canonical
and excludes wall-clock timings so that two runs with the same config,
seed, and dataset digest are byte-identical.
"""

import configparser
import hashlib
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import ann, fusion, ingest, recognizer
from .audio import MfccConfig
from .dsp import DspConfig
from .errors import ConfigError, DataError, DivergenceError, ParseError
from .taxonomy import LABELS_BY_STAGE, STAGE_ADL, STAGE_ENV, STAGE_STANDING, STAGES

REPORT_SCHEMA_VERSION = 1
CONFIG_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid axes a run covers plus the shared training settings.

    max_iterations is the full-scale budget; iters_scale shrinks it for
    desk-scale runs (default 1e-2, i.e. 1e4 effective iterations).
    l2_lambda of None lets each model kind use its own default.
    feature_scales multiplies named feature columns before any
    normalization decision, which is how the normalized vs raw comparison
    is driven.
    """

    stage: str = STAGE_STANDING
    combination_ids: tuple = (1, 2, 3)
    variant_ids: tuple = (1, 2, 3, 4, 5)
    kinds: tuple = ("MLP", "FNN", "DNN")
    normalization: str = "both"  # "on" | "off" | "both"
    split_ratio: float = 0.7
    split_seed: int = 7
    seed: int = 7
    max_iterations: int = 1_000_000
    iters_scale: float = 0.01
    learning_rate: float = 0.1
    target_error: float = 1e-3
    l2_lambda: float = None
    feature_scales: dict = field(default_factory=dict)
    combinations: dict = None
    variants: dict = None
    dsp_config: DspConfig = field(default_factory=DspConfig)
    mfcc_config: MfccConfig = field(default_factory=MfccConfig)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ConfigError(f"unknown stage {self.stage!r}")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split ratio must be in (0, 1), got {self.split_ratio}")
        if self.normalization not in ("on", "off", "both"):
            raise ConfigError(f"normalization must be on/off/both, got {self.normalization!r}")
        if not self.combination_ids or not self.variant_ids or not self.kinds:
            raise ConfigError("grid axes must be non-empty")
        for kind in self.kinds:
            if kind not in ann.MODEL_KINDS:
                raise ConfigError(f"unknown model kind {kind!r}")
        if self.iters_scale <= 0:
            raise ConfigError(f"iters_scale must be positive, got {self.iters_scale}")
        if self.combinations is None:
            object.__setattr__(self, "combinations", fusion.default_combinations())
        if self.variants is None:
            object.__setattr__(self, "variants", fusion.default_variants())
        for cid in self.combination_ids:
            if cid not in self.combinations:
                raise ConfigError(f"combination {cid} is not defined")
        for vid in self.variant_ids:
            if vid not in self.variants:
                raise ConfigError(f"variant {vid} is not defined")

    @property
    def effective_iterations(self):
        return max(1, int(round(self.max_iterations * self.iters_scale)))

    def norm_settings(self):
        return {"on": (True,), "off": (False,), "both": (False, True)}[self.normalization]


@dataclass(frozen=True)
class PipelineSettings:
    """Wiring for the three-stage recognizer built by `train`.

    learning_rates entries of None inherit the experiment learning rate.
    The environment stage trains on raw (non-normalized) cepstral features
    whose magnitudes span hundreds, so it defaults to a lower rate.
    """

    combination_id: int = 3
    stage1_variant_id: int = 3
    stage2_variant_id: int = 3
    stage3_variant_id: int = 5
    kinds: dict = field(
        default_factory=lambda: {s: d["kind"] for s, d in recognizer.DEFAULT_STAGE_SETTINGS.items()}
    )
    normalized: dict = field(
        default_factory=lambda: {
            s: d["normalized"] for s, d in recognizer.DEFAULT_STAGE_SETTINGS.items()
        }
    )
    learning_rates: dict = field(
        default_factory=lambda: {STAGE_ADL: None, STAGE_ENV: 0.05, STAGE_STANDING: None}
    )
    env_input: str = "onehot"


@dataclass(frozen=True)
class HarnessConfig:
    """Everything the CLI needs: dataset source, grid, and pipeline wiring.

    The dataset source is either dataset_dir (a directory of window files
    with a manifest) or, when that is None, the synthetic spec below.
    """

    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    pipeline: PipelineSettings = field(default_factory=PipelineSettings)
    dataset_dir: str = None
    synth_seed: int = 42
    duration: float = ingest.DEFAULT_DURATION
    motion_rate: float = ingest.DEFAULT_MOTION_RATE
    audio_rate: float = ingest.DEFAULT_AUDIO_RATE
    gps_rate: float = ingest.DEFAULT_GPS_RATE
    synth_counts: dict = field(
        default_factory=lambda: {STAGE_ADL: 500, STAGE_ENV: 360, STAGE_STANDING: 6000}
    )
    synth_classes: dict = field(default_factory=dict)
    synth_sensors: dict = field(
        default_factory=lambda: {STAGE_STANDING: ("accel", "magnet", "gyro", "gps")}
    )

    def synth_spec(self, stage, count=None, seed=None):
        classes = self.synth_classes.get(stage) or LABELS_BY_STAGE[stage]
        sensors = self.synth_sensors.get(stage) or ("accel", "magnet", "gyro", "audio", "gps")
        return ingest.SynthSpec(
            stage=stage,
            classes=tuple(classes),
            count=count if count is not None else self.synth_counts[stage],
            seed=seed if seed is not None else self.synth_seed,
            duration=self.duration,
            motion_rate=self.motion_rate,
            audio_rate=self.audio_rate,
            gps_rate=self.gps_rate,
            sensors=tuple(sensors),
        )


def _get(parser, section, key, cast, default):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        try:
            if cast is bool:
                return parser.getboolean(section, key)
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    return default


def _csv(raw, cast=str):
    return tuple(cast(part.strip()) for part in raw.split(",") if part.strip())


def load_config(path):
    """Read the INI-style config file; omitted keys keep their defaults."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    version = _get(parser, "meta", "schema_version", int, CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {version}")

    dsp_config = DspConfig(
        alpha=_get(parser, "dsp", "alpha", float, 0.1),
        peak_gap_mode=_get(parser, "dsp", "peak_gap_mode", str, "time"),
    )
    mfcc_config = MfccConfig(
        frame_length=_get(parser, "audio", "frame_length", float, 0.025),
        hop=_get(parser, "audio", "hop", float, 0.010),
        n_mel_filters=_get(parser, "audio", "n_mel_filters", int, 26),
        n_coefficients=_get(parser, "audio", "n_coefficients", int, 26),
        pre_emphasis=_get(parser, "audio", "pre_emphasis", float, 0.97),
        fmin=_get(parser, "audio", "fmin", float, 0.0),
        fmax=_get(parser, "audio", "fmax", float, None),
        log_floor=_get(parser, "audio", "log_floor", float, 1e-10),
    )

    combinations = None
    if parser.has_section("fusion.combinations"):
        combinations = {}
        for key, raw in parser.items("fusion.combinations"):
            cid = int(key)
            combinations[cid] = fusion.Combination(cid, frozenset(_csv(raw)))
    variants = None
    if parser.has_section("fusion.variants"):
        variants = {}
        for key, raw in parser.items("fusion.variants"):
            vid = int(key)
            variants[vid] = fusion.DatasetVariant(vid, frozenset(_csv(raw)))

    feature_scales = {}
    raw_scales = _get(parser, "experiment", "feature_scales", str, "")
    for item in _csv(raw_scales):
        if ":" not in item:
            raise ConfigError(f"feature_scales entries are name:factor, got {item!r}")
        name, factor = item.split(":", 1)
        feature_scales[name.strip()] = float(factor)

    experiment = ExperimentConfig(
        stage=_get(parser, "grid", "stage", str, STAGE_STANDING),
        combination_ids=_csv(_get(parser, "grid", "combinations", str, "1,2,3"), int),
        variant_ids=_csv(_get(parser, "grid", "variants", str, "1,2,3,4,5"), int),
        kinds=_csv(_get(parser, "grid", "kinds", str, "MLP,FNN,DNN")),
        normalization=_get(parser, "grid", "normalization", str, "both"),
        split_ratio=_get(parser, "split", "ratio", float, 0.7),
        split_seed=_get(parser, "split", "seed", int, 7),
        seed=_get(parser, "train", "seed", int, 7),
        max_iterations=_get(parser, "train", "max_iterations", int, 1_000_000),
        iters_scale=_get(parser, "train", "iters_scale", float, 0.01),
        learning_rate=_get(parser, "train", "learning_rate", float, 0.1),
        target_error=_get(parser, "train", "target_error", float, 1e-3),
        l2_lambda=_get(parser, "train", "l2_lambda", float, None),
        feature_scales=feature_scales,
        combinations=combinations,
        variants=variants,
        dsp_config=dsp_config,
        mfcc_config=mfcc_config,
    )

    kinds = {s: d["kind"] for s, d in recognizer.DEFAULT_STAGE_SETTINGS.items()}
    normalized = {s: d["normalized"] for s, d in recognizer.DEFAULT_STAGE_SETTINGS.items()}
    kinds[STAGE_ADL] = _get(parser, "pipeline", "stage1_kind", str, kinds[STAGE_ADL])
    kinds[STAGE_ENV] = _get(parser, "pipeline", "stage2_kind", str, kinds[STAGE_ENV])
    kinds[STAGE_STANDING] = _get(parser, "pipeline", "stage3_kind", str, kinds[STAGE_STANDING])
    normalized[STAGE_ADL] = _get(parser, "pipeline", "stage1_normalized", bool, normalized[STAGE_ADL])
    normalized[STAGE_ENV] = _get(parser, "pipeline", "stage2_normalized", bool, normalized[STAGE_ENV])
    normalized[STAGE_STANDING] = _get(
        parser, "pipeline", "stage3_normalized", bool, normalized[STAGE_STANDING]
    )
    learning_rates = {
        STAGE_ADL: _get(parser, "pipeline", "stage1_learning_rate", float, None),
        STAGE_ENV: _get(parser, "pipeline", "stage2_learning_rate", float, 0.05),
        STAGE_STANDING: _get(parser, "pipeline", "stage3_learning_rate", float, None),
    }
    pipeline = PipelineSettings(
        combination_id=_get(parser, "pipeline", "combination", int, 3),
        stage1_variant_id=_get(parser, "pipeline", "stage1_variant", int, 3),
        stage2_variant_id=_get(parser, "pipeline", "stage2_variant", int, 3),
        stage3_variant_id=_get(parser, "pipeline", "stage3_variant", int, 5),
        kinds=kinds,
        normalized=normalized,
        learning_rates=learning_rates,
        env_input=_get(parser, "pipeline", "env_input", str, "onehot"),
    )

    counts = {
        STAGE_ADL: _get(parser, "synth.adl", "count", int, 500),
        STAGE_ENV: _get(parser, "synth.env", "count", int, 360),
        STAGE_STANDING: _get(parser, "synth.standing", "count", int, 6000),
    }
    classes = {}
    sensors = {STAGE_STANDING: ("accel", "magnet", "gyro", "gps")}
    for stage, section in ((STAGE_ADL, "synth.adl"), (STAGE_ENV, "synth.env"), (STAGE_STANDING, "synth.standing")):
        if parser.has_option(section, "classes"):
            classes[stage] = _csv(parser.get(section, "classes"))
        if parser.has_option(section, "sensors"):
            sensors[stage] = _csv(parser.get(section, "sensors"))

    return HarnessConfig(
        experiment=experiment,
        pipeline=pipeline,
        dataset_dir=_get(parser, "experiment", "dataset_dir", str, None),
        synth_seed=_get(parser, "synth", "seed", int, 42),
        duration=_get(parser, "synth", "duration", float, ingest.DEFAULT_DURATION),
        motion_rate=_get(parser, "synth", "motion_rate", float, ingest.DEFAULT_MOTION_RATE),
        audio_rate=_get(parser, "synth", "audio_rate", float, ingest.DEFAULT_AUDIO_RATE),
        gps_rate=_get(parser, "synth", "gps_rate", float, ingest.DEFAULT_GPS_RATE),
        synth_counts=counts,
        synth_classes=classes,
        synth_sensors=sensors,
    )


# ---------------------------------------------------------------------------
# splitting and evaluation


def split_dataset(windows, ratio, seed, stage):
    """Stratified, seeded train/test split on the stage's labels.

    Deterministic per seed; train and test are disjoint and their union is
    the input. Every class needs at least two windows so both sides get one.
    """
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must be in (0, 1), got {ratio}")
    by_class = {}
    for i, window in enumerate(windows):
        label = window.labels.get(stage)
        if label is None:
            raise DataError(f"window {window.window_id!r} has no {stage!r} label")
        by_class.setdefault(label, []).append(i)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for label in sorted(by_class):
        idx = by_class[label]
        if len(idx) < 2:
            raise ConfigError(f"class {label!r} has {len(idx)} windows; need at least 2 to split")
        n_train = int(ratio * len(idx) + 0.5)
        n_train = min(max(n_train, 1), len(idx) - 1)
        order = rng.permutation(len(idx))
        train_idx += [idx[j] for j in order[:n_train]]
        test_idx += [idx[j] for j in order[n_train:]]
    train_idx.sort()
    test_idx.sort()
    return [windows[i] for i in train_idx], [windows[i] for i in test_idx]


def confusion_matrix(y_true, y_pred, n_classes):
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        conf[t, p] += 1
    return conf


def evaluate(net, x, y):
    """(accuracy, confusion) of a trained net on a test matrix.

    confusion[i][j] counts true class i predicted j; accuracy is
    trace / total.
    """
    y = np.asarray(y, dtype=np.intp)
    if y.shape[0] == 0:
        raise DataError("test set is empty")
    pred, _ = ann.predict_batch(net, x)
    conf = confusion_matrix(y, pred, net.topology.n_outputs)
    return float(np.trace(conf) / conf.sum()), conf


# ---------------------------------------------------------------------------
# the experiment grid


@dataclass
class CellResult:
    stage: str
    combination_id: int
    variant_id: int
    kind: str
    normalized: bool
    accuracy: float = None  # fraction in [0, 1]; None for failed cells
    confusion: list = None
    iterations: int = None
    final_loss: float = None
    wall_time_s: float = None  # text report only; excluded from the JSON form
    failed: bool = False
    error: str = None

    def to_doc(self):
        return {
            "stage": self.stage,
            "combination": self.combination_id,
            "variant": self.variant_id,
            "kind": self.kind,
            "normalized": self.normalized,
            "accuracy": self.accuracy,
            "confusion": self.confusion,
            "iterations": self.iterations,
            "final_loss": self.final_loss,
            "failed": self.failed,
            "error": self.error,
        }

    @classmethod
    def from_doc(cls, doc):
        return cls(
            stage=doc["stage"],
            combination_id=doc["combination"],
            variant_id=doc["variant"],
            kind=doc["kind"],
            normalized=doc["normalized"],
            accuracy=doc["accuracy"],
            confusion=doc["confusion"],
            iterations=doc["iterations"],
            final_loss=doc["final_loss"],
            failed=doc["failed"],
            error=doc["error"],
        )


@dataclass
class ExperimentReport:
    seed: int
    dataset_digest: str
    cells: list

    def best_by_stage(self):
        best = {}
        for cell in self.cells:
            if cell.failed or cell.accuracy is None:
                continue
            current = best.get(cell.stage)
            if current is None or cell.accuracy > current.accuracy:
                best[cell.stage] = cell
        return best

    def overall_average(self):
        best = self.best_by_stage()
        if not best:
            return None
        return float(np.mean([cell.accuracy for cell in best.values()]))

    def to_doc(self):
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "seed": self.seed,
            "dataset_digest": self.dataset_digest,
            "cells": [cell.to_doc() for cell in self.cells],
        }

    @classmethod
    def from_doc(cls, doc):
        if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ParseError(f"unsupported report schema_version {doc.get('schema_version')!r}")
        return cls(
            seed=doc["seed"],
            dataset_digest=doc["dataset_digest"],
            cells=[CellResult.from_doc(c) for c in doc["cells"]],
        )


def dataset_digest(windows):
    h = hashlib.sha256()
    for window in windows:
        h.update(ingest.serialize_window(window).encode())
    return h.hexdigest()[:16]


def _cell_seed(base_seed, index):
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _build_matrices(windows, stage, combination, variant, config, cache):
    vectors = []
    labels = []
    vocab = LABELS_BY_STAGE[stage]
    for window in windows:
        label = window.labels.get(stage)
        if label not in vocab:
            raise DataError(f"window {window.window_id!r} lacks a valid {stage!r} label")
        vectors.append(
            fusion.build_feature_vector(
                window,
                stage,
                combination,
                variant,
                env_label=window.labels.get(STAGE_ENV),
                dsp_config=config.dsp_config,
                mfcc_config=config.mfcc_config,
                cache=cache,
            )
        )
        labels.append(vocab.index(label))
    x, names = fusion.vectors_to_matrix(vectors)
    for name, factor in config.feature_scales.items():
        if name in names:
            x[:, names.index(name)] *= factor
    return x, np.asarray(labels, dtype=np.intp), names


def run_experiment_on_split(config, train_windows, test_windows, return_models=False):
    """Train and evaluate every grid cell on a fixed split.

    Normalizers are fit on the training matrix only. A diverging cell is
    recorded as failed with its diagnostic and the run continues. Models
    are deterministic per (seed, cell index).
    """
    digest = dataset_digest(list(train_windows) + list(test_windows))
    cache = {}
    matrices = {}
    for cid in config.combination_ids:
        for vid in config.variant_ids:
            combo = config.combinations[cid]
            variant = config.variants[vid]
            xtr, ytr, names = _build_matrices(train_windows, config.stage, combo, variant, config, cache)
            xte, yte, _ = _build_matrices(test_windows, config.stage, combo, variant, config, cache)
            matrices[(cid, vid)] = (xtr, ytr, xte, yte, names)

    vocab = LABELS_BY_STAGE[config.stage]
    cells = []
    models = {}
    index = 0
    for normalized in config.norm_settings():
        for kind in config.kinds:
            for cid in config.combination_ids:
                for vid in config.variant_ids:
                    xtr, ytr, xte, yte, _ = matrices[(cid, vid)]
                    cell = CellResult(
                        stage=config.stage,
                        combination_id=cid,
                        variant_id=vid,
                        kind=kind,
                        normalized=normalized,
                    )
                    seed = _cell_seed(config.seed, index)
                    index += 1
                    started = time.perf_counter()
                    try:
                        net, history, xte_used = _train_cell(
                            config, kind, xtr, ytr, xte, normalized, seed, len(vocab)
                        )
                        accuracy, conf = evaluate(net, xte_used, yte)
                        cell.accuracy = accuracy
                        cell.confusion = conf.tolist()
                        cell.iterations = len(history)
                        cell.final_loss = float(history[-1])
                        models[(config.stage, cid, vid, kind, normalized)] = net
                    except DivergenceError as exc:
                        cell.failed = True
                        cell.error = str(exc)
                    cell.wall_time_s = time.perf_counter() - started
                    cells.append(cell)

    report = ExperimentReport(seed=config.seed, dataset_digest=digest, cells=cells)
    return (report, models) if return_models else report


def _train_cell(config, kind, xtr, ytr, xte, normalized, seed, n_classes):
    if normalized:
        norm = fusion.Normalizer(
            names=tuple(str(i) for i in range(xtr.shape[1])),
            mins=xtr.min(axis=0),
            maxs=xtr.max(axis=0),
        )
        xtr = norm.transform_matrix(xtr)
        xte = norm.transform_matrix(xte)
    kind_preset = ann.MODEL_KINDS[kind]
    l2 = config.l2_lambda if config.l2_lambda is not None else kind_preset.default_l2
    train_config = ann.TrainConfig(
        max_iterations=config.effective_iterations,
        learning_rate=config.learning_rate,
        l2_lambda=l2,
        target_error=config.target_error,
        seed=seed,
    )
    topology = kind_preset.topology_for(xtr.shape[1], n_classes)
    net = ann.init_network(topology, seed, kind)
    net, history = ann.train(net, list(zip(xtr, ytr)), train_config)
    return net, history, xte


def run_experiment(harness_config, windows=None, return_models=False):
    """Resolve the dataset (given windows, a directory, or the synthetic
    spec), split it, and run the grid."""
    config = harness_config.experiment
    if windows is None:
        if harness_config.dataset_dir is not None:
            windows = ingest.load_dataset(harness_config.dataset_dir)
        else:
            windows = ingest.synthesize_dataset(harness_config.synth_spec(config.stage))
    train_windows, test_windows = split_dataset(
        windows, config.split_ratio, config.split_seed, config.stage
    )
    return run_experiment_on_split(config, train_windows, test_windows, return_models=return_models)


# ---------------------------------------------------------------------------
# report emission


def emit_report(report, format="text"):
    """Render a report: "text" for humans, "json" as the stable document."""
    if format == "json":
        return json.dumps(report.to_doc(), indent=2, sort_keys=True) + "\n"
    if format != "text":
        raise ConfigError(f"unknown report format {format!r}")

    lines = []
    lines.append(f"seed: {report.seed}    dataset: {report.dataset_digest}")
    lines.append("")
    header = (
        f"{'Normalization':<16}{'Framework':<11}{'Dataset (Combination)':<23}"
        f"{'Iterations':>11}  {'Accuracy (%)':>12}  {'Wall (s)':>9}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    for cell in report.cells:
        norm = "normalized" if cell.normalized else "non-normalized"
        ds = f"{cell.variant_id} ({cell.combination_id})"
        if cell.failed:
            acc = "FAILED"
            iters = "-"
        else:
            acc = f"{100.0 * cell.accuracy:.2f}"
            iters = str(cell.iterations)
        wall = f"{cell.wall_time_s:.2f}" if cell.wall_time_s is not None else "-"
        lines.append(f"{norm:<16}{cell.kind:<11}{ds:<23}{iters:>11}  {acc:>12}  {wall:>9}")
        if cell.failed:
            lines.append(f"    diagnostic: {cell.error}")
    lines.append("")
    lines.append("Stage summary")
    best = report.best_by_stage()
    for stage in sorted(best):
        cell = best[stage]
        norm = "normalized" if cell.normalized else "non-normalized"
        lines.append(
            f"  {stage:<10} best: {cell.kind}, dataset {cell.variant_id} ({cell.combination_id}), "
            f"{norm}: {100.0 * cell.accuracy:.2f}%"
        )
    avg = report.overall_average()
    if avg is not None:
        lines.append(f"  average accuracy over stage bests: {100.0 * avg:.2f}%")
    return "\n".join(lines) + "\n"


def parse_report(text):
    """Parse the JSON report form back into an ExperimentReport."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"report is not valid JSON: {exc}") from None
    return ExperimentReport.from_doc(doc)


# ---------------------------------------------------------------------------
# pipeline training for the CLI


def train_pipeline(harness_config, datasets=None):
    """Train the three stage models and assemble a PipelineModel.

    datasets maps stage name to a window list; missing stages are
    synthesized from the config. Returns (pipeline, per-stage test
    accuracy).
    """
    settings = harness_config.pipeline
    config = harness_config.experiment
    combination = config.combinations[settings.combination_id]
    variant_ids = {
        STAGE_ADL: settings.stage1_variant_id,
        STAGE_ENV: settings.stage2_variant_id,
        STAGE_STANDING: settings.stage3_variant_id,
    }
    datasets = dict(datasets or {})
    stage_models = {}
    metrics = {}
    cache = {}
    for i, stage in enumerate((STAGE_ADL, STAGE_ENV, STAGE_STANDING)):
        windows = datasets.get(stage)
        if windows is None:
            windows = ingest.synthesize_dataset(harness_config.synth_spec(stage))
        train_windows, test_windows = split_dataset(
            windows, config.split_ratio, config.split_seed, stage
        )
        variant = config.variants[variant_ids[stage]]
        stage_config = replace(config, stage=stage)
        xtr, ytr, names = _build_matrices(train_windows, stage, combination, variant, stage_config, cache)
        xte, yte, _ = _build_matrices(test_windows, stage, combination, variant, stage_config, cache)
        normalizer = None
        if settings.normalized[stage]:
            normalizer = fusion.Normalizer(names=names, mins=xtr.min(axis=0), maxs=xtr.max(axis=0))
            xtr = normalizer.transform_matrix(xtr)
            xte = normalizer.transform_matrix(xte)
        kind = settings.kinds[stage]
        preset = ann.MODEL_KINDS[kind]
        l2 = config.l2_lambda if config.l2_lambda is not None else preset.default_l2
        lr = settings.learning_rates.get(stage) or config.learning_rate
        seed = _cell_seed(config.seed, 1000 + i)
        vocab = LABELS_BY_STAGE[stage]
        net = ann.init_network(preset.topology_for(xtr.shape[1], len(vocab)), seed, kind)
        net, history = ann.train(
            net,
            list(zip(xtr, ytr)),
            ann.TrainConfig(
                max_iterations=config.effective_iterations,
                learning_rate=lr,
                l2_lambda=l2,
                target_error=config.target_error,
                seed=seed,
            ),
        )
        accuracy, _ = evaluate(net, xte, yte)
        metrics[stage] = {"accuracy": accuracy, "iterations": len(history)}
        stage_models[stage] = recognizer.StageModel(stage, net, normalizer, variant)

    pipeline = recognizer.PipelineModel(
        combination=combination,
        adl=stage_models[STAGE_ADL],
        env=stage_models[STAGE_ENV],
        standing=stage_models[STAGE_STANDING],
        dsp_config=config.dsp_config,
        mfcc_config=config.mfcc_config,
        env_input=settings.env_input,
    )
    return pipeline, metrics
