"""Three-stage hierarchical recognition: common activity, acoustic
environment, and the standing-activity refinement.

Stage 1 always runs (motion sensors are mandatory). Stage 2 runs whenever
audio is present; environments are an independent output, not a gate.
Stage 3 refines a "standing" verdict into watching TV / sleeping / driving
using the recognized environment, motion features, and GPS displacement.
By default a missing optional sensor skips the stages that need it;
strict=True raises instead, naming the failing stage.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ann, audio as audio_mod, dsp, fusion
from .errors import DataError, ModelLoadError, SensorUnavailableError
from .taxonomy import (
    ADL_LABELS,
    ENV_LABELS,
    LABELS_BY_STAGE,
    STAGE_ADL,
    STAGE_ENV,
    STAGE_STANDING,
    STANDING_LABELS,
)

BUNDLE_FORMAT_VERSION = 1

# Default wiring: the deeper regularised network on normalized data for
# stages 1 and 3, the FNN on raw (non-normalized) features for stage 2.
DEFAULT_STAGE_SETTINGS = {
    STAGE_ADL: {"kind": "DNN", "normalized": True},
    STAGE_ENV: {"kind": "FNN", "normalized": False},
    STAGE_STANDING: {"kind": "DNN", "normalized": True},
}


@dataclass(frozen=True)
class StageModel:
    """One trained stage: network, optional normalizer, and its cell."""

    stage: str
    net: ann.NeuralNet
    normalizer: fusion.Normalizer
    variant: fusion.DatasetVariant

    def __post_init__(self):
        labels = LABELS_BY_STAGE[self.stage]
        if self.net.topology.n_outputs != len(labels):
            raise DataError(
                f"stage {self.stage!r} network has {self.net.topology.n_outputs} outputs, "
                f"need {len(labels)}"
            )


@dataclass(frozen=True)
class PipelineModel:
    """The full three-stage recognizer; immutable once constructed."""

    combination: fusion.Combination
    adl: StageModel
    env: StageModel
    standing: StageModel
    dsp_config: dsp.DspConfig = None
    mfcc_config: audio_mod.MfccConfig = None
    env_input: str = "onehot"  # or "scores"

    def __post_init__(self):
        if self.env_input not in ("onehot", "scores"):
            raise DataError(f"env_input must be 'onehot' or 'scores', got {self.env_input!r}")
        for model in (self.adl, self.env, self.standing):
            width = len(fusion.feature_names(model.stage, self.combination, model.variant))
            if model.net.topology.n_inputs != width:
                raise DataError(
                    f"stage {model.stage!r} network expects {model.net.topology.n_inputs} inputs "
                    f"but the feature layout has {width}"
                )
            if model.normalizer is not None and len(model.normalizer.names) != width:
                raise DataError(f"stage {model.stage!r} normalizer does not match its layout")


@dataclass(frozen=True)
class ActivityResult:
    """Hierarchical output: the common activity always, environment when
    audio was available, standing activity only after a standing verdict."""

    adl: str
    adl_scores: dict
    environment: str = None
    environment_scores: dict = None
    standing: str = None
    standing_scores: dict = None
    combination_id: int = None
    variant_id: int = None

    def to_doc(self):
        return {
            "adl": self.adl,
            "adl_scores": self.adl_scores,
            "environment": self.environment,
            "environment_scores": self.environment_scores,
            "standing": self.standing,
            "standing_scores": self.standing_scores,
            "combination_id": self.combination_id,
            "variant_id": self.variant_id,
        }


def _scores_dict(stage, scores):
    return {label: float(s) for label, s in zip(LABELS_BY_STAGE[stage], scores)}


def _run_stage(window, pipeline, model, env_label=None, env_scores=None):
    vector = fusion.build_feature_vector(
        window,
        model.stage,
        pipeline.combination,
        model.variant,
        env_label=env_label,
        dsp_config=pipeline.dsp_config,
        mfcc_config=pipeline.mfcc_config,
    )
    values = vector.values
    if env_scores is not None and model.stage == STAGE_STANDING:
        # score passthrough replaces the hard one-hot block (first 9 slots)
        values = values.copy()
        values[: len(ENV_LABELS)] = env_scores
    if model.normalizer is not None:
        values = model.normalizer.transform_matrix(values)
    label_idx, scores = ann.predict(model.net, values)
    return LABELS_BY_STAGE[model.stage][label_idx], scores


def recognize_stage1(window, pipeline):
    """Common-activity verdict: (label, scores over the 5 activities)."""
    try:
        return _run_stage(window, pipeline, pipeline.adl)
    except SensorUnavailableError as exc:
        raise SensorUnavailableError(exc.sensor, stage="stage 1") from None


def recognize_stage2(window, pipeline):
    """Environment verdict from audio: (label, scores over 9 environments)."""
    try:
        return _run_stage(window, pipeline, pipeline.env)
    except SensorUnavailableError as exc:
        raise SensorUnavailableError(exc.sensor, stage="stage 2") from None


def recognize_stage3(window, env_label, pipeline, env_scores=None):
    """Standing-activity verdict given the recognized environment."""
    if env_label not in ENV_LABELS:
        raise DataError(f"unknown environment label {env_label!r}")
    try:
        return _run_stage(
            window,
            pipeline,
            pipeline.standing,
            env_label=env_label,
            env_scores=env_scores if pipeline.env_input == "scores" else None,
        )
    except SensorUnavailableError as exc:
        raise SensorUnavailableError(exc.sensor, stage="stage 3") from None


def recognize(window, pipeline, strict=False):
    """Run the full hierarchy on one window.

    Stage 2 requires audio and stage 3 requires a standing verdict, an
    environment, and GPS; with strict=False (the default) a stage whose
    optional sensor is missing is skipped, with strict=True it raises a
    SensorUnavailableError naming the stage. Stage 1's sensors are never
    optional.
    """
    adl_label, adl_scores = recognize_stage1(window, pipeline)

    env_label = env_scores = None
    if window.audio is not None:
        env_label, env_scores = recognize_stage2(window, pipeline)
    elif strict:
        raise SensorUnavailableError("mic", stage="stage 2")

    standing_label = standing_scores = None
    if adl_label == "standing" and env_label is not None:
        if window.gps_track is None:
            if strict:
                raise SensorUnavailableError("gps", stage="stage 3")
        else:
            standing_label, standing_scores = recognize_stage3(
                window, env_label, pipeline, env_scores=env_scores
            )

    return ActivityResult(
        adl=adl_label,
        adl_scores=_scores_dict(STAGE_ADL, adl_scores),
        environment=env_label,
        environment_scores=_scores_dict(STAGE_ENV, env_scores) if env_label is not None else None,
        standing=standing_label,
        standing_scores=(
            _scores_dict(STAGE_STANDING, standing_scores) if standing_label is not None else None
        ),
        combination_id=pipeline.combination.id,
        variant_id=pipeline.standing.variant.id,
    )


# ---------------------------------------------------------------------------
# pipeline bundle IO

_STAGE_FILES = {
    STAGE_ADL: ("stage1_model.json", "stage1_normalizer.json"),
    STAGE_ENV: ("stage2_model.json", "stage2_normalizer.json"),
    STAGE_STANDING: ("stage3_model.json", "stage3_normalizer.json"),
}


def save_pipeline(pipeline, directory):
    """Write the three model documents, normalizers, and a wiring manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stages_doc = {}
    for model in (pipeline.adl, pipeline.env, pipeline.standing):
        model_file, norm_file = _STAGE_FILES[model.stage]
        (directory / model_file).write_text(ann.save_model(model.net), encoding="utf-8")
        if model.normalizer is not None:
            (directory / norm_file).write_text(
                json.dumps(model.normalizer.to_doc()), encoding="utf-8"
            )
        stages_doc[model.stage] = {
            "model": model_file,
            "normalizer": norm_file if model.normalizer is not None else None,
            "kind": model.net.kind,
            "variant": {"id": model.variant.id, "groups": sorted(model.variant.groups)},
        }
    dsp_config = pipeline.dsp_config or dsp.DspConfig()
    mfcc_config = pipeline.mfcc_config or audio_mod.MfccConfig()
    manifest = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "combination": {
            "id": pipeline.combination.id,
            "sensors": sorted(pipeline.combination.sensors),
            "env": pipeline.combination.env,
        },
        "env_input": pipeline.env_input,
        "dsp": {"alpha": dsp_config.alpha, "peak_gap_mode": dsp_config.peak_gap_mode},
        "mfcc": {
            "frame_length": mfcc_config.frame_length,
            "hop": mfcc_config.hop,
            "n_mel_filters": mfcc_config.n_mel_filters,
            "n_coefficients": mfcc_config.n_coefficients,
            "pre_emphasis": mfcc_config.pre_emphasis,
            "fmin": mfcc_config.fmin,
            "fmax": mfcc_config.fmax,
            "log_floor": mfcc_config.log_floor,
        },
        "stages": stages_doc,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def load_pipeline(directory):
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise ModelLoadError(f"pipeline manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelLoadError(f"pipeline manifest is not valid JSON: {exc}") from None
    if manifest.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise ModelLoadError(f"unsupported bundle version {manifest.get('format_version')!r}")
    try:
        combo_doc = manifest["combination"]
        combination = fusion.Combination(
            combo_doc["id"], frozenset(combo_doc["sensors"]), combo_doc.get("env", True)
        )
        models = {}
        for stage in (STAGE_ADL, STAGE_ENV, STAGE_STANDING):
            doc = manifest["stages"][stage]
            net = ann.load_model((directory / doc["model"]).read_text(encoding="utf-8"))
            normalizer = None
            if doc["normalizer"]:
                normalizer = fusion.Normalizer.from_doc(
                    json.loads((directory / doc["normalizer"]).read_text(encoding="utf-8"))
                )
            variant = fusion.DatasetVariant(doc["variant"]["id"], frozenset(doc["variant"]["groups"]))
            models[stage] = StageModel(stage, net, normalizer, variant)
        return PipelineModel(
            combination=combination,
            adl=models[STAGE_ADL],
            env=models[STAGE_ENV],
            standing=models[STAGE_STANDING],
            dsp_config=dsp.DspConfig(**manifest["dsp"]),
            mfcc_config=audio_mod.MfccConfig(**manifest["mfcc"]),
            env_input=manifest.get("env_input", "onehot"),
        )
    except ModelLoadError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelLoadError(f"malformed pipeline bundle: {exc}") from None


# Convenience re-exports of the stage vocabularies.
__all__ = [
    "ADL_LABELS",
    "ENV_LABELS",
    "STANDING_LABELS",
    "ActivityResult",
    "PipelineModel",
    "StageModel",
    "recognize",
    "recognize_stage1",
    "recognize_stage2",
    "recognize_stage3",
    "save_pipeline",
    "load_pipeline",
]
