"""Feature-vector assembly per recognition stage, sensor combination, and
dataset variant, plus min-max normalization.

Vector layout is a pure function of (stage, combination, variant): an
environment one-hot block first (standing stage only), then motion
features per included sensor in accel/magnet/gyro order, then the GPS
distance, then audio features (environment stage only). Variants mask
feature groups; the five bundled variants nest from peak gaps alone up to
the full set with environment and distance.
"""

from dataclasses import dataclass

import numpy as np

from . import audio as audio_mod
from . import dsp, geo
from .errors import ConfigError, DataError, SensorUnavailableError, UnsupportedDeviceError
from .taxonomy import ENV_LABELS, STAGE_ADL, STAGE_ENV, STAGE_STANDING, STAGES

FEATURE_GROUPS = ("peak_gaps", "peak_stats", "raw_stats", "env_onehot", "distance")

_GROUP_FIELDS = {
    "peak_gaps": dsp.PEAK_GAP_FIELDS,
    "peak_stats": dsp.PEAK_STAT_FIELDS,
    "raw_stats": dsp.RAW_STAT_FIELDS,
}


@dataclass(frozen=True)
class Combination:
    """A cumulative sensor set; ids 1-3 are the standard ladder
    {accel, gps} -> +magnet -> +gyro, each with the recognized environment
    as an extra input to the standing stage."""

    id: int
    sensors: frozenset
    env: bool = True

    def __post_init__(self):
        unknown = self.sensors - {"accel", "magnet", "gyro", "gps"}
        if unknown:
            raise ConfigError(f"combination {self.id}: unknown sensors {sorted(unknown)}")
        if "accel" not in self.sensors:
            raise ConfigError(f"combination {self.id}: accel is mandatory")

    @property
    def motion_sensors(self):
        return tuple(s for s in dsp.MOTION_SENSORS if s in self.sensors)


@dataclass(frozen=True)
class DatasetVariant:
    """A named subset of feature groups fed to the classifiers."""

    id: int
    groups: frozenset

    def __post_init__(self):
        unknown = self.groups - set(FEATURE_GROUPS)
        if unknown:
            raise ConfigError(f"variant {self.id}: unknown feature groups {sorted(unknown)}")
        if not self.groups:
            raise ConfigError(f"variant {self.id} selects no features")


def default_combinations():
    return {
        1: Combination(1, frozenset({"accel", "gps"})),
        2: Combination(2, frozenset({"accel", "gps", "magnet"})),
        3: Combination(3, frozenset({"accel", "gps", "magnet", "gyro"})),
    }


def default_variants():
    nested = [
        ("peak_gaps",),
        ("peak_gaps", "peak_stats"),
        ("peak_gaps", "peak_stats", "raw_stats"),
        ("peak_gaps", "peak_stats", "raw_stats", "env_onehot"),
        ("peak_gaps", "peak_stats", "raw_stats", "env_onehot", "distance"),
    ]
    return {i + 1: DatasetVariant(i + 1, frozenset(groups)) for i, groups in enumerate(nested)}


@dataclass(frozen=True)
class FeatureVector:
    """Named, ordered numeric features for one stage and one window."""

    stage: str
    names: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if len(self.names) != self.values.shape[0]:
            raise DataError("feature names and values differ in length")

    def __len__(self):
        return self.values.shape[0]

    def serialize(self):
        """Canonical text form; equal inputs serialize byte-identically."""
        vals = ",".join(repr(float(v)) for v in self.values)
        return f"{self.stage}\n{','.join(self.names)}\n{vals}\n"


def _required_sensors(stage, combination):
    if stage == STAGE_ADL:
        return combination.motion_sensors
    if stage == STAGE_ENV:
        return ("mic",)
    if stage == STAGE_STANDING:
        return combination.motion_sensors + (("gps",) if "gps" in combination.sensors else ())
    raise DataError(f"unknown stage {stage!r}")


def feature_names(stage, combination, variant):
    """The vector layout for a (stage, combination, variant) cell."""
    if stage not in STAGES:
        raise DataError(f"unknown stage {stage!r}")
    names = []
    if stage == STAGE_STANDING and combination.env and "env_onehot" in variant.groups:
        names += [f"env_is_{label}" for label in ENV_LABELS]
    if stage in (STAGE_ADL, STAGE_STANDING):
        for sensor in combination.motion_sensors:
            for group in ("peak_gaps", "peak_stats", "raw_stats"):
                if group in variant.groups:
                    names += [f"{sensor}_{f}" for f in _GROUP_FIELDS[group]]
    if stage == STAGE_STANDING and "gps" in combination.sensors and "distance" in variant.groups:
        names.append("gps_distance")
    if stage == STAGE_ENV:
        names += list(audio_mod.AUDIO_FEATURE_FIELDS)
    if not names:
        raise ConfigError(
            f"variant {variant.id} leaves stage {stage!r} with no features for combination {combination.id}"
        )
    return tuple(names)


def build_feature_vector(
    window,
    stage,
    combination,
    variant,
    env_label=None,
    dsp_config=None,
    mfcc_config=None,
    cache=None,
):
    """Assemble the FeatureVector of one window for one grid cell.

    env_label supplies the "environment recognized" input of the standing
    stage (ground truth in the harness, the stage-2 prediction in the live
    pipeline). ``cache`` is an optional dict reused across calls to avoid
    recomputing per-sensor features for the same window.
    """
    names = feature_names(stage, combination, variant)
    for sensor in _required_sensors(stage, combination):
        if not window.has(sensor):
            raise SensorUnavailableError(sensor)

    values = []
    if stage == STAGE_STANDING and combination.env and "env_onehot" in variant.groups:
        if env_label is None:
            raise DataError("standing-stage vector needs the recognized environment label")
        if env_label not in ENV_LABELS:
            raise DataError(f"unknown environment label {env_label!r}")
        onehot = [0.0] * len(ENV_LABELS)
        onehot[ENV_LABELS.index(env_label)] = 1.0
        values += onehot

    if stage in (STAGE_ADL, STAGE_STANDING):
        for sensor in combination.motion_sensors:
            feats = _cached(cache, (window.window_id, sensor, dsp_config))
            if feats is None:
                feats = dsp.motion_features(window, sensor, dsp_config).as_dict()
                _store(cache, (window.window_id, sensor, dsp_config), feats)
            for group in ("peak_gaps", "peak_stats", "raw_stats"):
                if group in variant.groups:
                    values += [feats[f] for f in _GROUP_FIELDS[group]]

    if stage == STAGE_STANDING and "gps" in combination.sensors and "distance" in variant.groups:
        dist = _cached(cache, (window.window_id, "gps_distance"))
        if dist is None:
            dist = geo.distance_traveled(window.gps_track.points())
            _store(cache, (window.window_id, "gps_distance"), dist)
        values.append(dist)

    if stage == STAGE_ENV:
        feats = _cached(cache, (window.window_id, "audio", mfcc_config))
        if feats is None:
            feats = audio_mod.audio_features(window, mfcc_config).values()
            _store(cache, (window.window_id, "audio", mfcc_config), feats)
        values += list(feats)

    return FeatureVector(stage=stage, names=names, values=np.asarray(values))


def _cached(cache, key):
    return cache.get(key) if cache is not None else None


def _store(cache, key, value):
    if cache is not None:
        cache[key] = value


@dataclass(frozen=True)
class Normalizer:
    """Per-feature min-max ranges learned from a training set.

    transform maps x to (x - min) / (max - min), or 0 for a constant
    feature; values outside the training range are not clipped, so test
    vectors may leave [0, 1].
    """

    names: tuple
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", np.asarray(self.mins, dtype=np.float64))
        object.__setattr__(self, "maxs", np.asarray(self.maxs, dtype=np.float64))
        if np.any(self.maxs < self.mins):
            raise DataError("normalizer has max < min")

    def transform_matrix(self, x):
        span = self.maxs - self.mins
        safe = np.where(span > 0.0, span, 1.0)
        out = (np.asarray(x, dtype=np.float64) - self.mins) / safe
        return np.where(span > 0.0, out, 0.0)

    def transform(self, vector):
        if vector.names != self.names:
            raise DataError("feature names do not match the fitted normalizer")
        return FeatureVector(vector.stage, vector.names, self.transform_matrix(vector.values))

    def to_doc(self):
        return {
            "names": list(self.names),
            "mins": [float(v) for v in self.mins],
            "maxs": [float(v) for v in self.maxs],
        }

    @classmethod
    def from_doc(cls, doc):
        return cls(tuple(doc["names"]), np.asarray(doc["mins"]), np.asarray(doc["maxs"]))


def fit_normalizer(vectors):
    """Learn per-feature min/max over a non-empty training set."""
    if not vectors:
        raise DataError("cannot fit a normalizer on an empty set")
    names = vectors[0].names
    for v in vectors[1:]:
        if v.names != names:
            raise DataError("inconsistent feature names across training vectors")
    matrix = np.stack([v.values for v in vectors])
    return Normalizer(names=names, mins=matrix.min(axis=0), maxs=matrix.max(axis=0))


def normalize(vector, normalizer):
    return normalizer.transform(vector)


def vectors_to_matrix(vectors):
    """Stack FeatureVectors into a design matrix, checking name consistency."""
    if not vectors:
        raise DataError("no vectors to stack")
    names = vectors[0].names
    for v in vectors[1:]:
        if v.names != names:
            raise DataError("inconsistent feature names across vectors")
    return np.stack([v.values for v in vectors]), names


def enumerate_runs(availability, combinations=None, variants=None):
    """All (combination, variant) cells a device can run, in fixed order.

    Every combination whose sensors are all available is crossed with all
    variants, ordered by combination id then variant id. A device without
    an accelerometer cannot run anything.
    """
    if not availability.accel:
        raise UnsupportedDeviceError("an accelerometer is required for any recognition")
    combinations = combinations or default_combinations()
    variants = variants or default_variants()
    runs = []
    for combo_id in sorted(combinations):
        combo = combinations[combo_id]
        if all(availability.has(s) for s in combo.sensors):
            for variant_id in sorted(variants):
                runs.append((combo, variants[variant_id]))
    return runs
