"""Motion and magnetic signal cleaning plus peak-based feature extraction.

The pipeline for one sensor stream is: per-sample magnitude, recursive
low-pass smoothing, strict-local-maximum detection, then the time gaps
between consecutive peaks, descriptive statistics of the peak amplitudes,
and descriptive statistics of the filtered signal itself.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import backend
from .errors import ConfigError, DataError, SensorUnavailableError

MOTION_SENSORS = ("accel", "magnet", "gyro")

PEAK_GAP_FIELDS = ("peak_gap_1", "peak_gap_2", "peak_gap_3", "peak_gap_4", "peak_gap_5")
PEAK_STAT_FIELDS = ("peak_mean", "peak_std", "peak_var", "peak_median")
RAW_STAT_FIELDS = ("raw_std", "raw_mean", "raw_max", "raw_min", "raw_var", "raw_median")
MOTION_FEATURE_FIELDS = PEAK_GAP_FIELDS + PEAK_STAT_FIELDS + RAW_STAT_FIELDS


@dataclass(frozen=True)
class DspConfig:
    """Knobs for the motion feature pipeline.

    alpha is the smoothing factor of the single-pole low-pass filter.
    peak_gap_mode selects what "distance between maximum peaks" means:
    "time" (seconds between consecutive peaks, the default reading) or
    "amplitude" (absolute difference of consecutive peak amplitudes).
    """

    alpha: float = 0.1
    peak_gap_mode: str = "time"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.peak_gap_mode not in ("time", "amplitude"):
            raise ConfigError(f"peak_gap_mode must be 'time' or 'amplitude', got {self.peak_gap_mode!r}")


@dataclass(frozen=True)
class ScalarSeries:
    """A single-channel signal at a fixed sampling rate."""

    samples: np.ndarray
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.rate <= 0:
            raise DataError(f"sampling rate must be positive, got {self.rate}")

    def __len__(self):
        return self.samples.shape[0]


@dataclass(frozen=True)
class PeakSet:
    """Strict local maxima of a series: positions and the values there."""

    indices: np.ndarray
    amplitudes: np.ndarray

    def __len__(self):
        return self.indices.shape[0]


class DescriptiveStats(NamedTuple):
    mean: float
    std: float
    var: float
    max: float
    min: float
    median: float


@dataclass(frozen=True)
class MotionFeatures:
    """The per-sensor feature set: five peak gaps, peak stats, raw stats."""

    five_peak_distances: tuple
    peak_mean: float
    peak_std: float
    peak_var: float
    peak_median: float
    raw_std: float
    raw_mean: float
    raw_max: float
    raw_min: float
    raw_var: float
    raw_median: float

    def values(self):
        """Flatten to 15 floats in the canonical field order."""
        return list(self.five_peak_distances) + [
            self.peak_mean,
            self.peak_std,
            self.peak_var,
            self.peak_median,
            self.raw_std,
            self.raw_mean,
            self.raw_max,
            self.raw_min,
            self.raw_var,
            self.raw_median,
        ]

    def as_dict(self):
        return dict(zip(MOTION_FEATURE_FIELDS, self.values()))


def low_pass(series, alpha):
    """Single-pole recursive smoother with DC gain exactly 1.

    y[0] = x[0]; y[n] = alpha*x[n] + (1-alpha)*y[n-1]. Output values are
    convex combinations of inputs, so they never leave [min(x), max(x)].
    """
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must be in (0, 1], got {alpha}")
    if len(series) == 0:
        raise DataError("cannot filter an empty series")
    return ScalarSeries(backend.lowpass(series.samples, alpha), series.rate)


def magnitude(stream):
    """Per-sample Euclidean norm of a triaxial stream, as a ScalarSeries."""
    xyz = stream.xyz
    if xyz.shape[0] == 0:
        raise DataError("cannot take the magnitude of an empty stream")
    return ScalarSeries(np.sqrt((xyz * xyz).sum(axis=1)), stream.rate)


def detect_max_peaks(series):
    """All strict interior local maxima: x[i-1] < x[i] > x[i+1].

    Endpoints are never peaks and plateaus are excluded (strict
    inequalities break ties). Series shorter than 3 samples yield an
    empty PeakSet rather than an error.
    """
    idx = backend.peak_indices(series.samples)
    return PeakSet(idx, series.samples[idx])


def peak_distance_features(peaks, rate, mode="time"):
    """The five greatest distances between consecutive maximum peaks.

    In "time" mode a distance is the gap between consecutive peak
    positions in seconds; in "amplitude" mode it is the absolute
    difference of consecutive peak amplitudes. The result is sorted
    descending and zero-padded to length 5 when fewer gaps exist.
    """
    if mode == "time":
        gaps = np.diff(peaks.indices) / float(rate)
    elif mode == "amplitude":
        gaps = np.abs(np.diff(peaks.amplitudes))
    else:
        raise ConfigError(f"unknown peak gap mode {mode!r}")
    gaps = np.sort(gaps)[::-1][:5]
    out = np.zeros(5, dtype=np.float64)
    out[: gaps.shape[0]] = gaps
    return out


def descriptive_stats(values):
    """Population statistics of a sequence: mean, std, var, max, min, median.

    Variance divides by N (population convention) and std is its square
    root; the median is the middle element of a sorted copy, or the mean
    of the two middle elements for even lengths.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise DataError("descriptive statistics need at least one value")
    mean = float(arr.mean())
    var = float(np.var(arr))
    return DescriptiveStats(
        mean=mean,
        std=math.sqrt(var),
        var=var,
        max=float(arr.max()),
        min=float(arr.min()),
        median=float(np.median(arr)),
    )


def motion_features(window, sensor, config=None):
    """Extract MotionFeatures for one motion/magnetic sensor of a window.

    Pipeline: magnitude -> low_pass -> peak detection -> peak gap and
    amplitude statistics, plus descriptive statistics of the filtered
    series. A window with no peaks reports 0 for every peak statistic.
    """
    if sensor not in MOTION_SENSORS:
        raise DataError(f"unknown motion sensor {sensor!r}; expected one of {MOTION_SENSORS}")
    config = config or DspConfig()
    stream = getattr(window, sensor)
    if stream is None:
        raise SensorUnavailableError(sensor)
    filtered = low_pass(magnitude(stream), config.alpha)
    peaks = detect_max_peaks(filtered)
    gaps = peak_distance_features(peaks, filtered.rate, config.peak_gap_mode)
    if len(peaks) == 0:
        peak_stats = DescriptiveStats(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    else:
        peak_stats = descriptive_stats(peaks.amplitudes)
    raw = descriptive_stats(filtered.samples)
    return MotionFeatures(
        five_peak_distances=tuple(float(g) for g in gaps),
        peak_mean=peak_stats.mean,
        peak_std=peak_stats.std,
        peak_var=peak_stats.var,
        peak_median=peak_stats.median,
        raw_std=raw.std,
        raw_mean=raw.mean,
        raw_max=raw.max,
        raw_min=raw.min,
        raw_var=raw.var,
        raw_median=raw.median,
    )
