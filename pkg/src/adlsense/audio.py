"""Microphone feature extraction: mel-frequency cepstral coefficients plus
raw-signal statistics.

The cepstral chain is the standard one: pre-emphasis, Hamming-windowed
frames, power spectrum by DFT, a triangular mel filterbank, log energies
with a floor, and an unnormalised type-II DCT (c[i] = 2 * sum_m E[m] *
cos(pi * i * (2m+1) / (2M))). Coefficient 0 is kept.
"""

from dataclasses import dataclass

import numpy as np

from . import dsp
from .errors import ConfigError, DataError, SensorUnavailableError

N_MFCC = 26

AUDIO_FEATURE_FIELDS = tuple(f"mfcc_{i:02d}" for i in range(N_MFCC)) + (
    "audio_raw_std",
    "audio_raw_mean",
    "audio_raw_max",
    "audio_raw_min",
    "audio_raw_var",
    "audio_raw_median",
)


@dataclass(frozen=True)
class MfccConfig:
    """Frame geometry and filterbank parameters.

    fmax of None means half the sample rate at extraction time. The log
    floor keeps digital silence finite instead of -inf.
    """

    frame_length: float = 0.025
    hop: float = 0.010
    n_mel_filters: int = 26
    n_coefficients: int = N_MFCC
    pre_emphasis: float = 0.97
    fmin: float = 0.0
    fmax: float = None
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.frame_length <= 0:
            raise ConfigError(f"frame_length must be positive, got {self.frame_length}")
        if not 0 < self.hop <= self.frame_length:
            raise ConfigError(f"hop must be in (0, frame_length], got {self.hop}")
        if self.n_coefficients > self.n_mel_filters:
            raise ConfigError(
                f"n_coefficients ({self.n_coefficients}) exceeds n_mel_filters ({self.n_mel_filters})"
            )
        if self.n_mel_filters < 1 or self.n_coefficients < 1:
            raise ConfigError("filter and coefficient counts must be at least 1")

    def resolve_fmax(self, rate):
        fmax = rate / 2.0 if self.fmax is None else self.fmax
        if fmax > rate / 2.0:
            raise ConfigError(f"fmax {fmax} exceeds the Nyquist frequency {rate / 2.0}")
        if not self.fmin < fmax:
            raise ConfigError(f"fmin {self.fmin} must be below fmax {fmax}")
        return fmax


@dataclass(frozen=True)
class AudioFeatures:
    """Window-level audio features: mean MFCC vector plus raw statistics."""

    mfcc: tuple
    raw_std: float
    raw_mean: float
    raw_max: float
    raw_min: float
    raw_var: float
    raw_median: float

    def values(self):
        return list(self.mfcc) + [
            self.raw_std,
            self.raw_mean,
            self.raw_max,
            self.raw_min,
            self.raw_var,
            self.raw_median,
        ]

    def as_dict(self):
        return dict(zip(AUDIO_FEATURE_FIELDS, self.values()))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_filters, n_fft, rate, fmin, fmax):
    """Triangular filters over the DFT bins, rows one per filter.

    Filter m rises from mel point m to m+1 and falls to m+2; weights are
    evaluated at the exact bin frequencies (no rounding to bins), so every
    filter keeps nonzero support even at coarse bin spacing.
    """
    points = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_filters + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * (rate / n_fft)
    weights = np.zeros((n_filters, bin_freqs.shape[0]))
    for m in range(n_filters):
        left, center, right = points[m], points[m + 1], points[m + 2]
        up = (bin_freqs - left) / (center - left)
        down = (right - bin_freqs) / (right - center)
        weights[m] = np.maximum(0.0, np.minimum(up, down))
    return weights


def filter_center_frequencies(n_filters, rate, fmin, fmax):
    """Apex frequency of each triangular filter, in Hz."""
    points = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_filters + 2))
    return points[1:-1]


def _dct_ii_matrix(n_in, n_out):
    m = np.arange(n_in)
    i = np.arange(n_out)
    return 2.0 * np.cos(np.pi * np.outer(i, 2 * m + 1) / (2.0 * n_in))


def mfcc_frames(samples, rate, config=None):
    """Per-frame cepstral coefficients, shape (n_frames, n_coefficients).

    Frame count is floor((len - frame_samples) / hop_samples) + 1; trailing
    samples that do not complete a frame are ignored.
    """
    config = config or MfccConfig()
    fmax = config.resolve_fmax(rate)
    samples = np.asarray(samples, dtype=np.float64)
    frame_samples = int(round(config.frame_length * rate))
    hop_samples = int(round(config.hop * rate))
    if samples.shape[0] < frame_samples:
        raise DataError(
            f"audio of {samples.shape[0]} samples is shorter than one frame ({frame_samples})"
        )

    emphasized = np.empty_like(samples)
    emphasized[0] = samples[0]
    emphasized[1:] = samples[1:] - config.pre_emphasis * samples[:-1]

    n_frames = (samples.shape[0] - frame_samples) // hop_samples + 1
    idx = np.arange(frame_samples)[None, :] + hop_samples * np.arange(n_frames)[:, None]
    frames = emphasized[idx] * np.hamming(frame_samples)

    power = np.abs(np.fft.rfft(frames, n=frame_samples, axis=1)) ** 2
    fbank = mel_filterbank(config.n_mel_filters, frame_samples, rate, config.fmin, fmax)
    log_energies = np.log(np.maximum(power @ fbank.T, config.log_floor))
    return log_energies @ _dct_ii_matrix(config.n_mel_filters, config.n_coefficients).T


def audio_features(window, config=None):
    """AudioFeatures for a window: per-coefficient mean over frames plus
    descriptive statistics of the raw samples."""
    if window.audio is None:
        raise SensorUnavailableError("mic")
    clip = window.audio
    frames = mfcc_frames(clip.samples, clip.rate, config)
    raw = dsp.descriptive_stats(clip.samples)
    return AudioFeatures(
        mfcc=tuple(float(c) for c in frames.mean(axis=0)),
        raw_std=raw.std,
        raw_mean=raw.mean,
        raw_max=raw.max,
        raw_min=raw.min,
        raw_var=raw.var,
        raw_median=raw.median,
    )
