"""Multi-sensor activity-of-daily-living recognition.

Feature extraction from motion, magnetic, acoustic, and location streams;
fusion over sensor combinations; feedforward neural classifiers; a
three-stage hierarchical recognizer; and an experiment harness with a CLI.
"""

from . import ann, audio, backend, dsp, fusion, geo, harness, ingest, recognizer, taxonomy
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

__version__ = "0.1.0"

__all__ = [
    "ann",
    "audio",
    "backend",
    "dsp",
    "fusion",
    "geo",
    "harness",
    "ingest",
    "recognizer",
    "taxonomy",
    "AdlSenseError",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "ModelLoadError",
    "ParseError",
    "SensorUnavailableError",
    "UnsupportedDeviceError",
    "ValidationError",
    "__version__",
]
