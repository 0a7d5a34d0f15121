import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adlsense import geo, ingest
from adlsense.errors import ConfigError, ParseError, ValidationError

MINIMAL = """# window_id=w1,duration=5.0
accel,0.0,0.1,0.2,9.8
accel,0.01,0.2,0.1,9.7
"""


def test_parse_minimal_accel_only():
    w = ingest.parse_window(MINIMAL)
    assert w.window_id == "w1"
    assert w.duration == 5.0
    assert len(w.accel) == 2
    assert w.magnet is None and w.gyro is None and w.audio is None and w.gps_track is None
    assert w.labels == {}


def test_parse_labels_and_audio():
    text = (
        "# window_id=w2,duration=5.0,audio_rate=8000,label.adl=standing,label.env=bedroom\n"
        "accel,0.0,0,0,9.8\n"
        "audio,0.0,0.25\n"
        "audio,0.000125,-0.25\n"
    )
    w = ingest.parse_window(text)
    assert w.labels == {"adl": "standing", "env": "bedroom"}
    assert w.audio.rate == 8000.0
    assert w.audio.samples.tolist() == [0.25, -0.25]


def test_parse_latitude_out_of_range():
    text = "# window_id=w3,duration=5.0\ngps,0.0,91.0,0.0\n"
    with pytest.raises(ValidationError):
        ingest.parse_window(text)


def test_parse_non_increasing_timestamps():
    text = "# window_id=w4,duration=5.0\naccel,0.1,0,0,0\naccel,0.1,0,0,1\n"
    with pytest.raises(ValidationError):
        ingest.parse_window(text)


def test_parse_malformed_row_names_line():
    text = "# window_id=w5,duration=5.0\naccel,0.0,1,2,3\naccel,oops,1,2,3\n"
    with pytest.raises(ParseError) as exc:
        ingest.parse_window(text)
    assert exc.value.line == 3


def test_parse_wrong_field_count_names_line():
    text = "# window_id=w6,duration=5.0\ngps,0.0,1.0\n"
    with pytest.raises(ParseError) as exc:
        ingest.parse_window(text)
    assert exc.value.line == 2


def test_parse_unknown_stream():
    text = "# window_id=w7,duration=5.0\nbarometer,0.0,1.0\n"
    with pytest.raises(ParseError):
        ingest.parse_window(text)


def test_parse_requires_header():
    with pytest.raises(ParseError) as exc:
        ingest.parse_window("accel,0.0,1,2,3\n")
    assert exc.value.line == 1


def test_parse_no_streams():
    with pytest.raises(ValidationError):
        ingest.parse_window("# window_id=w8,duration=5.0\n")


def test_parse_audio_without_rate():
    text = "# window_id=w9,duration=5.0\naudio,0.0,0.5\n"
    with pytest.raises(ParseError):
        ingest.parse_window(text)


def test_parse_bad_audio_rate():
    text = "# window_id=w9,duration=5.0,audio_rate=0\naudio,0.0,0.5\naudio,0.2,0.1\n"
    with pytest.raises(ValidationError):
        ingest.parse_window(text)


def test_unknown_label_namespace():
    text = "# window_id=w10,duration=5.0,label.mood=happy\naccel,0.0,1,2,3\n"
    with pytest.raises(ParseError):
        ingest.parse_window(text)


# ---------------------------------------------------------------------------
# round trips


def _random_window(rng, window_id="r1"):
    n = int(rng.integers(2, 30))
    streams = {}
    for name in ("accel", "magnet", "gyro"):
        if rng.random() < 0.7:
            streams[name] = ingest.TriaxialStream(
                t=np.cumsum(rng.uniform(0.001, 0.1, n)), xyz=rng.normal(size=(n, 3))
            )
    audio = None
    if rng.random() < 0.5:
        audio = ingest.AudioClip(samples=rng.uniform(-1, 1, n), rate=8000.0)
    gps = None
    if rng.random() < 0.5 or (not streams and audio is None):
        gps = ingest.GpsTrack(
            t=np.cumsum(rng.uniform(0.1, 1.0, n)),
            lat=rng.uniform(-89, 89, n),
            lon=rng.uniform(-179, 179, n),
        )
    labels = {}
    if rng.random() < 0.5:
        labels["adl"] = "walking"
    return ingest.SensorWindow(
        window_id=window_id,
        duration=5.0,
        audio=audio,
        gps_track=gps,
        labels=labels,
        **streams,
    )


def test_serialize_parse_round_trip_random_windows():
    rng = np.random.default_rng(77)
    for i in range(50):
        w = _random_window(rng, window_id=f"r{i}")
        again = ingest.parse_window(ingest.serialize_window(w))
        assert again.equals(w)


def test_every_synthetic_window_reparses():
    spec = ingest.SynthSpec(stage="standing", classes=("sleeping", "driving"), count=8, seed=5)
    for w in ingest.synthesize_dataset(spec):
        assert ingest.parse_window(ingest.serialize_window(w)).equals(w)


def test_dataset_directory_round_trip(tmp_path):
    spec = ingest.SynthSpec(
        stage="standing", classes=("watching_tv", "driving"), count=6, seed=9,
        sensors=("accel", "gps"),
    )
    windows = ingest.synthesize_dataset(spec)
    ingest.save_dataset(windows, tmp_path / "ds")
    loaded = ingest.load_dataset(tmp_path / "ds")
    assert len(loaded) == len(windows)
    for a, b in zip(windows, loaded):
        assert a.equals(b)


# ---------------------------------------------------------------------------
# synthesize_dataset


def test_balanced_6000_over_3_classes():
    spec = ingest.SynthSpec(
        stage="standing",
        classes=("watching_tv", "sleeping", "driving"),
        count=6000,
        seed=1,
        sensors=("accel",),
        motion_rate=10.0,  # tiny streams; this test only counts labels
    )
    windows = ingest.synthesize_dataset(spec)
    counts = {}
    for w in windows:
        counts[w.labels["standing"]] = counts.get(w.labels["standing"], 0) + 1
    assert counts == {"watching_tv": 2000, "sleeping": 2000, "driving": 2000}


def test_balance_within_one_for_ragged_count():
    spec = ingest.SynthSpec(
        stage="standing",
        classes=("watching_tv", "sleeping", "driving"),
        count=200,
        seed=1,
        sensors=("accel",),
        motion_rate=10.0,
    )
    counts = {}
    for w in ingest.synthesize_dataset(spec):
        label = w.labels["standing"]
        counts[label] = counts.get(label, 0) + 1
    assert max(counts.values()) - min(counts.values()) <= 1


def test_same_seed_byte_identical():
    spec = ingest.SynthSpec(stage="adl", classes=("walking", "running"), count=6, seed=33)
    first = b"".join(ingest.serialize_window(w).encode() for w in ingest.synthesize_dataset(spec))
    second = b"".join(ingest.serialize_window(w).encode() for w in ingest.synthesize_dataset(spec))
    assert first == second


def test_driving_travels_farther_than_sleeping():
    spec = ingest.SynthSpec(
        stage="standing", classes=("sleeping", "driving"), count=20, seed=2, sensors=("gps",)
    )
    windows = ingest.synthesize_dataset(spec)
    sleeping = [geo.distance_traveled(w.gps_track.points()) for w in windows if w.labels["standing"] == "sleeping"]
    driving = [geo.distance_traveled(w.gps_track.points()) for w in windows if w.labels["standing"] == "driving"]
    assert max(sleeping) + 20.0 < min(driving)


def test_empty_class_list_rejected():
    with pytest.raises(ConfigError):
        ingest.SynthSpec(stage="standing", classes=(), count=10, seed=0)


def test_count_below_class_count_rejected():
    with pytest.raises(ConfigError):
        ingest.SynthSpec(stage="standing", classes=("sleeping", "driving"), count=1, seed=0)


@given(st.integers(min_value=2, max_value=40))
def test_labels_balanced_property(count):
    spec = ingest.SynthSpec(
        stage="standing",
        classes=("sleeping", "driving"),
        count=count,
        seed=4,
        sensors=("accel",),
        motion_rate=5.0,
    )
    counts = {"sleeping": 0, "driving": 0}
    for w in ingest.synthesize_dataset(spec):
        counts[w.labels["standing"]] += 1
    assert abs(counts["sleeping"] - counts["driving"]) <= 1


def test_availability_flags():
    spec = ingest.SynthSpec(
        stage="standing", classes=("driving",), count=2, seed=3, sensors=("accel", "gps")
    )
    w = ingest.synthesize_dataset(spec)[0]
    avail = ingest.SensorAvailability.of_window(w)
    assert avail.accel and avail.gps
    assert not (avail.magnet or avail.gyro or avail.mic)
