"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest -s tests/test_acceptance.py` to see them).

The headline field-data accuracies are not reproducible at desk scale, so
the criteria here are property-based and synthetic-oracle checks: oracle
equivalence for the numeric kernels, a separable-by-construction standing
experiment where normalized training must reach >=99% on every model kind
and sensor combination, the qualitative normalization-collapse effect,
hierarchy gating, determinism, and the end-to-end CLI.
"""

import json
import math
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from adlsense import ann, audio, dsp, geo, harness, ingest, recognizer
from adlsense.taxonomy import ADL_LABELS, STANDING_LABELS
from test_audio import oracle_mfcc
from test_dsp import brute_force_peaks, two_pass_stats


@contextmanager
def criterion(number, name):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[criterion {number:02d}] {name}: FAIL ({time.perf_counter() - started:.1f}s)")
        raise
    print(f"[criterion {number:02d}] {name}: PASS ({time.perf_counter() - started:.1f}s)")


@pytest.fixture(scope="module")
def standing_6000():
    """The 6000-record, class-balanced standing dataset (2000 per class)."""
    spec = ingest.SynthSpec(
        stage="standing",
        classes=STANDING_LABELS,
        count=6000,
        seed=20240,
        sensors=("accel", "magnet", "gyro", "gps"),
    )
    return ingest.synthesize_dataset(spec)


def _acceptance_experiment(**overrides):
    settings = dict(
        stage="standing",
        learning_rate=0.5,
        target_error=5e-3,
        max_iterations=10_000,
        iters_scale=1.0,
        split_ratio=0.7,
        split_seed=7,
        seed=7,
    )
    settings.update(overrides)
    return harness.ExperimentConfig(**settings)


def test_criterion_1_gradient_correctness():
    with criterion(1, "backprop gradients vs central differences"):
        started = time.perf_counter()
        rng = np.random.default_rng(101)
        worst = 0.0
        for case in range(50):
            sizes = (
                int(rng.integers(2, 6)),
                int(rng.integers(3, 8)),
                int(rng.integers(2, 5)),
            )
            if case % 3 == 2:  # sprinkle in two-hidden-layer topologies
                sizes = (sizes[0], sizes[1], int(rng.integers(2, 6)), sizes[2])
            net = ann.init_network(ann.Topology(sizes), seed=int(rng.integers(1 << 30)))
            x = rng.normal(size=sizes[0])
            label = int(rng.integers(sizes[-1]))
            l2 = 0.0 if case % 2 == 0 else 1e-2
            worst = max(worst, ann.gradient_check(net, (x, label), epsilon=1e-5, l2_lambda=l2))
        elapsed = time.perf_counter() - started
        assert worst < 1e-6, f"max relative error {worst}"
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_criterion_2_mfcc_oracle_equivalence():
    with criterion(2, "MFCC vs direct-definition oracle"):
        started = time.perf_counter()
        config = audio.MfccConfig()
        rate = 8000.0

        frames = audio.mfcc_frames(np.zeros(800), rate, config)
        c0 = 2.0 * config.n_mel_filters * math.log(config.log_floor)
        assert np.max(np.abs(frames[:, 0] - c0)) <= 1e-9
        assert np.max(np.abs(frames[:, 1:])) <= 1e-9

        rng = np.random.default_rng(202)
        for _ in range(20):
            n = int(rng.integers(200, 8001))  # up to one second
            clip = rng.uniform(-1.0, 1.0, n)
            got = audio.mfcc_frames(clip, rate, config)
            want = oracle_mfcc(clip, rate, config)
            rel = np.max(np.abs(got - want) / np.maximum(np.abs(want), 1.0))
            assert rel < 1e-6, f"relative error {rel}"
        elapsed = time.perf_counter() - started
        assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_criterion_3_geodesy():
    with criterion(3, "haversine closed forms, symmetry, triangle inequality"):
        p0 = geo.GeoPoint(37.2, -3.6)
        assert geo.haversine(p0, p0) <= 0.1
        one_deg = geo.haversine(geo.GeoPoint(0.0, 0.0), geo.GeoPoint(0.0, 1.0))
        assert abs(one_deg - 111_194.9) <= 0.1
        antipodal = geo.haversine(geo.GeoPoint(0.0, 0.0), geo.GeoPoint(0.0, 180.0))
        assert abs(antipodal - 20_015_086.8) <= 1.0

        rng = np.random.default_rng(303)
        for _ in range(1000):
            a, b, c = (
                geo.GeoPoint(float(rng.uniform(-90, 90)), float(rng.uniform(-180, 180)))
                for _ in range(3)
            )
            assert geo.haversine(a, b) == geo.haversine(b, a)
            assert geo.haversine(a, c) <= geo.haversine(a, b) + geo.haversine(b, c) + 1e-6


def test_criterion_4_standing_experiment_normalized(standing_6000):
    with criterion(4, "6000-record standing grid, normalized, all kinds >= 99%"):
        config = _acceptance_experiment(
            combination_ids=(1, 2, 3), variant_ids=(5,), kinds=("MLP", "FNN", "DNN"),
            normalization="on",
        )
        started = time.perf_counter()
        report = harness.run_experiment(
            harness.HarnessConfig(experiment=config), windows=standing_6000
        )
        elapsed = time.perf_counter() - started
        assert len(report.cells) == 9
        for cell in report.cells:
            assert not cell.failed, cell.error
            assert cell.iterations <= 10_000
            assert cell.accuracy >= 0.99, (
                f"{cell.kind} on combination {cell.combination_id}: {100 * cell.accuracy:.2f}%"
            )
        assert elapsed < 180.0, f"reduced grid took {elapsed:.1f}s"


def test_criterion_5_normalization_collapse(standing_6000):
    with criterion(5, "non-normalized collapse vs normalized recovery (DNN)"):
        config = _acceptance_experiment(
            combination_ids=(2,), variant_ids=(5,), kinds=("DNN",), normalization="both",
            max_iterations=1200,
            feature_scales={"accel_raw_mean": 1e6},
        )
        report = harness.run_experiment(
            harness.HarnessConfig(experiment=config), windows=standing_6000
        )
        by_norm = {cell.normalized: cell for cell in report.cells}
        raw = by_norm[False]
        normed = by_norm[True]
        assert not raw.failed and not normed.failed
        assert raw.accuracy <= 0.60, f"non-normalized DNN at {100 * raw.accuracy:.2f}%"
        assert normed.accuracy > raw.accuracy


def test_criterion_6_hierarchical_gating():
    with criterion(6, "gating property over 500 random windows"):
        hc = harness.HarnessConfig(
            experiment=_acceptance_experiment(max_iterations=4000),
            synth_counts={"adl": 150, "env": 135, "standing": 90},
        )
        pipeline, _ = harness.train_pipeline(hc)

        standing = ingest.synthesize_dataset(
            ingest.SynthSpec(stage="standing", classes=STANDING_LABELS, count=300, seed=606)
        )
        adl = ingest.synthesize_dataset(
            ingest.SynthSpec(stage="adl", classes=ADL_LABELS, count=200, seed=607)
        )
        rng = np.random.default_rng(608)
        checked = 0
        saw_standing = saw_skip = False
        for window in standing + adl:
            kwargs = dict(
                window_id=window.window_id,
                duration=window.duration,
                accel=window.accel,
                magnet=window.magnet,
                gyro=window.gyro,
                audio=window.audio if rng.random() < 0.6 else None,
                gps_track=window.gps_track if rng.random() < 0.6 else None,
                labels=window.labels,
            )
            w = ingest.SensorWindow(**kwargs)
            result = recognizer.recognize(w, pipeline)
            stage1_standing = result.adl == "standing"
            expected = stage1_standing and w.audio is not None and w.gps_track is not None
            assert (result.standing is not None) == expected
            assert len(result.adl_scores) == 5
            assert abs(sum(result.adl_scores.values()) - 1.0) <= 1e-9
            assert (result.environment is not None) == (w.audio is not None)
            if result.environment is not None:
                assert len(result.environment_scores) == 9
                assert abs(sum(result.environment_scores.values()) - 1.0) <= 1e-9
            if result.standing is not None:
                assert result.adl == "standing"
                assert len(result.standing_scores) == 3
                assert abs(sum(result.standing_scores.values()) - 1.0) <= 1e-9
                saw_standing = True
            if stage1_standing and result.standing is None:
                saw_skip = True
            checked += 1
        assert checked == 500
        assert saw_standing and saw_skip  # both sides of the gate exercised


def test_criterion_7_determinism_and_persistence(tmp_path):
    with criterion(7, "byte-identical reports and bit-exact model round trip"):
        config_text = """
[grid]
stage = standing
combinations = 1
variants = 5
kinds = MLP,DNN
normalization = both

[train]
max_iterations = 800
iters_scale = 1.0
learning_rate = 0.5
target_error = 0.005
seed = 7

[synth]
seed = 42

[synth.standing]
count = 120
sensors = accel,gps
"""
        cfg = tmp_path / "det.ini"
        cfg.write_text(config_text, encoding="utf-8")
        runs = [
            subprocess.run(
                [sys.executable, "-m", "adlsense.cli", "experiment", "--config", str(cfg),
                 "--format", "json"],
                capture_output=True, text=True, timeout=600,
            )
            for _ in range(2)
        ]
        assert runs[0].returncode == 0, runs[0].stderr
        assert runs[1].returncode == 0, runs[1].stderr
        assert runs[0].stdout == runs[1].stdout

        rng = np.random.default_rng(707)
        net = ann.init_network(ann.Topology((12, 24, 3)), seed=17, kind="DNN")
        trained, _ = ann.train(
            net,
            [(rng.uniform(0, 1, 12), int(rng.integers(3))) for _ in range(40)],
            ann.TrainConfig(max_iterations=300, learning_rate=0.3, l2_lambda=1e-4, seed=17),
        )
        loaded = ann.load_model(ann.save_model(trained))
        for _ in range(100):
            x = rng.normal(size=12)
            assert np.array_equal(ann.forward(trained, x), ann.forward(loaded, x))


def test_criterion_8_peak_features():
    with criterion(8, "peak detection vs brute force, sine case, gap contract"):
        rng = np.random.default_rng(808)
        for _ in range(1000):
            n = int(rng.integers(3, 200))
            x = rng.normal(size=n)
            got = dsp.detect_max_peaks(dsp.ScalarSeries(x, 100.0))
            assert got.indices.tolist() == brute_force_peaks(x)

        rate = 100.0
        t = np.arange(500) / rate
        s = dsp.ScalarSeries(np.sin(2.0 * np.pi * 2.0 * t + 0.3), rate)
        peaks = dsp.detect_max_peaks(s)
        assert len(peaks) == 10
        spacing = np.diff(peaks.indices) / rate
        assert np.all(np.abs(spacing - 0.5) <= 1.0 / rate + 1e-12)

        for _ in range(200):
            k = int(rng.integers(0, 12))
            idx = np.sort(rng.choice(5000, size=k, replace=False))
            peaks = dsp.PeakSet(idx.astype(np.intp), np.ones(k))
            gaps = dsp.peak_distance_features(peaks, rate)
            assert gaps.shape == (5,)
            assert np.all(np.diff(gaps) <= 1e-15)
            assert np.all(gaps >= 0.0)


def test_criterion_9_end_to_end_cli(tmp_path):
    with criterion(9, "synth -> experiment -> classify, adl accuracy >= 95%"):
        config_text = """
[grid]
stage = standing
combinations = 1
variants = 5
kinds = MLP
normalization = on

[train]
max_iterations = 4000
iters_scale = 1.0
learning_rate = 0.5
target_error = 0.005
seed = 7

[synth]
seed = 42

[synth.adl]
count = 400
[synth.env]
count = 90
[synth.standing]
count = 90
sensors = accel,magnet,gyro,gps

[pipeline]
combination = 3
"""
        cfg = tmp_path / "e2e.ini"
        cfg.write_text(config_text, encoding="utf-8")

        def cli(*args):
            return subprocess.run(
                [sys.executable, "-m", "adlsense.cli", *args],
                capture_output=True, text=True, timeout=600,
            )

        synth = cli("synth", "--config", str(cfg), "--stage", "adl", "--count", "40",
                    "--out", str(tmp_path / "ds"))
        assert synth.returncode == 0, synth.stderr

        experiment = cli("experiment", "--config", str(cfg), "--out", str(tmp_path / "exp"))
        assert experiment.returncode == 0, experiment.stderr

        train = cli("train", "--config", str(cfg), "--out", str(tmp_path / "bundle"))
        assert train.returncode == 0, train.stderr

        held_out = ingest.synthesize_dataset(
            ingest.SynthSpec(
                stage="adl", classes=ADL_LABELS, count=100, seed=909,
                sensors=("accel", "magnet", "gyro", "gps"),
            )
        )
        hits = 0
        for i, window in enumerate(held_out):
            path = tmp_path / f"w{i:03d}.csv"
            path.write_text(ingest.serialize_window(window), encoding="utf-8")
            result = cli("classify", "--model", str(tmp_path / "bundle"), "--format", "json",
                         str(path))
            assert result.returncode == 0, result.stderr
            verdict = json.loads(result.stdout)
            hits += verdict["adl"] == window.labels["adl"]
        assert hits >= 95, f"{hits}/100 held-out windows classified correctly"


def test_criterion_10_statistics_oracle():
    with criterion(10, "descriptive_stats vs two-pass reference"):
        rng = np.random.default_rng(1010)
        for i in range(1000):
            n = int(rng.integers(1, 60))
            if i % 2 == 0 and n > 1:
                n -= n % 2  # force plenty of even-length median cases
            values = (rng.normal(scale=10.0 ** rng.integers(-2, 4), size=n)).tolist()
            got = dsp.descriptive_stats(values)
            want = two_pass_stats(values)
            for g, w in zip(got, want):
                assert g == pytest.approx(w, rel=1e-12, abs=1e-12)
