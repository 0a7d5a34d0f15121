"""Cross-checks between the compiled kernels and the numpy/Python fallback.

The two implementations agree to float rounding (the compiled code may use
fused multiply-adds), so comparisons use tight tolerances rather than
bit equality.
"""

import numpy as np
import pytest

from adlsense import _kernels_py, backend
from adlsense.errors import ConfigError

HAS_COMPILED = "compiled" in backend.available()

needs_compiled = pytest.mark.skipif(not HAS_COMPILED, reason="compiled extension not built")


@pytest.fixture
def restore_backend():
    previous = backend.active()
    yield
    backend.use(previous)


def test_active_backend_is_selectable(restore_backend):
    backend.use("python")
    assert backend.active() == "python"
    with pytest.raises(ConfigError):
        backend.use("fortran")


@needs_compiled
def test_lowpass_agreement():
    rng = np.random.default_rng(1)
    for n in (1, 2, 5, 500, 4096):
        x = rng.normal(size=n)
        for alpha in (0.05, 0.1, 0.9, 1.0):
            compiled = backend._IMPLS["compiled"].lowpass(np.ascontiguousarray(x), alpha)
            fallback = _kernels_py.lowpass(x, alpha)
            assert np.allclose(compiled, fallback, rtol=1e-12, atol=1e-14)


@needs_compiled
def test_peak_indices_agreement():
    rng = np.random.default_rng(2)
    for n in (1, 2, 3, 10, 1000):
        x = rng.normal(size=n)
        a = backend._IMPLS["compiled"].peak_indices(np.ascontiguousarray(x))
        b = _kernels_py.peak_indices(x)
        assert np.array_equal(a, b)
    # plateaus excluded identically
    x = np.array([0.0, 1.0, 1.0, 0.0, 2.0, 0.0])
    assert np.array_equal(
        backend._IMPLS["compiled"].peak_indices(x), _kernels_py.peak_indices(x)
    )


@needs_compiled
def test_sigmoid_agreement_including_saturation():
    rng = np.random.default_rng(3)
    z = np.concatenate([rng.normal(scale=3, size=(40, 8)), np.array([[800.0, -800.0] * 4] * 2)])
    z = np.ascontiguousarray(z)
    a = backend._IMPLS["compiled"].sigmoid(z)
    b = _kernels_py.sigmoid(z.copy())
    assert np.allclose(a, b, rtol=1e-14, atol=1e-300)
    assert np.all(a >= 0.0) and np.all(a <= 1.0)


@needs_compiled
def test_sigmoid_backward_agreement():
    rng = np.random.default_rng(4)
    a = np.ascontiguousarray(rng.uniform(0, 1, size=(30, 7)))
    up = np.ascontiguousarray(rng.normal(size=(30, 7)))
    assert np.allclose(
        backend._IMPLS["compiled"].sigmoid_backward(a, up),
        _kernels_py.sigmoid_backward(a, up),
        rtol=1e-14,
    )


@needs_compiled
def test_softmax_and_xent_agreement():
    rng = np.random.default_rng(5)
    logits = np.ascontiguousarray(rng.normal(scale=5, size=(50, 4)))
    labels = np.ascontiguousarray(rng.integers(0, 4, size=50), dtype=np.intp)
    sa = backend._IMPLS["compiled"].softmax(logits)
    sb = _kernels_py.softmax(logits)
    assert np.allclose(sa, sb, rtol=1e-12)
    assert np.allclose(sa.sum(axis=1), 1.0, atol=1e-12)

    ce_a, delta_a = backend._IMPLS["compiled"].softmax_xent(logits, labels)
    ce_b, delta_b = _kernels_py.softmax_xent(logits.copy(), labels)
    assert ce_a == pytest.approx(ce_b, rel=1e-12)
    assert np.allclose(delta_a, delta_b, rtol=1e-12, atol=1e-15)


@needs_compiled
def test_training_agrees_across_backends(restore_backend):
    """Same tiny training run under both backends lands on the same model
    to float tolerance (training is deterministic within one backend)."""
    from adlsense import ann

    rng = np.random.default_rng(6)
    data = [(rng.normal(size=4), int(rng.integers(3))) for _ in range(30)]
    results = {}
    for name in ("compiled", "python"):
        backend.use(name)
        net = ann.init_network(ann.Topology((4, 8, 3)), seed=9)
        trained, history = ann.train(
            net, data, ann.TrainConfig(max_iterations=200, learning_rate=0.2, seed=9)
        )
        results[name] = (trained, history)
    for wa, wb in zip(results["compiled"][0].weights, results["python"][0].weights):
        assert np.allclose(wa, wb, rtol=1e-9, atol=1e-12)
    assert results["compiled"][1][-1] == pytest.approx(results["python"][1][-1], rel=1e-9)
