"""Feedforward neural classifiers trained by full-batch backpropagation.

Three presets cover the classifier trio used throughout the experiments:
MLP and FNN are single-hidden-layer networks that differ in their weight
initialisation range, DNN stacks three hidden layers and trains with an
L2 penalty. Hidden layers are sigmoid, the output is a softmax, and the
objective is mean cross-entropy plus (l2/2) * sum(w^2) with biases left
unregularised. Full-batch descent keeps training deterministic for a
fixed seed.
"""

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ConfigError, DataError, DivergenceError, ModelLoadError

MODEL_FORMAT_VERSION = 1

KIND_TAGS = ("MLP", "FNN", "DNN")


@dataclass(frozen=True)
class Topology:
    """Layer sizes from input to output; at least one hidden layer."""

    sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if len(self.sizes) < 3:
            raise ConfigError(f"topology needs input, >=1 hidden, output; got {self.sizes}")
        if any(s < 1 for s in self.sizes):
            raise ConfigError(f"layer sizes must be >= 1, got {self.sizes}")

    @property
    def n_inputs(self):
        return self.sizes[0]

    @property
    def n_outputs(self):
        return self.sizes[-1]

    @property
    def n_layers(self):
        return len(self.sizes) - 1


@dataclass(frozen=True)
class ModelKind:
    """A preset: hidden geometry, initialisation scheme, default L2."""

    tag: str
    init_scheme: str  # "fan_in" or "fan_avg"
    depth: int
    default_l2: float

    def topology_for(self, n_inputs, n_outputs):
        if self.depth == 1:
            hidden = [max(8, 2 * n_inputs)]
        else:
            hidden = [2 * n_inputs, n_inputs, n_inputs]
        return Topology((n_inputs, *hidden, n_outputs))


MODEL_KINDS = {
    "MLP": ModelKind("MLP", init_scheme="fan_in", depth=1, default_l2=0.0),
    "FNN": ModelKind("FNN", init_scheme="fan_avg", depth=1, default_l2=0.0),
    "DNN": ModelKind("DNN", init_scheme="fan_in", depth=3, default_l2=1e-4),
}


@dataclass(frozen=True)
class TrainConfig:
    """Full-batch gradient-descent settings.

    target_error is a mean cross-entropy threshold for early stopping;
    max_iterations caps the budget (full-scale runs budget millions of
    iterations, the desk-scale default is 1e4). The defaults are stable on
    the bundled synthetic benchmarks: loss histories decrease monotonically
    at learning rates up to the default.
    """

    max_iterations: int = 10_000
    learning_rate: float = 0.1
    l2_lambda: float = 0.0
    target_error: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.l2_lambda < 0:
            raise ConfigError(f"l2_lambda must be non-negative, got {self.l2_lambda}")

    def digest(self):
        doc = json.dumps(
            {
                "max_iterations": self.max_iterations,
                "learning_rate": self.learning_rate,
                "l2_lambda": self.l2_lambda,
                "target_error": self.target_error,
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(doc.encode()).hexdigest()[:16]


class NeuralNet:
    """Weights and biases for one topology, plus bookkeeping metadata."""

    def __init__(self, topology, weights, biases, seed, kind="MLP", train_digest=None):
        self.topology = topology
        self.weights = weights  # list of (fan_out, fan_in) arrays
        self.biases = biases  # list of (fan_out,) arrays
        self.seed = seed
        self.kind = kind
        self.train_digest = train_digest
        for i, (w, b) in enumerate(zip(weights, biases)):
            expect = (topology.sizes[i + 1], topology.sizes[i])
            if w.shape != expect or b.shape != (expect[0],):
                raise ConfigError(f"layer {i} parameter shapes do not match the topology")

    def copy(self):
        return NeuralNet(
            self.topology,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.seed,
            self.kind,
            self.train_digest,
        )

    def weight_norm(self):
        return math.sqrt(sum(float((w * w).sum()) for w in self.weights))


def init_network(topology, seed, kind="MLP"):
    """Uniform initialisation in [-r, +r] with r = 1/sqrt(fan_in) (or the
    fan-in/fan-out averaged range for FNN); biases start at zero."""
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}; expected one of {KIND_TAGS}")
    scheme = MODEL_KINDS[kind].init_scheme
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(topology.sizes, topology.sizes[1:]):
        if scheme == "fan_avg":
            r = math.sqrt(2.0 / (fan_in + fan_out))
        else:
            r = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NeuralNet(topology, weights, biases, seed, kind)


def _forward_batch(net, x):
    """Activations per layer and the output-layer logits for a batch."""
    acts = [x]
    a = x
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        a = backend.sigmoid(a @ w.T + b)
        acts.append(a)
    logits = a @ net.weights[-1].T + net.biases[-1]
    return acts, logits


def forward(net, x):
    """Class scores (softmax) for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.topology.n_inputs:
        raise DataError(
            f"input length {x.shape} does not match topology input {net.topology.n_inputs}"
        )
    _, logits = _forward_batch(net, x[None, :])
    return backend.softmax(logits)[0]


def forward_scores(net, x_matrix):
    """Softmax scores for a batch, shape (n, n_outputs)."""
    x_matrix = np.asarray(x_matrix, dtype=np.float64)
    _, logits = _forward_batch(net, x_matrix)
    return backend.softmax(logits)


def _loss_and_gradients(net, x, labels, l2_lambda):
    """Mean CE, total regularised loss, and parameter gradients (the same
    path training uses; gradient_check verifies it against differences)."""
    acts, logits = _forward_batch(net, x)
    mean_ce, delta = backend.softmax_xent(logits, labels)
    reg = 0.5 * l2_lambda * sum(float((w * w).sum()) for w in net.weights)
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    up = delta
    for layer in range(len(net.weights) - 1, -1, -1):
        grads_w[layer] = up.T @ acts[layer] + l2_lambda * net.weights[layer]
        grads_b[layer] = up.sum(axis=0)
        if layer > 0:
            up = backend.sigmoid_backward(acts[layer], up @ net.weights[layer])
    return mean_ce, mean_ce + reg, grads_w, grads_b


def _loss_only(net, x, labels, l2_lambda):
    _, logits = _forward_batch(net, x)
    mean_ce, _ = backend.softmax_xent(logits, labels)
    return mean_ce + 0.5 * l2_lambda * sum(float((w * w).sum()) for w in net.weights)


def _stack_dataset(dataset, net):
    pairs = list(dataset)
    if not pairs:
        raise DataError("training dataset is empty")
    x = np.asarray([np.asarray(v, dtype=np.float64) for v, _ in pairs])
    labels = np.asarray([label for _, label in pairs], dtype=np.intp)
    if x.ndim != 2 or x.shape[1] != net.topology.n_inputs:
        raise DataError("training vectors do not match the topology input size")
    if labels.min() < 0 or labels.max() >= net.topology.n_outputs:
        raise DataError(
            f"labels must lie in [0, {net.topology.n_outputs}), got [{labels.min()}, {labels.max()}]"
        )
    return x, labels


def train(net, dataset, config):
    """Full-batch gradient descent; returns (trained copy, loss history).

    history[i] is the regularised objective before the i-th update; the
    loop stops when the mean cross-entropy drops to target_error or the
    iteration budget runs out. A non-finite loss aborts with
    DivergenceError naming the iteration.
    """
    x, labels = _stack_dataset(dataset, net)
    trained = net.copy()
    lr = config.learning_rate
    l2 = config.l2_lambda
    history = []
    for iteration in range(config.max_iterations):
        mean_ce, total, grads_w, grads_b = _loss_and_gradients(trained, x, labels, l2)
        if not math.isfinite(total):
            raise DivergenceError(iteration)
        history.append(total)
        if mean_ce <= config.target_error:
            break
        for layer in range(len(trained.weights)):
            trained.weights[layer] -= lr * grads_w[layer]
            trained.biases[layer] -= lr * grads_b[layer]
    trained.train_digest = config.digest()
    return trained, history


def gradient_check(net, sample, epsilon, l2_lambda=0.0):
    """Max relative disagreement between backprop and central differences.

    sample is one (vector, label) pair or a sequence of them. The relative
    error per parameter is |ga - gn| / max(1e-12, |ga| + |gn|).
    """
    if not 0.0 < epsilon <= 1e-3:
        raise ConfigError(f"epsilon must be in (0, 1e-3], got {epsilon}")
    pairs = sample if isinstance(sample, list) else [sample]
    x = np.asarray([np.asarray(v, dtype=np.float64) for v, _ in pairs])
    labels = np.asarray([label for _, label in pairs], dtype=np.intp)
    _, _, grads_w, grads_b = _loss_and_gradients(net, x, labels, l2_lambda)

    worst = 0.0
    probe = net.copy()
    for params, grads in ((probe.weights, grads_w), (probe.biases, grads_b)):
        for arr, grad in zip(params, grads):
            flat = arr.reshape(-1)
            gflat = np.asarray(grad).reshape(-1)
            for i in range(flat.shape[0]):
                original = flat[i]
                flat[i] = original + epsilon
                up = _loss_only(probe, x, labels, l2_lambda)
                flat[i] = original - epsilon
                down = _loss_only(probe, x, labels, l2_lambda)
                flat[i] = original
                numeric = (up - down) / (2.0 * epsilon)
                analytic = gflat[i]
                err = abs(analytic - numeric) / max(1e-12, abs(analytic) + abs(numeric))
                worst = max(worst, err)
    return worst


def predict(net, x):
    """(label index, scores); ties break to the lowest index."""
    scores = forward(net, x)
    return int(np.argmax(scores)), scores


def predict_batch(net, x_matrix):
    scores = forward_scores(net, x_matrix)
    return np.argmax(scores, axis=1), scores


def save_model(net):
    """Self-describing JSON text; float repr makes the round trip exact."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": net.kind,
        "topology": list(net.topology.sizes),
        "activations": ["sigmoid"] * (net.topology.n_layers - 1) + ["softmax"],
        "weights": [[float(v) for v in w.reshape(-1)] for w in net.weights],
        "biases": [[float(v) for v in b] for b in net.biases],
        "seed": net.seed,
        "train_digest": net.train_digest,
    }
    return json.dumps(doc)


def load_model(text, expected_topology=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelLoadError(f"model document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelLoadError(
            f"unsupported model format version {doc.get('format_version') if isinstance(doc, dict) else None!r}"
        )
    try:
        topology = Topology(tuple(doc["topology"]))
        kind = doc["kind"]
        weights = []
        biases = []
        for i, (fan_in, fan_out) in enumerate(zip(topology.sizes, topology.sizes[1:])):
            w = np.asarray(doc["weights"][i], dtype=np.float64)
            if w.shape[0] != fan_in * fan_out:
                raise ModelLoadError(
                    f"layer {i}: got {w.shape[0]} weights, topology needs {fan_in * fan_out}"
                )
            weights.append(w.reshape(fan_out, fan_in))
            b = np.asarray(doc["biases"][i], dtype=np.float64)
            if b.shape[0] != fan_out:
                raise ModelLoadError(f"layer {i}: got {b.shape[0]} biases, topology needs {fan_out}")
            biases.append(b)
        if len(doc["weights"]) != topology.n_layers or len(doc["biases"]) != topology.n_layers:
            raise ModelLoadError("layer count does not match the topology")
        net = NeuralNet(topology, weights, biases, doc.get("seed"), kind, doc.get("train_digest"))
    except ModelLoadError:
        raise
    except (KeyError, IndexError, TypeError, ValueError, ConfigError) as exc:
        raise ModelLoadError(f"malformed model document: {exc}") from None
    if expected_topology is not None and tuple(expected_topology.sizes) != topology.sizes:
        raise ModelLoadError(
            f"model topology {topology.sizes} does not match expected {tuple(expected_topology.sizes)}"
        )
    return net
