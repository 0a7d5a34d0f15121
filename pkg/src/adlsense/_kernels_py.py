"""Pure numpy/Python implementations of the hot kernels.

Mirrors the signatures of the compiled extension ``adlsense._core``; the
active implementation is chosen in :mod:`adlsense.backend`. Inputs are
C-contiguous float64 arrays (the backend wrappers guarantee this).
"""

import numpy as np


def lowpass(x, alpha):
    """Single-pole recursive smoother: y[0]=x[0], y[n]=a*x[n]+(1-a)*y[n-1].

    The recursion is inherently serial, so this fallback runs a Python
    loop; the compiled kernel is the fast path.
    """
    n = x.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.float64)
    beta = 1.0 - alpha
    xs = x.tolist()
    acc = xs[0]
    out = [acc]
    append = out.append
    for v in xs[1:]:
        acc = alpha * v + beta * acc
        append(acc)
    return np.asarray(out, dtype=np.float64)


def peak_indices(x):
    """Indices of strict interior local maxima: x[i-1] < x[i] > x[i+1]."""
    if x.shape[0] < 3:
        return np.empty(0, dtype=np.intp)
    mid = x[1:-1]
    mask = (mid > x[:-2]) & (mid > x[2:])
    return (np.nonzero(mask)[0] + 1).astype(np.intp)


def sigmoid(z):
    """Numerically stable logistic function, elementwise."""
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid_backward(a, upstream):
    """Gradient through a sigmoid given its output a: upstream * a * (1-a)."""
    return upstream * a * (1.0 - a)


def softmax(z):
    """Row-wise softmax with max-shift stabilisation."""
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_xent(logits, labels):
    """Fused softmax + mean cross-entropy + gradient.

    Returns ``(mean_ce, delta)`` where ``delta = (softmax(logits) - onehot) / N``
    is the gradient of the mean cross-entropy w.r.t. the logits. A zero
    probability at a true label yields an infinite loss, which the caller
    treats as divergence.
    """
    n = logits.shape[0]
    probs = softmax(logits)
    rows = np.arange(n)
    with np.errstate(divide="ignore"):
        ce = -np.log(probs[rows, labels]).mean()
    delta = probs
    delta[rows, labels] -= 1.0
    delta /= n
    return ce, delta
