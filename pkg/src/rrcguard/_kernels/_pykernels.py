"""Pure numpy implementations of the dense-network kernels.

Layer weights are ``(out, in)`` float64 arrays; activation codes are
0 = identity, 1 = tanh, 2 = relu. Batches are ``(rows, features)``.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def _activate(z, code):
    if code == 1:
        return np.tanh(z)
    if code == 2:
        return np.maximum(z, 0.0)
    return z


def _derivative(a, code):
    # expressed through the post-activation output
    if code == 1:
        return 1.0 - a * a
    if code == 2:
        return (a > 0.0).astype(np.float64)
    return np.ones_like(a)


def forward_batch(Ws, bs, acts, X):
    a = np.asarray(X, dtype=np.float64)
    for W, b, code in zip(Ws, bs, acts):
        a = _activate(a @ W.T + b, code)
    return a


def forward_trace(Ws, bs, acts, X):
    """Return ``[X, a_1, ..., a_L]`` for a batch."""
    a = np.asarray(X, dtype=np.float64)
    trace = [a]
    for W, b, code in zip(Ws, bs, acts):
        a = _activate(a @ W.T + b, code)
        trace.append(a)
    return trace


def _backprop(Ws, acts, trace, upstream):
    """Push dL/d(output) back through the stack.

    Returns per-layer ``(dW, db)`` and dL/d(input).
    """
    grads = [None] * len(Ws)
    delta = upstream * _derivative(trace[-1], acts[-1])
    for k in range(len(Ws) - 1, -1, -1):
        grads[k] = (delta.T @ trace[k], delta.sum(axis=0))
        back = delta @ Ws[k]
        if k > 0:
            delta = back * _derivative(trace[k], acts[k - 1])
    return grads, back


def train_step(Ws, bs, acts, X, lr):
    """One gradient-descent step on mean squared reconstruction error.

    Updates ``Ws``/``bs`` in place and returns the pre-update loss.
    """
    X = np.asarray(X, dtype=np.float64)
    trace = forward_trace(Ws, bs, acts, X)
    resid = trace[-1] - X
    loss = float(np.mean(resid * resid))
    upstream = 2.0 * resid / resid.size
    grads, _ = _backprop(Ws, acts, trace, upstream)
    for k, (dW, db) in enumerate(grads):
        Ws[k] -= lr * dW
        bs[k] -= lr * db
    return loss


def distance_batch(Ws, bs, acts, X):
    X = np.asarray(X, dtype=np.float64)
    r = X - forward_batch(Ws, bs, acts, X)
    return np.sqrt(np.sum(r * r, axis=1))


def distance_and_grad(Ws, bs, acts, X):
    """Euclidean reconstruction distance and its input gradient, per row.

    Rows with zero distance get a zero gradient.
    """
    X = np.asarray(X, dtype=np.float64)
    trace = forward_trace(Ws, bs, acts, X)
    r = X - trace[-1]
    d = np.sqrt(np.sum(r * r, axis=1))
    safe = np.where(d > 0.0, d, 1.0)
    u = r / safe[:, None]
    u[d == 0.0] = 0.0
    # d = |x - f(x)|  ->  grad = u - J^T u
    _, jtu = _backprop(Ws, acts, trace, u)
    return d, u - jtu
