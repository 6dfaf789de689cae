# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense-network kernels; same contract as ``_pykernels``."""
import numpy as np
from libc.math cimport tanh, sqrt

BACKEND = "cython"


cdef inline double _act(double z, int code) noexcept nogil:
    if code == 1:
        return tanh(z)
    if code == 2:
        return z if z > 0.0 else 0.0
    return z


cdef inline double _dact(double a, int code) noexcept nogil:
    if code == 1:
        return 1.0 - a * a
    if code == 2:
        return 1.0 if a > 0.0 else 0.0
    return 1.0


cdef void _dense(const double[:, ::1] W, const double[::1] b, int code,
                 const double[:, ::1] A, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t i, j, l
    cdef Py_ssize_t n = A.shape[0], o = W.shape[0], k = W.shape[1]
    cdef double s
    for i in range(n):
        for j in range(o):
            s = 0.0
            for l in range(k):
                s += A[i, l] * W[j, l]
            out[i, j] = _act(s + b[j], code)


def forward_trace(Ws, bs, acts, X):
    cdef double[:, ::1] A = np.ascontiguousarray(X, dtype=np.float64)
    trace = [np.asarray(A)]
    for W, b, code in zip(Ws, bs, acts):
        out = np.empty((A.shape[0], W.shape[0]))
        _dense(W, b, code, A, out)
        trace.append(out)
        A = out
    return trace


def forward_batch(Ws, bs, acts, X):
    trace = forward_trace(Ws, bs, acts, X)
    return trace[len(trace) - 1]


cdef void _layer_back(const double[:, ::1] W, const double[:, ::1] a_in,
                      double[:, ::1] delta, double[:, ::1] dW, double[::1] db,
                      double[:, ::1] back, bint want_params) noexcept nogil:
    cdef Py_ssize_t i, j, l
    cdef Py_ssize_t n = delta.shape[0], o = W.shape[0], k = W.shape[1]
    cdef double s, dj
    if want_params:
        for j in range(o):
            s = 0.0
            for i in range(n):
                s += delta[i, j]
            db[j] = s
            for l in range(k):
                s = 0.0
                for i in range(n):
                    s += delta[i, j] * a_in[i, l]
                dW[j, l] = s
    for i in range(n):
        for l in range(k):
            back[i, l] = 0.0
        for j in range(o):
            dj = delta[i, j]
            for l in range(k):
                back[i, l] += dj * W[j, l]


cdef void _scale_by_dact(double[:, ::1] v, const double[:, ::1] a, int code) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(v.shape[0]):
        for j in range(v.shape[1]):
            v[i, j] *= _dact(a[i, j], code)


def _backprop(Ws, acts, trace, upstream, bint want_params):
    cdef Py_ssize_t L = len(Ws), kk
    cdef double[:, ::1] delta = np.array(upstream, dtype=np.float64, order="C")
    cdef double[:, ::1] back
    _scale_by_dact(delta, trace[L], acts[L - 1])
    grads = [None] * L
    for kk in range(L - 1, -1, -1):
        W = Ws[kk]
        back = np.empty((delta.shape[0], W.shape[1]))
        if want_params:
            dW = np.empty_like(W)
            db = np.empty(W.shape[0])
        else:
            dW = np.empty((1, 1))
            db = np.empty(1)
        _layer_back(W, trace[kk], delta, dW, db, back, want_params)
        grads[kk] = (dW, db)
        if kk > 0:
            _scale_by_dact(back, trace[kk], acts[kk - 1])
            delta = back
    return grads, np.asarray(back)


def train_step(Ws, bs, acts, X, double lr):
    trace = forward_trace(Ws, bs, acts, X)
    cdef double[:, ::1] x = trace[0]
    cdef double[:, ::1] y = trace[len(trace) - 1]
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double total = 0.0, r, c = 2.0 / (n * m)
    upstream = np.empty((n, m))
    cdef double[:, ::1] up = upstream
    for i in range(n):
        for j in range(m):
            r = y[i, j] - x[i, j]
            total += r * r
            up[i, j] = c * r
    grads, _ = _backprop(Ws, acts, trace, upstream, True)
    cdef double[:, ::1] Wv
    cdef double[::1] bv
    cdef const double[:, ::1] dWv
    cdef const double[::1] dbv
    cdef Py_ssize_t k
    for k in range(len(Ws)):
        Wv = Ws[k]
        bv = bs[k]
        dWv = grads[k][0]
        dbv = grads[k][1]
        for i in range(Wv.shape[0]):
            bv[i] -= lr * dbv[i]
            for j in range(Wv.shape[1]):
                Wv[i, j] -= lr * dWv[i, j]
    return total / (n * m)


def distance_batch(Ws, bs, acts, X):
    trace = forward_trace(Ws, bs, acts, X)
    cdef double[:, ::1] x = trace[0]
    cdef double[:, ::1] y = trace[len(trace) - 1]
    cdef Py_ssize_t i, j
    cdef double s, r
    out = np.empty(x.shape[0])
    cdef double[::1] d = out
    for i in range(x.shape[0]):
        s = 0.0
        for j in range(x.shape[1]):
            r = x[i, j] - y[i, j]
            s += r * r
        d[i] = sqrt(s)
    return out


def distance_and_grad(Ws, bs, acts, X):
    trace = forward_trace(Ws, bs, acts, X)
    cdef double[:, ::1] x = trace[0]
    cdef double[:, ::1] y = trace[len(trace) - 1]
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double s, r
    dist = np.empty(n)
    unit = np.empty((n, m))
    cdef double[::1] d = dist
    cdef double[:, ::1] u = unit
    for i in range(n):
        s = 0.0
        for j in range(m):
            r = x[i, j] - y[i, j]
            u[i, j] = r
            s += r * r
        d[i] = sqrt(s)
        for j in range(m):
            u[i, j] = u[i, j] / d[i] if d[i] > 0.0 else 0.0
    _, jtu = _backprop(Ws, acts, trace, unit, False)
    cdef double[:, ::1] g = jtu
    for i in range(n):
        for j in range(m):
            g[i, j] = u[i, j] - g[i, j]
    return dist, jtu
