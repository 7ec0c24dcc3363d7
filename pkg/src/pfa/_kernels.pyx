# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Same contract as ``pfa._kernels_py``: flat float64 arrays for the
elementwise ops, 2-D row-major arrays for layer normalization, outputs
caller-allocated.  Activation codes: 0 identity, 1 relu, 2 leaky relu,
3 sigmoid.
"""

from libc.math cimport exp, sqrt

import numpy as np


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def act_forward(double[::1] z, double[::1] out, int kind, double slope):
    cdef Py_ssize_t i, n = z.shape[0]
    if kind == 0:
        for i in range(n):
            out[i] = z[i]
    elif kind == 1:
        for i in range(n):
            out[i] = z[i] if z[i] > 0.0 else 0.0
    elif kind == 2:
        for i in range(n):
            out[i] = z[i] if z[i] > 0.0 else slope * z[i]
    elif kind == 3:
        for i in range(n):
            out[i] = _sigmoid(z[i])
    else:
        raise ValueError(f"unknown activation code {kind}")


def act_backward(double[::1] z, double[::1] a, double[::1] dout,
                 double[::1] out, int kind, double slope):
    cdef Py_ssize_t i, n = z.shape[0]
    if kind == 0:
        for i in range(n):
            out[i] = dout[i]
    elif kind == 1:
        for i in range(n):
            out[i] = dout[i] if z[i] > 0.0 else 0.0
    elif kind == 2:
        for i in range(n):
            out[i] = dout[i] if z[i] > 0.0 else slope * dout[i]
    elif kind == 3:
        for i in range(n):
            out[i] = dout[i] * a[i] * (1.0 - a[i])
    else:
        raise ValueError(f"unknown activation code {kind}")


def layer_norm_forward(double[:, ::1] x, double[::1] gain, double[::1] bias,
                       double eps, double[:, ::1] y, double[:, ::1] xhat,
                       double[::1] inv_std):
    cdef Py_ssize_t i, j, n = x.shape[0], d = x.shape[1]
    cdef double mu, var, dev, istd
    for i in range(n):
        mu = 0.0
        for j in range(d):
            mu += x[i, j]
        mu /= d
        var = 0.0
        for j in range(d):
            dev = x[i, j] - mu
            var += dev * dev
        var /= d
        istd = 1.0 / sqrt(var + eps)
        inv_std[i] = istd
        for j in range(d):
            xhat[i, j] = (x[i, j] - mu) * istd
            y[i, j] = xhat[i, j] * gain[j] + bias[j]


def layer_norm_backward(double[:, ::1] xhat, double[::1] inv_std,
                        double[::1] gain, double[:, ::1] dout,
                        double[:, ::1] dx, double[::1] dgain,
                        double[::1] dbias):
    cdef Py_ssize_t i, j, n = xhat.shape[0], d = xhat.shape[1]
    cdef double m1, m2, g
    for j in range(d):
        dgain[j] = 0.0
        dbias[j] = 0.0
    for i in range(n):
        m1 = 0.0
        m2 = 0.0
        for j in range(d):
            dgain[j] += dout[i, j] * xhat[i, j]
            dbias[j] += dout[i, j]
            g = dout[i, j] * gain[j]
            m1 += g
            m2 += g * xhat[i, j]
        m1 /= d
        m2 /= d
        for j in range(d):
            dx[i, j] = (dout[i, j] * gain[j] - m1 - xhat[i, j] * m2) * inv_std[i]


def adam_update(double[::1] param, double[::1] grad, double[::1] m,
                double[::1] v, double eta, double beta1, double beta2,
                double eps, double bc1, double bc2):
    cdef Py_ssize_t i, n = param.shape[0]
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i]
        param[i] -= eta * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
