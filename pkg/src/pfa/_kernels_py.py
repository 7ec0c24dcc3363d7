"""Pure-numpy kernel backend.

Mirrors the signatures of the compiled extension ``pfa._kernels`` exactly:
every function fills caller-allocated output arrays so the two backends are
drop-in replacements for each other.  Activation codes: 0 identity, 1 relu,
2 leaky relu, 3 sigmoid.
"""

import numpy as np


def act_forward(z, out, kind, slope):
    """Elementwise activation of a flat float64 array into ``out``."""
    if kind == 0:
        np.copyto(out, z)
    elif kind == 1:
        np.maximum(z, 0.0, out=out)
    elif kind == 2:
        np.multiply(z, np.where(z > 0.0, 1.0, slope), out=out)
    elif kind == 3:
        # split by sign so exp never overflows
        pos = z >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
    else:
        raise ValueError(f"unknown activation code {kind}")


def act_backward(z, a, dout, out, kind, slope):
    """Chain ``dout`` through the activation; ``a`` is the forward output."""
    if kind == 0:
        np.copyto(out, dout)
    elif kind == 1:
        np.multiply(dout, z > 0.0, out=out)
    elif kind == 2:
        np.multiply(dout, np.where(z > 0.0, 1.0, slope), out=out)
    elif kind == 3:
        np.multiply(dout, a * (1.0 - a), out=out)
    else:
        raise ValueError(f"unknown activation code {kind}")


def layer_norm_forward(x, gain, bias, eps, y, xhat, inv_std):
    """Per-row normalization over the feature axis with learned scale/shift."""
    mu = x.mean(axis=1)
    var = x.var(axis=1)
    inv_std[:] = 1.0 / np.sqrt(var + eps)
    np.multiply(x - mu[:, None], inv_std[:, None], out=xhat)
    np.multiply(xhat, gain, out=y)
    y += bias


def layer_norm_backward(xhat, inv_std, gain, dout, dx, dgain, dbias):
    np.sum(dout * xhat, axis=0, out=dgain)
    np.sum(dout, axis=0, out=dbias)
    dxh = dout * gain
    m1 = dxh.mean(axis=1)
    m2 = (dxh * xhat).mean(axis=1)
    np.multiply(dxh - m1[:, None] - xhat * m2[:, None], inv_std[:, None], out=dx)


def adam_update(param, grad, m, v, eta, beta1, beta2, eps, bc1, bc2):
    """One bias-corrected Adam step, in place on ``param``/``m``/``v``.

    ``bc1``/``bc2`` are the precomputed corrections 1 - beta1**t, 1 - beta2**t.
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    param -= eta * (m / bc1) / (np.sqrt(v / bc2) + eps)
