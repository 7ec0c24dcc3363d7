"""Scalar training losses and their exact gradients w.r.t. predicted probabilities.

Five losses: per-item binary cross-entropy, its batch mean (prediction
loss), the selection-rate gap over predicted probabilities (fairness loss),
the group-inference BCE (privacy loss), and the both-sided confusion loss
that is minimized when every discriminator output sits at 0.5 (fooling
loss).  The generator composite is a nonnegative weighted sum of
prediction, fooling, and fairness terms.

Probabilities are clamped into [CLAMP_EPS, 1 - CLAMP_EPS] before any log,
so every loss is finite.  All functions are pure and thread-safe.  Only the
binary two-group setting is supported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pfa.errors import DegenerateGroupError

CLAMP_EPS = 1e-7


def clamp(p):
    """Clip probabilities away from 0/1 so logs stay finite."""
    return np.clip(p, CLAMP_EPS, 1.0 - CLAMP_EPS)


@dataclass
class CoeffTriple:
    """Nonnegative weights of the prediction/fooling/fairness composite."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("coefficients must be nonnegative")

    def normalized(self):
        total = self.alpha + self.beta + self.gamma
        if total <= 0:
            raise ValueError("cannot normalize an all-zero triple")
        return CoeffTriple(self.alpha / total, self.beta / total, self.gamma / total)

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma)


@dataclass
class BatchPredictions:
    """One batch's task/group probabilities and true labels, equal lengths."""

    y_hat: np.ndarray
    s_hat: np.ndarray
    y: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        n = len(self.y)
        if not (len(self.y_hat) == len(self.s_hat) == len(self.s) == n):
            raise ValueError("batch fields must have equal lengths")
        self.y_hat = clamp(np.asarray(self.y_hat, dtype=np.float64))
        self.s_hat = clamp(np.asarray(self.s_hat, dtype=np.float64))


def bce(y, y_hat):
    """Elementwise binary cross-entropy, >= 0; clamped before the logs."""
    p = clamp(np.asarray(y_hat, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    return -(y * np.log(p) + (1.0 - y) * np.log1p(-p))


def prediction_loss(y, y_hat):
    """Mean BCE of the task labels."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("prediction loss of an empty batch")
    return float(bce(y, y_hat).mean())


def prediction_loss_grad(y, y_hat):
    """d(mean BCE)/d(y_hat): (p - y) / (n * p * (1 - p)) on clamped p."""
    p = clamp(np.asarray(y_hat, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    return (p - y) / (len(p) * p * (1.0 - p))


def fairness_loss(y_hat, s):
    """Absolute gap between group means of the predicted probabilities."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    s = np.asarray(s)
    in1 = s == 1
    n0, n1 = int((~in1).sum()), int(in1.sum())
    if n0 == 0 or n1 == 0:
        raise DegenerateGroupError("fairness loss needs both groups present")
    return float(abs(y_hat[~in1].mean() - y_hat[in1].mean()))


def fairness_loss_grad(y_hat, s):
    """Subgradient of the group-mean gap; 0 at the tie."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    s = np.asarray(s)
    in1 = s == 1
    n0, n1 = int((~in1).sum()), int(in1.sum())
    if n0 == 0 or n1 == 0:
        raise DegenerateGroupError("fairness loss needs both groups present")
    diff = y_hat[~in1].mean() - y_hat[in1].mean()
    sign = np.sign(diff)
    g = np.where(in1, -sign / n1, sign / n0)
    return g


def privacy_loss(s, s_hat):
    """Mean BCE of the group labels (the inference network's objective)."""
    return prediction_loss(s, s_hat)


def privacy_loss_grad(s, s_hat):
    return prediction_loss_grad(s, s_hat)


def fooling_loss(d_out):
    """Mean of -[log p + log(1-p)]; minimized (2 ln 2) when every p is 0.5."""
    p = clamp(np.asarray(d_out, dtype=np.float64))
    return float(-(np.log(p) + np.log1p(-p)).mean())


def fooling_loss_grad(d_out):
    """d(fooling)/dp = (2p - 1) / (n * p * (1 - p)) on clamped p."""
    p = clamp(np.asarray(d_out, dtype=np.float64))
    return (2.0 * p - 1.0) / (len(p) * p * (1.0 - p))


def generator_loss(l_pred, l_fool, l_fair, coeffs):
    """Weighted composite alpha*l_pred + beta*l_fool + gamma*l_fair."""
    return coeffs.alpha * l_pred + coeffs.beta * l_fool + coeffs.gamma * l_fair


def batch_losses(batch, d_out):
    """All four scalar losses of one batch, as a dict keyed by name."""
    return {
        "prediction": prediction_loss(batch.y, batch.y_hat),
        "fairness": fairness_loss(batch.y_hat, batch.s),
        "privacy": privacy_loss(batch.s, batch.s_hat),
        "fooling": fooling_loss(d_out),
    }
