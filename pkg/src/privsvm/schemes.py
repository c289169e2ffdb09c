"""Turning label-confidence estimates into instance weights.

The conditional label expectation eta(x) = E[y | x] is either supplied
(synthetic data with a known posterior) or estimated from privileged
features by Nadaraya-Watson smoothing.  The probability of the observed
label, w_i = (1 + y_i eta_i) / 2, is then sharpened or flattened into
weights c_i = w_i^tau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

__all__ = [
    "ConfidenceScores",
    "nadaraya_watson",
    "probability_weights",
    "weighted_risk",
    "hinge_losses",
    "zero_one_losses",
]


@dataclass
class ConfidenceScores:
    """Estimated eta(x_i) in [-1, 1], plus an underflow indicator."""

    eta: np.ndarray
    underflow: bool = False

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float).ravel()
        if np.any(np.abs(eta) > 1.0 + 1e-12) or not np.all(np.isfinite(eta)):
            raise ValueError("confidence scores must lie in [-1, 1]")
        self.eta = np.clip(eta, -1.0, 1.0)


def nadaraya_watson(train, queries=None, bandwidth: float = 1.0,
                    ) -> ConfidenceScores:
    """Kernel-regression estimate of E[y | x] with the Gaussian kernel
    exp(-||x - x'||^2 / (2 h^2)).

    ``train`` is a Dataset or an (X, y) pair; ``queries`` defaults to the
    training inputs themselves.  Where every kernel weight underflows to
    zero the estimate falls back to 0 (no confidence either way) and the
    underflow flag is set.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if isinstance(train, Dataset):
        X, y = train.X, train.y
    else:
        X, y = train
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError("label count mismatch")
    E = X if queries is None else np.atleast_2d(
        np.asarray(queries, dtype=float))
    sq = (np.sum(E * E, axis=1)[:, None] + np.sum(X * X, axis=1)[None, :]
          - 2.0 * (E @ X.T))
    np.maximum(sq, 0.0, out=sq)
    # subtract the row minimum before exponentiating so at least one
    # weight per row survives in double precision; the ratio is unchanged
    row_min = sq.min(axis=1)
    underflow = bool(np.any(np.exp(-row_min / (2.0 * bandwidth**2)) == 0.0))
    sq -= row_min[:, None]
    W = np.exp(-sq / (2.0 * bandwidth**2))
    eta = (W @ y) / W.sum(axis=1)
    return ConfidenceScores(np.clip(eta, -1.0, 1.0), underflow=underflow)


def probability_weights(eta, y, tau: float = 1.0) -> np.ndarray:
    """Weights c_i = w_i^tau with w_i = (1 + y_i eta_i) / 2.

    tau = 0 gives uniform weights (0^0 = 1 by convention), tau = 1 the
    plain label probabilities; larger tau suppresses doubtful labels
    harder.
    """
    if isinstance(eta, ConfidenceScores):
        eta = eta.eta
    eta = np.asarray(eta, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if eta.shape != y.shape:
        raise ValueError("eta/label length mismatch")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    w = 0.5 * (1.0 + y * eta)
    return w**tau


def weighted_risk(f, y, c, loss=None) -> float:
    """Weighted empirical risk (1/n) sum_i (c_i / cbar) l(y_i f_i).

    Normalizing the weights to mean one makes uniform weights reproduce
    the plain average loss; equivalently this is sum_i c_i l_i / sum_i c_i.
    """
    f = np.asarray(f, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    if not (f.shape == y.shape == c.shape):
        raise ValueError("decision/label/weight length mismatch")
    losses = (hinge_losses if loss is None else loss)(y, f)
    total = float(np.sum(c))
    if not total > 0:
        raise ValueError("weights must have positive sum")
    return float(c @ losses) / total


def hinge_losses(y, f) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    f = np.asarray(f, dtype=float).ravel()
    return np.maximum(0.0, 1.0 - y * f)


def zero_one_losses(y, f) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    f = np.asarray(f, dtype=float).ravel()
    return (y * f <= 0).astype(float)
