"""Kernel functions and Gram-matrix construction.

The Gaussian RBF kernel is parametrized as

    k(x, x') = exp(-||x - x'||^2 / (2 h^2))

with bandwidth h > 0; this convention is shared by the solvers, the
Nadaraya-Watson estimator, and the CLI config format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LINEAR = "linear"
GAUSSIAN_RBF = "gaussian-rbf"

__all__ = ["KernelSpec", "gram", "LINEAR", "GAUSSIAN_RBF"]


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in (LINEAR, GAUSSIAN_RBF):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == GAUSSIAN_RBF:
            if self.bandwidth is None or not self.bandwidth > 0:
                raise ValueError("gaussian-rbf requires bandwidth > 0")

    def describe(self) -> str:
        if self.kind == LINEAR:
            return LINEAR
        return f"{GAUSSIAN_RBF} {self.bandwidth:.17g}"

    @staticmethod
    def parse(text: str) -> "KernelSpec":
        parts = text.split()
        if parts[0] == LINEAR:
            return KernelSpec(LINEAR)
        return KernelSpec(GAUSSIAN_RBF, float(parts[1]))


def _features(a) -> np.ndarray:
    X = getattr(a, "X", a)
    return np.atleast_2d(np.asarray(X, dtype=float))


def gram(spec: KernelSpec, a, b=None) -> np.ndarray:
    """Pairwise kernel evaluations; entry (i, j) = k(a_i, b_j).

    With ``b`` omitted (or identical to ``a``) the result is symmetrized so
    it satisfies the Gram-matrix invariants exactly.
    """
    same = b is None or b is a
    A = _features(a)
    B = A if same else _features(b)
    if A.shape[1] != B.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: {A.shape[1]} vs {B.shape[1]}"
        )
    if spec.kind == LINEAR:
        G = A @ B.T
    else:
        sq = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        np.maximum(sq, 0.0, out=sq)
        G = np.exp(-sq / (2.0 * spec.bandwidth**2))
    if same:
        G = 0.5 * (G + G.T)
    return G
