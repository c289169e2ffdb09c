"""Optimality diagnostics: KKT residuals, offset uniqueness, dual uniqueness.

Stationarity is measured in function space through Gram products (the
feature maps are never materialized), so all residuals are exact under the
kernel trick up to floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .svmplus import SvmPlusModel
from .wsvm import WsvmModel, offset_interval

__all__ = [
    "KktReport",
    "IndexSets",
    "check_wsvm_kkt",
    "check_svmplus_kkt",
    "b_uniqueness",
    "BUniquenessResult",
    "dual_uniqueness_condition",
]

RANK_TOL = 1e-10


@dataclass
class KktReport:
    residuals: dict[str, float]
    max_violation: float
    gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def to_text(self) -> str:
        lines = [f"{key} {value:.6e}" for key, value in self.residuals.items()]
        lines.append(f"max_violation {self.max_violation:.6e}")
        lines.append(f"gap {self.gap:.6e}")
        lines.append(f"tol {self.tol:.6e}")
        lines.append(f"pass {int(self.passed)}")
        return "\n".join(lines)


@dataclass
class IndexSets:
    """I+/I- by label; I0 (margin violated) and I1 (margin active or violated)."""

    i_plus: np.ndarray
    i_minus: np.ndarray
    i_0: np.ndarray
    i_1: np.ndarray

    @staticmethod
    def from_decision(y: np.ndarray, f: np.ndarray,
                      tol: float = 1e-8) -> "IndexSets":
        margin = y * f
        return IndexSets(
            i_plus=np.flatnonzero(y > 0),
            i_minus=np.flatnonzero(y < 0),
            i_0=np.flatnonzero(margin < 1.0 - tol),
            i_1=np.flatnonzero(margin <= 1.0 + tol),
        )


def _report(residuals: dict[str, float], gap: float, tol: float) -> KktReport:
    clean = {k: float(abs(v)) for k, v in residuals.items()}
    return KktReport(
        residuals=clean,
        max_violation=max(clean.values(), default=0.0),
        gap=float(gap),
        tol=tol,
    )


def check_wsvm_kkt(model: WsvmModel, tol: float = 1e-8) -> KktReport:
    y = model.data.y
    f = model.decision_train
    alpha, beta, c, xi = model.alpha, model.beta, model.c, model.xi
    residuals = {
        "stationarity_b": np.sum(alpha * y),
        "stationarity_xi": np.max(np.abs(alpha + beta - c)),
        "primal_feasibility_margin": np.max(
            np.maximum(0.0, 1.0 - y * f - xi)),
        "primal_feasibility_slack": np.max(np.maximum(0.0, -xi)),
        "dual_feasibility_alpha": np.max(np.maximum(0.0, -alpha)),
        "dual_feasibility_beta": np.max(np.maximum(0.0, -beta)),
        "complementarity_margin": np.max(
            np.abs(alpha * (xi - 1.0 + y * f))),
        "complementarity_slack": np.max(np.abs(beta * xi)),
    }
    gap = model.objective_primal - model.objective_dual
    residuals["gap"] = gap / (1.0 + abs(model.objective_primal))
    return _report(residuals, gap, tol)


def check_svmplus_kkt(model: SvmPlusModel, tol: float = 1e-8) -> KktReport:
    y = model.data.y
    f = model.decision_train
    alpha, beta, at, xi = model.alpha, model.beta, model.alpha_tilde, model.xi
    C = model.C
    # correcting-space stationarity: Kt at = gamma (xi - bt)
    corr = model.gram_priv @ at - model.gamma * (xi - model.b_tilde)
    residuals = {
        "stationarity_b": np.sum(alpha * y),
        "stationarity_b_tilde": np.sum(alpha + beta - C),
        "stationarity_w_tilde": np.max(np.abs(corr)),
        "primal_feasibility_margin": np.max(
            np.maximum(0.0, 1.0 - y * f - xi)),
        "primal_feasibility_slack": np.max(np.maximum(0.0, -xi)),
        "dual_feasibility_alpha": np.max(np.maximum(0.0, -alpha)),
        "dual_feasibility_beta": np.max(np.maximum(0.0, -beta)),
        "complementarity_margin": np.max(
            np.abs(alpha * (xi - 1.0 + y * f))),
        "complementarity_slack": np.max(np.abs(beta * xi)),
    }
    gap = model.objective_primal - model.objective_dual
    residuals["gap"] = gap / (1.0 + abs(model.objective_primal))
    return _report(residuals, gap, tol)


@dataclass
class BUniquenessResult:
    unique: bool
    interval: tuple[float, float]
    condition: int | None  # which balance condition triggered (1 or 2)
    balance_sums: tuple[float, float, float, float] = field(
        default=(0.0, 0.0, 0.0, 0.0))

    def to_text(self) -> str:
        lo, hi = self.interval
        return (f"unique {int(self.unique)}\n"
                f"interval {lo:.17g} {hi:.17g}\n"
                f"condition {self.condition if self.condition else 0}")


def b_uniqueness(model: WsvmModel, tol: float = 1e-8) -> BUniquenessResult:
    """Evaluate both weight-balance conditions for offset non-uniqueness."""
    y = model.data.y
    f = model.decision_train
    sets = IndexSets.from_decision(y, f, tol=max(tol, 1e-8))
    c = model.c
    in_0 = np.zeros(model.data.n, dtype=bool)
    in_0[sets.i_0] = True
    in_1 = np.zeros(model.data.n, dtype=bool)
    in_1[sets.i_1] = True
    pos = y > 0
    s1_left = float(np.sum(c[~pos & in_0]))
    s1_right = float(np.sum(c[pos & in_1]))
    s2_left = float(np.sum(c[pos & in_0]))
    s2_right = float(np.sum(c[~pos & in_1]))
    scale = 1.0 + float(np.sum(c))
    cond: int | None = None
    if abs(s1_left - s1_right) <= tol * scale:
        cond = 1
    elif abs(s2_left - s2_right) <= tol * scale:
        cond = 2
    interval = offset_interval(model)
    return BUniquenessResult(
        unique=cond is None,
        interval=interval,
        condition=cond,
        balance_sums=(s1_left, s1_right, s2_left, s2_right),
    )


def dual_uniqueness_condition(K: np.ndarray, y, tol: float = RANK_TOL) -> bool:
    """True iff Null(YKY), 1-perp and y-perp intersect only in 0.

    Checked as the stacked matrix [YKY; 1'; y'] having numerical rank n at
    relative threshold tol.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = K.shape[0]
    if K.shape != (n, n):
        raise ValueError("K must be square")
    Q = (y[:, None] * y[None, :]) * K
    stacked = np.vstack([Q, np.ones((1, n)), y[None, :]])
    s = np.linalg.svd(stacked, compute_uv=False)
    return bool(s[-1] > tol * s[0])
