"""The constructive bridge between weighted SVM and SVM+ solutions.

Given a WSVM solution, the statistic rho = <c - cbar 1, xi*> decides
whether any correcting space can reproduce it; when rho >= 0 a minimal
one-dimensional privileged feature set does the job.  In the opposite
direction, c = alpha + beta extracted from an SVM+ solution always yields
an equivalent WSVM.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .data import PrivilegedSet
from .kernels import KernelSpec, LINEAR
from .kkt import dual_uniqueness_condition
from .svmplus import SvmPlusModel
from .wsvm import WsvmModel, check_weights

__all__ = [
    "NotRepresentableError",
    "EquivalenceReport",
    "rho",
    "weights_from_svmplus",
    "necessary_condition",
    "construct_privileged",
    "ConstructedPrivileged",
    "family_membership",
    "check_rho_zero_reduction",
    "RhoZeroDiagnostic",
    "equivalence_report",
]


class NotRepresentableError(ValueError):
    """No correcting space reproduces the given WSVM solution."""


def _rho_tol(c: np.ndarray, xi: np.ndarray) -> float:
    return 1e-10 * (1.0 + np.linalg.norm(xi) * np.linalg.norm(c))


def rho(c, xi) -> tuple[float, float | None]:
    """Both forms of the weighted-minus-mean slack statistic.

    Returns (<c - cbar 1, xi>, sum_i w_i xi_i - mean(xi)) where w are the
    weights normalized to sum one.  The normalized form is None when the
    weights sum to zero.
    """
    c = np.asarray(c, dtype=float).ravel()
    xi = np.asarray(xi, dtype=float).ravel()
    if c.shape != xi.shape:
        raise ValueError("weight and slack vectors must have equal length")
    unnormalized = float((c - np.mean(c)) @ xi)
    total = float(np.sum(c))
    normalized = unnormalized / total if total > 0 else None
    return unnormalized, normalized


def weights_from_svmplus(model: SvmPlusModel) -> np.ndarray:
    """Equivalent WSVM weights c = alpha + beta."""
    return model.alpha + model.beta


def necessary_condition(c, h, tol: float | None = None) -> bool:
    """Does <c - cbar 1, h> >= 0 hold (up to rounding)?

    Every SVM+ solution satisfies this with the weights it induces; a WSVM
    solution violating it for all equivalent weights is out of reach.
    """
    c = np.asarray(c, dtype=float).ravel()
    h = np.asarray(h, dtype=float).ravel()
    value, _ = rho(c, h)
    if tol is None:
        tol = _rho_tol(c, h)
    return value >= -tol


@dataclass
class ConstructedPrivileged:
    C: float
    gamma: float
    priv: PrivilegedSet  # one-dimensional features xt_i = xi_i - bt
    w_tilde: float
    b_tilde: float


def construct_privileged(model: WsvmModel, c=None) -> ConstructedPrivileged:
    """Build (C, gamma, privileged features) making the WSVM solution an
    SVM+ solution, with the minimal one-dimensional linear correcting space.

    Requires rho(c, xi*) >= 0; otherwise no correcting space exists for
    this weighting and NotRepresentableError is raised.
    """
    if c is None:
        c = model.c
    c = check_weights(np.asarray(c, dtype=float), model.data.n)
    xi = model.xi
    unnorm, _ = rho(c, xi)
    tol = _rho_tol(c, xi)
    if unnorm < -tol:
        raise NotRepresentableError(
            f"rho(c, xi*) = {unnorm:.6g} < 0: the weighted average slack is "
            "below the plain average, so no correcting space reproduces "
            "this solution"
        )
    gamma = max(unnorm, 0.0)
    b_tilde = float(c @ xi / np.sum(c))
    features = (xi - b_tilde)[:, None]
    return ConstructedPrivileged(
        C=float(np.mean(c)),
        gamma=gamma,
        priv=PrivilegedSet(features),
        w_tilde=1.0,
        b_tilde=b_tilde,
    )


def family_membership(candidate, model: WsvmModel, tol: float = 1e-6) -> bool:
    """Decide whether ``candidate`` belongs to the equivalent-weight family
    of the given WSVM solution.

    Fast path (dual solution unique): member iff the candidate agrees with
    alpha* on positive-slack points and dominates it on zero-slack points.
    General path: linear feasibility for a split c = mu + nu with mu
    matching the dual solution's expansion and nu supported on zero-slack
    points.
    """
    c = np.asarray(candidate, dtype=float).ravel()
    n = model.data.n
    if c.shape[0] != n:
        raise ValueError("candidate length mismatch")
    if np.any(c < -tol):
        return False
    alpha = model.alpha
    xi = model.xi
    zero_slack = xi <= tol
    K = model.gram_train
    if dual_uniqueness_condition(K, model.data.y):
        ok_pos = np.all(np.abs(c[~zero_slack] - alpha[~zero_slack]) <= tol)
        ok_zero = np.all(c[zero_slack] >= alpha[zero_slack] - tol)
        return bool(ok_pos and ok_zero)
    return _family_membership_lp(c, model, zero_slack, tol)


def _family_membership_lp(c, model, zero_slack, tol) -> bool:
    """Phase-1 feasibility: mu >= 0 with KY mu = KY alpha*, y'mu = 0,
    1'mu = 1'alpha*, mu <= c, and mu = c off the zero-slack set."""
    n = model.data.n
    y = model.data.y
    K = model.gram_train
    alpha = model.alpha
    free = np.flatnonzero(zero_slack)
    fixed = np.flatnonzero(~zero_slack)
    rhs_full = np.concatenate([K @ (y * alpha), [0.0], [np.sum(alpha)]])
    A_full = np.vstack([K * y[None, :], y[None, :], np.ones((1, n))])
    rhs = rhs_full - A_full[:, fixed] @ c[fixed]
    A = A_full[:, free]
    if free.size == 0:
        return bool(np.max(np.abs(rhs)) <= tol * (1.0 + np.abs(rhs_full).max()))
    scale = tol * (1.0 + np.abs(rhs_full).max())
    A_ub = np.vstack([A, -A])
    b_ub = np.concatenate([rhs + scale, -(rhs - scale)])
    res = linprog(
        c=np.zeros(free.size),
        A_ub=A_ub,
        b_ub=b_ub,
        bounds=[(0.0, c[j] + tol) for j in free],
        method="highs",
    )
    return bool(res.status == 0)


@dataclass
class RhoZeroDiagnostic:
    applicable: bool
    branch: str
    ok: bool
    detail: str


def check_rho_zero_reduction(model: SvmPlusModel,
                             tol: float = 1e-6) -> RhoZeroDiagnostic:
    """Verify the equality-regime dichotomy: with the weighted and plain
    average losses equal, either gamma > 0 and the correcting function is
    constant, or gamma = 0 with full-rank design and alpha + beta = C."""
    ab = model.alpha + model.beta
    total = float(np.sum(ab))
    h = model.h
    if total <= 0:
        return RhoZeroDiagnostic(False, "none", False, "zero dual mass")
    lhs = float(ab @ h) / total
    mean_h = float(np.mean(h))
    scale = 1.0 + abs(mean_h)
    if lhs - mean_h > tol * scale:
        return RhoZeroDiagnostic(
            False, "none", False,
            f"not in equality regime (slack {lhs - mean_h:.3e})")
    if model.gamma > 0:
        wt_norm_sq = float(
            model.alpha_tilde @ model.gram_priv @ model.alpha_tilde
        ) / model.gamma**2
        flat = np.max(np.abs(model.xi - model.b_tilde))
        ok = wt_norm_sq <= tol and flat <= tol
        return RhoZeroDiagnostic(
            True, "constant-correction", bool(ok),
            f"||wt||^2 = {wt_norm_sq:.3e}, max |xi - bt| = {flat:.3e}")
    resid = float(np.max(np.abs(ab - model.C)))
    return RhoZeroDiagnostic(
        True, "soft-margin-reduction", bool(resid <= tol),
        f"max |alpha + beta - C| = {resid:.3e}")


@dataclass
class EquivalenceReport:
    rho_unnormalized: float
    rho_normalized: float | None
    necessary_condition_holds: bool
    constructed_C: float | None = None
    constructed_gamma: float | None = None
    constructed_features: np.ndarray | None = None
    constructed_b_tilde: float | None = None
    constructed_w_tilde: float | None = None
    family_membership: bool | None = None

    def to_text(self) -> str:
        norm = ("nan" if self.rho_normalized is None
                else f"{self.rho_normalized:.17g}")
        lines = [
            f"rho_unnormalized {self.rho_unnormalized:.17g}",
            f"rho_normalized {norm}",
            f"necessary_condition {int(self.necessary_condition_holds)}",
        ]
        if self.constructed_C is not None:
            lines += [
                f"constructed_C {self.constructed_C:.17g}",
                f"constructed_gamma {self.constructed_gamma:.17g}",
                f"constructed_b_tilde {self.constructed_b_tilde:.17g}",
                f"constructed_w_tilde {self.constructed_w_tilde:.17g}",
            ]
        else:
            lines.append("constructed none")
        if self.family_membership is not None:
            lines.append(f"family_membership {int(self.family_membership)}")
        return "\n".join(lines)


def equivalence_report(model: WsvmModel, c=None,
                       candidate=None) -> EquivalenceReport:
    if c is None:
        c = model.c
    unnorm, norm = rho(c, model.xi)
    holds = necessary_condition(c, model.h)
    report = EquivalenceReport(
        rho_unnormalized=unnorm,
        rho_normalized=norm,
        necessary_condition_holds=holds,
    )
    try:
        built = construct_privileged(model, c)
    except NotRepresentableError:
        built = None
    if built is not None:
        report.constructed_C = built.C
        report.constructed_gamma = built.gamma
        report.constructed_features = built.priv.X[:, 0]
        report.constructed_b_tilde = built.b_tilde
        report.constructed_w_tilde = built.w_tilde
    if candidate is not None:
        report.family_membership = family_membership(candidate, model)
    return report
