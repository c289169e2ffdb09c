"""Twice-differentiable primal training with a smoothed hinge loss.

The loss l_delta agrees with the hinge outside the band
1 - 2*delta < t < 1 and interpolates with a cubic spline inside it:

    l_delta(t) = 0                       t >= 1
               = 1 - t - delta           t <= 1 - 2 delta
               = s^3 (4 delta - s) / (16 delta^3),  s = 1 - t, otherwise

so 0 <= hinge(t) - l_delta(t) <= delta everywhere, and the curvature is
bounded by 3 / (4 delta).

The objective 1/2 a' K a + sum_i c_i l_delta(y_i f(x_i)) with
f = K a + b is minimized by a damped Newton method on the stationarity
residual; when Newton stalls a quasi-Newton fallback takes over.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .data import Dataset
from .kernels import KernelSpec, gram
from .wsvm import check_weights

__all__ = ["SmoothLossSpec", "smooth_hinge", "PrimalModel", "solve_primal"]

PRIMAL_TOL = 1e-10
PRIMAL_MAX_ITER = 200


@dataclass(frozen=True)
class SmoothLossSpec:
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")


def smooth_hinge(t, delta):
    if isinstance(delta, SmoothLossSpec):
        delta = delta.delta
    return _smooth_hinge(t, delta)


def _smooth_hinge(t, delta: float):
    """Value, first and second derivative of l_delta, elementwise."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    t = np.asarray(t, dtype=float)
    s = 1.0 - t
    value = np.where(s <= 0, 0.0, s - delta)
    d1 = np.where(s <= 0, 0.0, -1.0)
    d2 = np.zeros_like(s)
    mid = (s > 0) & (s < 2.0 * delta)
    if np.any(mid):
        sm = s[mid]
        d3 = delta**3
        value = value.copy()
        d1 = d1.copy()
        value[mid] = sm**3 * (4.0 * delta - sm) / (16.0 * d3)
        d1[mid] = -(sm**2) * (3.0 * delta - sm) / (4.0 * d3)
        d2[mid] = 3.0 * sm * (2.0 * delta - sm) / (4.0 * d3)
    return value, d1, d2


@dataclass
class PrimalModel:
    data: Dataset
    spec: KernelSpec
    c: np.ndarray
    delta: float
    alpha: np.ndarray
    b: float
    objective: float
    n_iter: int = 0
    method: str = "newton"
    _gram: np.ndarray | None = field(default=None, repr=False)

    @property
    def gram_train(self) -> np.ndarray:
        if self._gram is None:
            self._gram = gram(self.spec, self.data)
        return self._gram

    @property
    def decision_train(self) -> np.ndarray:
        return self.gram_train @ self.alpha + self.b

    def predict(self, points) -> np.ndarray:
        Kx = gram(self.spec, self.data, points)
        return Kx.T @ self.alpha + self.b


def _objective(alpha, b, K, y, c, delta):
    f = K @ alpha + b
    value, d1, d2 = smooth_hinge(y * f, delta)
    obj = 0.5 * float(alpha @ K @ alpha) + float(c @ value)
    u = y * d1
    v = c * d2
    return obj, f, u, v


def solve_primal(data: Dataset, spec: KernelSpec, c, delta: float,
                 tol: float = PRIMAL_TOL,
                 max_iter: int = PRIMAL_MAX_ITER) -> PrimalModel:
    """Minimize the smoothed weighted primal in the expansion (a, b).

    Stationarity is the zero of

        r(a, b) = [a + diag(u) c;  <u, c>],   u_i = y_i l'(y_i f_i)

    solved by damped Newton with Jacobian

        J = [[I + diag(v) K,  v], [v' K,  1' v]],   v_i = c_i l''(y_i f_i).

    In the fully kink-free regime (v = 0) the offset equation drops out; a
    is set from the first block and b is left at its current value.
    """
    if isinstance(delta, SmoothLossSpec):
        delta = delta.delta
    c = check_weights(c, data.n, allow_all_zero=True)
    if not delta > 0:
        raise ValueError("delta must be positive")
    y = data.y
    K0 = gram(spec, data)
    n = data.n
    # tiny ridge so the Newton system stays solvable for singular K
    K = K0 + (1e-10 * np.trace(K0) / n) * np.eye(n)

    alpha = np.zeros(n)
    b = 0.0
    it = 0

    def newton_loop(alpha, b, budget):
        """Damped Newton on r; returns (alpha, b, iters, converged)."""
        obj, f, u, v = _objective(alpha, b, K, y, c, delta)
        for it in range(1, budget + 1):
            r1 = alpha + u * c
            r2 = float(u @ c)
            kink_free = np.max(v) <= 0
            resid = max(float(np.max(np.abs(r1))), abs(r2))
            if resid <= tol:
                return alpha, b, it, True
            if kink_free:
                if float(np.max(np.abs(r1))) > tol:
                    # no curvature: fix the expansion block directly, keep b
                    step_a = -r1
                    step_b = 0.0
                else:
                    # offset gradient persists with zero curvature
                    # everywhere; hand over to the quasi-Newton fallback
                    return alpha, b, it, False
            else:
                J = np.empty((n + 1, n + 1))
                J[:n, :n] = np.eye(n) + v[:, None] * K
                J[:n, n] = v
                J[n, :n] = v @ K
                J[n, n] = float(np.sum(v))
                try:
                    step = np.linalg.solve(J, -np.r_[r1, r2])
                except np.linalg.LinAlgError:
                    return alpha, b, it, False
                step_a, step_b = step[:n], float(step[n])
            t = 1.0
            improved = False
            for _ in range(40):
                obj_new, f_new, u_new, v_new = _objective(
                    alpha + t * step_a, b + t * step_b, K, y, c, delta)
                if obj_new <= obj + 1e-12 * (1.0 + abs(obj)):
                    alpha = alpha + t * step_a
                    b = b + t * step_b
                    obj, f, u, v = obj_new, f_new, u_new, v_new
                    improved = True
                    break
                t *= 0.5
            if not improved:
                return alpha, b, it, False
        return alpha, b, budget, False

    alpha, b, it, converged = newton_loop(alpha, b, max_iter)
    method = "newton" if converged else "bfgs"

    if method == "bfgs":
        def fun(z):
            a_, b_ = z[:n], z[n]
            f_ = K @ a_ + b_
            value, d1, _ = smooth_hinge(y * f_, delta)
            g_f = c * y * d1
            grad_a = K @ (a_ + g_f)
            grad_b = float(np.sum(g_f))
            val = 0.5 * float(a_ @ K @ a_) + float(c @ value)
            return val, np.r_[grad_a, grad_b]

        res = minimize(fun, np.r_[alpha, b], jac=True, method="BFGS",
                       options={"gtol": 1e-12, "maxiter": 2000})
        alpha, b = res.x[:n], float(res.x[n])
        obj = float(res.fun)
        it += int(res.nit)
        # BFGS stationarity only controls the expansion through K, leaving
        # alpha free along the kernel null space when K is rank deficient.
        # Project onto the fixed point a = -c y l' — the decision function
        # is unchanged, and sensitivity analysis differentiates this point.
        for _ in range(5):
            _, d1, _ = smooth_hinge(y * (K0 @ alpha + b), delta)
            a_fix = -(c * y * d1)
            if np.max(np.abs(a_fix - alpha)) <= 1e-14 * (1.0 + np.max(np.abs(alpha))):
                break
            alpha = a_fix
        # near the fixed point Newton converges quadratically: polish the
        # quasi-Newton iterate down to the stationarity tolerance
        alpha, b, extra, _ = newton_loop(alpha, b, 50)
        it += extra

    value, _, _ = smooth_hinge(y * (K0 @ alpha + b), delta)
    obj = 0.5 * float(alpha @ K0 @ alpha) + float(c @ value)
    return PrimalModel(
        data=data, spec=spec, c=c, delta=float(delta), alpha=alpha,
        b=float(b), objective=obj, n_iter=it, method=method, _gram=K0,
    )
