"""Reference first-order methods: gradient descent and two safeguarded
momentum algorithms (negative-curvature exploitation, restarts).

These are the deterministic baselines the jump-time method is compared
against.  All of them produce the same :class:`~optbench.cna.RunRecord`
shape; time columns are NaN since nothing here is event-driven.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cna import RunRecord
from .errors import NumericalFailure
from .oracle import ObjectiveHandle


def _require_finite(x: np.ndarray, what: str, iteration: int) -> None:
    if not np.isfinite(x).all():
        raise NumericalFailure(f"{what} is not finite", iteration=iteration)


def _record(
    algo: str,
    f_query: list,
    grad_norm: list,
    query_norm: list,
    grad_evals: list,
    best_point: np.ndarray,
    best_grad_norm: float,
    params: dict,
    extras: Optional[dict] = None,
) -> RunRecord:
    n = len(f_query)
    nan = np.full(n, np.nan)
    return RunRecord(
        algo=algo,
        seed=None,
        n=n,
        iters=np.arange(1, n + 1),
        times=nan,
        taus=nan.copy(),
        f_query=np.asarray(f_query),
        grad_norm_y=np.asarray(grad_norm),
        grad_norm_xbar=np.full(n, np.nan),
        query_norm=np.asarray(query_norm),
        grad_evals=np.asarray(grad_evals, dtype=int),
        best_kind="ytilde",
        best_grad_norm=best_grad_norm,
        best_point=best_point,
        total_grad_evals=int(grad_evals[-1]) if grad_evals else 0,
        params=params,
        extras=extras or {},
    )


def gd_run(h: ObjectiveHandle, x0: np.ndarray, gamma: float, n: int) -> RunRecord:
    """Plain gradient descent x <- x - gamma grad f(x) for n steps.

    Row k traces the query point x_{k-1} (the point whose gradient
    produced x_k), so traces are comparable iteration-wise across
    algorithms.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    evals0 = h.grad_evals
    x = np.asarray(x0, dtype=float).copy()
    f_query, grad_norm, query_norm, grad_evals = [], [], [], []
    best_norm, best_point = math.inf, x.copy()
    for k in range(1, n + 1):
        g = h.grad(x)
        _require_finite(g, "gradient", k)
        f_query.append(h.f(x))
        gn = float(np.linalg.norm(g))
        grad_norm.append(gn)
        query_norm.append(float(np.linalg.norm(x)))
        grad_evals.append(h.grad_evals - evals0)
        if gn < best_norm:
            best_norm, best_point = gn, x.copy()
        x = x - gamma * g
        _require_finite(x, "iterate", k)
    return _record(
        "gd", f_query, grad_norm, query_norm, grad_evals,
        best_point, best_norm, {"gamma": gamma},
        extras={"final_point": x, "final_f": h.f(x)},
    )


# ---------------------------------------------------------------------------
# momentum with negative-curvature exploitation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NceParams:
    """Step size, momentum weight, non-convexity threshold, and the radius
    of the curvature-probing step."""

    eta: float
    theta: float
    gamma_nc: float
    s: float

    def __post_init__(self) -> None:
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not (0.0 < self.theta <= 1.0):
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if self.s <= 0.0:
            raise ValueError(f"s must be positive, got {self.s}")


def _nce_probe(h: ObjectiveHandle, x: np.ndarray, v: np.ndarray, s: float) -> np.ndarray:
    """The replacement iterate when the non-convexity check fires.

    Large velocity: stay put (momentum already explored the direction).
    Small velocity: probe x +- s v/||v|| and keep the lower of the two,
    preferring +; zero velocity carries no direction, so stay put.
    """
    vnorm = float(np.linalg.norm(v))
    if vnorm >= s:
        return x
    if vnorm == 0.0:
        return x
    delta = s * v / vnorm
    return x + delta if h.f(x + delta) <= h.f(x - delta) else x - delta


def nce_run(
    h: ObjectiveHandle,
    x0: np.ndarray,
    p: NceParams,
    n: int,
    security_check: bool = True,
) -> RunRecord:
    """Momentum iterations guarded by a per-step non-convexity check.

    Each iteration: y = x + (1-theta) v, gradient step from y, velocity
    v <- x_next - x.  If f between the previous iterate and y certifies
    local non-convexity at level gamma_nc, the step is replaced by the
    curvature probe and the velocity reset to zero.  The check compares
    distinct points; when y == x it cannot fire.  With
    ``security_check=False`` this is plain momentum.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    evals0 = h.grad_evals
    x = np.asarray(x0, dtype=float).copy()
    v = np.zeros_like(x)
    f_query, grad_norm, query_norm, grad_evals = [], [], [], []
    best_norm, best_point = math.inf, x.copy()
    nce_triggers = 0
    for t in range(1, n + 1):
        y = x + (1.0 - p.theta) * v
        g = h.grad(y)
        _require_finite(g, "gradient", t)
        f_query.append(h.f(y))
        gn = float(np.linalg.norm(g))
        grad_norm.append(gn)
        query_norm.append(float(np.linalg.norm(y)))
        if gn < best_norm:
            best_norm, best_point = gn, y.copy()
        x_next = y - p.eta * g
        v_next = x_next - x
        if security_check and not np.array_equal(x, y):
            diff = x - y
            if h.f(x) <= h.f(y) + float(g @ diff) - 0.5 * p.gamma_nc * float(diff @ diff):
                x_next = _nce_probe(h, x, v, p.s)
                v_next = np.zeros_like(x)
                nce_triggers += 1
        _require_finite(x_next, "iterate", t)
        x, v = x_next, v_next
        grad_evals.append(h.grad_evals - evals0)
    return _record(
        "nce", f_query, grad_norm, query_norm, grad_evals,
        best_point, best_norm,
        {"eta": p.eta, "theta": p.theta, "gamma_nc": p.gamma_nc, "s": p.s},
        extras={"nce_triggers": nce_triggers, "final_point": x, "final_f": h.f(x)},
    )


# ---------------------------------------------------------------------------
# restarted momentum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RestartParams:
    """Restart threshold B, inner horizon K, step size and momentum weight."""

    B: float
    K: int
    eta: float
    theta: float

    def __post_init__(self) -> None:
        if self.B <= 0.0:
            raise ValueError(f"B must be positive, got {self.B}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")


def restarted_nm_run(
    h: ObjectiveHandle,
    x0: np.ndarray,
    p: RestartParams,
    max_total_iters: Optional[int] = None,
) -> tuple[np.ndarray, RunRecord]:
    """Momentum with restarts when the trajectory residual grows too fast.

    Inner loop (k counts iterations since the last restart):

        y_k     = x_k + (1 - theta)(x_k - x_{k-1})
        x_{k+1} = y_k - eta grad f(y_k)
        restart when  k * sum_{t<k+1} ||x_{t+1} - x_t||^2 > B^2,
        resetting the sum, k, and the momentum anchor.

    On reaching k = K the output is the average of y_0..y_{K0}, where K0
    minimizes the last-step length over the second half of the window.
    With a tiny B every step restarts and the trajectory is plain
    gradient descent; a huge B never restarts.

    ``max_total_iters`` caps total gradient steps (required to terminate
    when B is small enough that k never reaches K); if the cap fires, the
    output rule is applied to the current inner window.
    """
    evals0 = h.grad_evals
    x_prev = np.asarray(x0, dtype=float).copy()
    x = x_prev.copy()
    k = 0
    residual_sum = 0.0
    ys: list[np.ndarray] = []
    step_lengths: list[float] = []
    f_query, grad_norm, query_norm, grad_evals = [], [], [], []
    best_norm, best_point = math.inf, x.copy()
    restart_iters: list[int] = []
    total = 0

    while k < p.K and (max_total_iters is None or total < max_total_iters):
        y = x + (1.0 - p.theta) * (x - x_prev)
        g = h.grad(y)
        total += 1
        _require_finite(g, "gradient", total)
        f_query.append(h.f(y))
        gn = float(np.linalg.norm(g))
        grad_norm.append(gn)
        query_norm.append(float(np.linalg.norm(y)))
        grad_evals.append(h.grad_evals - evals0)
        if gn < best_norm:
            best_norm, best_point = gn, y.copy()
        x_next = y - p.eta * g
        _require_finite(x_next, "iterate", total)
        ys.append(y)
        step_lengths.append(float(np.linalg.norm(x_next - x)))
        residual_sum += step_lengths[-1] ** 2
        x_prev, x = x, x_next
        k += 1
        if k * residual_sum > p.B**2:
            restart_iters.append(total)
            x_prev = x.copy()
            k = 0
            residual_sum = 0.0
            ys.clear()
            step_lengths.clear()

    y_hat = _window_average(x, ys, step_lengths)
    record = _record(
        "restarted-nm", f_query, grad_norm, query_norm, grad_evals,
        best_point, best_norm,
        {"B": p.B, "K": p.K, "eta": p.eta, "theta": p.theta},
        extras={
            "restarts": len(restart_iters),
            "restart_iters": restart_iters,
            "final_point": x,
            "final_f": h.f(x),
            "output_point": y_hat,
        },
    )
    return y_hat, record


def _window_average(x: np.ndarray, ys: list[np.ndarray], step_lengths: list[float]) -> np.ndarray:
    """Output rule over the current inner window (k = len(ys) steps taken).

    K0 = argmin of the step length over indices floor(k/2)..k-1, output
    the mean of y_0..y_{K0}.  An empty window (fresh restart or no steps)
    outputs the current iterate.
    """
    k = len(ys)
    if k == 0:
        return x.copy()
    lo = k // 2
    window = np.asarray(step_lengths[lo:])
    k0 = lo + int(np.argmin(window))
    return np.mean(np.asarray(ys[: k0 + 1]), axis=0)
