"""Nesterov momentum with stochastic parameters driven by exponential jump times.

Between jumps, the pair (x, z) follows the linear attraction flow

    dx = eta  (z - x) dt,
    dz = eta' (x - z) dt,

and at each jump a gradient step is taken from the flowed x.  Because the
flow is linear it is evaluated in closed form at the jump gaps, so the
realized discrete recursion is exact - nothing is numerically integrated.
With alpha = eta + eta' and tau the gap, one iteration reads

    y      = x + (eta /alpha)(1 - e^{-alpha tau}) (z - x)
    x_next = y - gamma  g(y)
    z_next = z + (eta'/alpha)(1 - e^{-alpha tau}) (x - z) - gamma' g(y)

The z line is anchored at (x, z) rather than at (y, z): the two forms are
algebraically identical, but the (y, z)-anchored coefficient has the
denominator eta' + eta e^{-alpha tau}, which can vanish when eta' < 0.

Alongside the iterates, a running average of the y points with weights
proportional to exp(alpha T_i) is maintained; the candidate output is the
tracked point with the smallest observed gradient norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import NumericalFailure
from .oracle import ObjectiveHandle
from .rng import Seed, sample_increments, spawn_stream

_ALPHA_CONSISTENCY_TOL = 1e-14


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CnaParams:
    """The five constants (gamma, gamma', eta, eta', alpha) of the dynamics.

    alpha is stored redundantly and must equal eta + eta'; it has to be
    strictly positive for the flow coefficients to be well defined.
    """

    gamma: float
    gamma_prime: float
    eta: float
    eta_prime: float
    alpha: float

    def __post_init__(self) -> None:
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.gamma_prime < self.gamma:
            raise ValueError(f"gamma' must be >= gamma, got {self.gamma_prime} < {self.gamma}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha = eta + eta' must be positive, got {self.alpha}")
        if abs(self.alpha - (self.eta + self.eta_prime)) > _ALPHA_CONSISTENCY_TOL * max(
            1.0, abs(self.alpha)
        ):
            raise ValueError("alpha must equal eta + eta'")


def params_smooth(L: float, gamma: Optional[float] = None, eta_prime: float = 0.0) -> CnaParams:
    """Schedule for an L-smooth objective: gamma <= 1/L, eta = sqrt(gamma/2).

    gamma defaults to 1/L.  eta' is free as long as eta + eta' > 0.
    """
    if L <= 0.0:
        raise ValueError(f"L must be positive, got {L}")
    if gamma is None:
        gamma = 1.0 / L
    if gamma <= 0.0 or gamma > 1.0 / L:
        raise ValueError(f"gamma must lie in (0, 1/L] = (0, {1.0 / L}], got {gamma}")
    eta = math.sqrt(gamma / 2.0)
    if eta_prime <= -eta:
        raise ValueError(f"eta_prime must exceed -sqrt(gamma/2) = {-eta}, got {eta_prime}")
    return CnaParams(
        gamma=gamma,
        gamma_prime=gamma + eta,
        eta=eta,
        eta_prime=eta_prime,
        alpha=eta + eta_prime,
    )


def params_hessian(L: float, n: int) -> CnaParams:
    """Schedule tuned to the iteration horizon n: alpha = n^{-1/7}.

    gamma = 1/L, eta = sqrt(gamma/2), eta' = n^{-1/7} - eta.  Requires
    n >= 8 so the horizon-dependent constants stay controlled.
    """
    if L <= 0.0:
        raise ValueError(f"L must be positive, got {L}")
    if n < 8:
        raise ValueError(f"this schedule needs n >= 8, got {n}")
    gamma = 1.0 / L
    eta = math.sqrt(gamma / 2.0)
    alpha = float(n) ** (-1.0 / 7.0)
    return CnaParams(
        gamma=gamma,
        gamma_prime=gamma + eta,
        eta=eta,
        eta_prime=alpha - eta,
        alpha=alpha,
    )


def params_sgc(L: float, rho: float, eta_prime: float = 0.0) -> CnaParams:
    """Schedule under a rho-strong-growth stochastic gradient: gamma = 1/(rho L)."""
    if L <= 0.0:
        raise ValueError(f"L must be positive, got {L}")
    if rho < 1.0:
        raise ValueError(f"rho must be >= 1, got {rho}")
    gamma = 1.0 / (rho * L)
    eta = math.sqrt(gamma / (2.0 * rho))
    if eta_prime <= -eta:
        raise ValueError(f"eta_prime must exceed {-eta}, got {eta_prime}")
    return CnaParams(
        gamma=gamma,
        gamma_prime=gamma + eta,
        eta=eta,
        eta_prime=eta_prime,
        alpha=eta + eta_prime,
    )


# ---------------------------------------------------------------------------
# flow coefficients
# ---------------------------------------------------------------------------


def _flow_fraction(alpha: float, tau: float) -> float:
    # 1 - e^{-alpha tau} without cancellation for small alpha*tau.
    return -math.expm1(-alpha * tau)


def momentum_coefficient(p: CnaParams, tau: float) -> float:
    """Mixing weight of z into the gradient-query point over a gap tau.

    a = (eta/alpha)(1 - e^{-alpha tau}); 0 at tau -> 0, saturating at
    eta/alpha as tau -> infinity.
    """
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    return (p.eta / p.alpha) * _flow_fraction(p.alpha, tau)


def z_flow_coefficient(p: CnaParams, tau: float) -> float:
    """Attraction of z toward x over a gap tau, anchored at (x, z).

    c = (eta'/alpha)(1 - e^{-alpha tau}).  Anchoring at (x, z) keeps the
    coefficient finite even where the (y, z)-anchored form degenerates.
    """
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    return (p.eta_prime / p.alpha) * _flow_fraction(p.alpha, tau)


def ode_flow_closed_form(
    x: np.ndarray, z: np.ndarray, p: CnaParams, tau: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact solution of the inter-jump attraction flow after time tau.

    Satisfies (x_flow - z_flow) = e^{-alpha tau} (x - z) identically.
    """
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    phi = _flow_fraction(p.alpha, tau)
    diff = z - x
    return x + (p.eta / p.alpha) * phi * diff, z - (p.eta_prime / p.alpha) * phi * diff


# ---------------------------------------------------------------------------
# streaming average
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AvgState:
    """Running average of the query points with weights exp(alpha T_i).

    To keep everything bounded, weights are renormalized by exp(alpha T_k)
    at each step: ``s_prime`` is sum_{i<=k} exp(alpha (T_i - T_k)), which
    lies in [1, k].  ``k == 0`` denotes the empty average.
    """

    s_prime: float
    xbar: Optional[np.ndarray]
    k: int

    @staticmethod
    def empty() -> "AvgState":
        return AvgState(s_prime=0.0, xbar=None, k=0)


def streaming_average_update(avg: AvgState, tau: float, y: np.ndarray, alpha: float) -> AvgState:
    """Fold one query point into the exponentially weighted average.

    s'_k = 1 + e^{-alpha tau} s'_{k-1} and the average reweights
    accordingly; for the first point the average is the point itself.
    Algebraically equal to the direct exp(alpha T_i)-weighted mean.
    """
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    if avg.k == 0:
        return AvgState(s_prime=1.0, xbar=np.array(y, dtype=float, copy=True), k=1)
    w = math.exp(-alpha * tau)
    s_new = 1.0 + w * avg.s_prime
    xbar_new = (w * avg.s_prime * avg.xbar + y) / s_new
    return AvgState(s_prime=s_new, xbar=xbar_new, k=avg.k + 1)


# ---------------------------------------------------------------------------
# state and one-step update
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CnaState:
    """Optimizer state after k iterations: the pair (x, z), the running
    average, and the best-gradient tracker over all points evaluated so far."""

    x_tilde: np.ndarray
    z_tilde: np.ndarray
    avg: AvgState
    best_grad_norm: float
    best_point: Optional[np.ndarray]
    best_kind: str
    k: int

    @staticmethod
    def initial(x0: np.ndarray) -> "CnaState":
        x0 = np.asarray(x0, dtype=float)
        return CnaState(
            x_tilde=x0.copy(),
            z_tilde=x0.copy(),
            avg=AvgState.empty(),
            best_grad_norm=math.inf,
            best_point=None,
            best_kind="none",
            k=0,
        )


@dataclass(frozen=True)
class StepInfo:
    """Observables of one iteration, for tracing."""

    y: np.ndarray
    grad_norm_y: float
    grad_norm_xbar: Optional[float]


def step_detailed(
    state: CnaState,
    p: CnaParams,
    tau: float,
    h: ObjectiveHandle,
    eval_xbar: bool = False,
    seed: Optional[Seed] = None,
) -> tuple[CnaState, StepInfo]:
    """One jump: flow (x, z) over tau, take the gradient step, update trackers.

    When ``seed`` is given and the handle has a stochastic gradient, the
    jump uses a stochastic draw; the same draw feeds both the x and the z
    update.  With ``eval_xbar`` the gradient at the updated average is
    also evaluated (an extra counted gradient) and offered to the best
    tracker.
    """
    if state.x_tilde.shape != (h.dim,):
        raise ValueError(
            f"state dimension {state.x_tilde.shape} does not match objective dim {h.dim}"
        )
    a = momentum_coefficient(p, tau)
    c = z_flow_coefficient(p, tau)
    y = state.x_tilde + a * (state.z_tilde - state.x_tilde)
    if seed is not None and h.has_stochastic_grad:
        g = h.stoch_grad(y, seed)
    else:
        g = h.grad(y)
    if not np.isfinite(g).all():
        raise NumericalFailure("gradient is not finite", iteration=state.k + 1)
    x_new = y - p.gamma * g
    z_new = state.z_tilde + c * (state.x_tilde - state.z_tilde) - p.gamma_prime * g

    avg_new = streaming_average_update(state.avg, tau, y, p.alpha)

    gn_y = float(np.linalg.norm(g))
    best_norm, best_point, best_kind = state.best_grad_norm, state.best_point, state.best_kind
    if gn_y < best_norm:
        best_norm, best_point, best_kind = gn_y, y, "ytilde"

    gn_xbar: Optional[float] = None
    if eval_xbar:
        gx = h.grad(avg_new.xbar)
        if not np.isfinite(gx).all():
            raise NumericalFailure("gradient at the average is not finite", iteration=state.k + 1)
        gn_xbar = float(np.linalg.norm(gx))
        if gn_xbar < best_norm:
            best_norm, best_point, best_kind = gn_xbar, avg_new.xbar, "xbar"

    new_state = CnaState(
        x_tilde=x_new,
        z_tilde=z_new,
        avg=avg_new,
        best_grad_norm=best_norm,
        best_point=best_point,
        best_kind=best_kind,
        k=state.k + 1,
    )
    return new_state, StepInfo(y=y, grad_norm_y=gn_y, grad_norm_xbar=gn_xbar)


def step(
    state: CnaState,
    p: CnaParams,
    tau: float,
    h: ObjectiveHandle,
    eval_xbar: bool = False,
    seed: Optional[Seed] = None,
) -> CnaState:
    """One iteration; see :func:`step_detailed` for the traced variant."""
    new_state, _ = step_detailed(state, p, tau, h, eval_xbar=eval_xbar, seed=seed)
    return new_state


# ---------------------------------------------------------------------------
# evaluation schedules and full runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalSchedule:
    """When to spend an extra gradient on the running average.

    kind is one of "never", "every", "final", "stride"; stride evaluates
    every m-th iteration and always at the last one.
    """

    kind: str
    stride: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("never", "every", "final", "stride"):
            raise ValueError(f"unknown eval schedule kind {self.kind!r}")
        if self.kind == "stride" and self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    @staticmethod
    def parse(text: str) -> "EvalSchedule":
        text = text.strip()
        if text in ("never", "every", "final"):
            return EvalSchedule(kind=text)
        if text.startswith("stride:"):
            return EvalSchedule(kind="stride", stride=int(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse eval schedule {text!r}")

    @staticmethod
    def default_for(n: int) -> "EvalSchedule":
        return EvalSchedule(kind="stride", stride=max(1, math.ceil(n / 100)))

    def should_eval(self, k: int, n: int) -> bool:
        if self.kind == "never":
            return False
        if self.kind == "every":
            return True
        if self.kind == "final":
            return k == n
        return k % self.stride == 0 or k == n


@dataclass
class RunRecord:
    """Per-iteration trace plus the summary of one optimizer run.

    Rows are aligned arrays of length n.  ``f_query`` and ``grad_norm_y``
    refer to the point whose gradient was taken at that iteration;
    ``grad_norm_xbar`` is NaN where the average was not evaluated.
    ``grad_evals`` is the cumulative counted-gradient total at the end of
    each iteration (for this run).
    """

    algo: str
    seed: Optional[int]
    n: int
    iters: np.ndarray
    times: np.ndarray
    taus: np.ndarray
    f_query: np.ndarray
    grad_norm_y: np.ndarray
    grad_norm_xbar: np.ndarray
    query_norm: np.ndarray
    grad_evals: np.ndarray
    best_kind: str
    best_grad_norm: float
    best_point: Optional[np.ndarray]
    total_grad_evals: int
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("iters", "times", "taus", "f_query", "grad_norm_y",
                     "grad_norm_xbar", "query_norm", "grad_evals"):
            if len(getattr(self, name)) != self.n:
                raise ValueError(f"{name} must have exactly n={self.n} rows")
        if np.any(np.diff(self.grad_evals) < 0):
            raise ValueError("gradient-eval counts must be nondecreasing")


def run(
    h: ObjectiveHandle,
    x0: np.ndarray,
    n: int,
    seed: Seed,
    p: CnaParams,
    eval_schedule: Optional[EvalSchedule] = None,
) -> RunRecord:
    """Run n iterations from x = z = x0 over a freshly sampled jump schedule.

    Sub-stream 0 of ``seed`` drives the jump times; when the objective has
    a stochastic gradient, iteration k draws it from sub-stream k of
    sub-stream 1 of ``seed``.  Deterministic given (seed, params, x0).
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    sched = sample_increments(spawn_stream(seed, 0), n)
    noise_root = spawn_stream(seed, 1) if h.has_stochastic_grad else None
    if eval_schedule is None:
        eval_schedule = EvalSchedule.default_for(n)

    evals_at_start = h.grad_evals
    state = CnaState.initial(x0)
    f_query = np.empty(n)
    gn_y = np.empty(n)
    gn_xbar = np.full(n, np.nan)
    qnorm = np.empty(n)
    evals = np.empty(n, dtype=int)
    xbar_evals = 0

    for k in range(1, n + 1):
        tau = float(sched.increments[k - 1])
        eval_xbar = eval_schedule.should_eval(k, n)
        draw = spawn_stream(noise_root, k - 1) if noise_root is not None else None
        state, info = step_detailed(state, p, tau, h, eval_xbar=eval_xbar, seed=draw)
        f_query[k - 1] = h.f(info.y)
        gn_y[k - 1] = info.grad_norm_y
        qnorm[k - 1] = float(np.linalg.norm(info.y))
        if info.grad_norm_xbar is not None:
            gn_xbar[k - 1] = info.grad_norm_xbar
            xbar_evals += 1
        evals[k - 1] = h.grad_evals - evals_at_start

    return RunRecord(
        algo="cna",
        seed=seed.value,
        n=n,
        iters=np.arange(1, n + 1),
        times=sched.times.copy(),
        taus=sched.increments.copy(),
        f_query=f_query,
        grad_norm_y=gn_y,
        grad_norm_xbar=gn_xbar,
        query_norm=qnorm,
        grad_evals=evals,
        best_kind=state.best_kind,
        best_grad_norm=state.best_grad_norm,
        best_point=state.best_point,
        total_grad_evals=int(evals[-1]),
        params={
            "gamma": p.gamma,
            "gamma_prime": p.gamma_prime,
            "eta": p.eta,
            "eta_prime": p.eta_prime,
            "alpha": p.alpha,
            "eval_schedule": eval_schedule.kind,
        },
        extras={"grad_evals_y": n, "grad_evals_xbar": xbar_evals},
    )
