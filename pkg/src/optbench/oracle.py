"""Objective functions: a uniform gradient-oracle interface plus the benchmarks.

Points are flat float64 vectors regardless of the underlying problem;
matrix-valued problems flatten column-major so the optimizers never see a
matrix type.  Every handle counts its gradient evaluations, which is how
the experiment harness accounts for budgets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .rng import Seed


def _check_point(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"expected a point of dimension {dim}, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("point contains non-finite entries")
    return x


class ObjectiveHandle:
    """A differentiable objective with optional stochastic gradient access.

    ``grad`` and ``stoch_grad`` each bump ``grad_evals`` by one per call;
    plain function evaluations are not counted.  Handles are immutable
    apart from that counter, so parallel trials should each own a
    :meth:`replicate` of the handle rather than share one.
    """

    def __init__(
        self,
        dim: int,
        f: Callable[[np.ndarray], float],
        grad: Callable[[np.ndarray], np.ndarray],
        stoch_grad: Optional[Callable[[np.ndarray, Seed], np.ndarray]] = None,
        lipschitz_grad: Optional[float] = None,
        lipschitz_hess: Optional[float] = None,
        sgc_rho: Optional[float] = None,
        optimum_value: Optional[float] = None,
        name: str = "objective",
    ):
        if stoch_grad is not None:
            if sgc_rho is None or sgc_rho < 1.0:
                raise ValueError("a stochastic gradient requires sgc_rho >= 1")
        self.dim = dim
        self._f = f
        self._grad = grad
        self._stoch_grad = stoch_grad
        self.lipschitz_grad = lipschitz_grad
        self.lipschitz_hess = lipschitz_hess
        self.sgc_rho = sgc_rho
        self.optimum_value = optimum_value
        self.name = name
        self.grad_evals = 0

    @property
    def has_stochastic_grad(self) -> bool:
        return self._stoch_grad is not None

    def f(self, x: np.ndarray) -> float:
        return float(self._f(_check_point(x, self.dim)))

    def grad(self, x: np.ndarray) -> np.ndarray:
        self.grad_evals += 1
        return self._grad(_check_point(x, self.dim))

    def stoch_grad(self, x: np.ndarray, seed: Seed) -> np.ndarray:
        if self._stoch_grad is None:
            raise ValueError(f"{self.name} has no stochastic gradient")
        self.grad_evals += 1
        return self._stoch_grad(_check_point(x, self.dim), seed)

    def replicate(self) -> "ObjectiveHandle":
        """A fresh handle over the same functions with a zeroed counter."""
        return ObjectiveHandle(
            dim=self.dim,
            f=self._f,
            grad=self._grad,
            stoch_grad=self._stoch_grad,
            lipschitz_grad=self.lipschitz_grad,
            lipschitz_hess=self.lipschitz_hess,
            sgc_rho=self.sgc_rho,
            optimum_value=self.optimum_value,
            name=self.name,
        )


def quadratic_objective(eigenvalues: np.ndarray) -> ObjectiveHandle:
    """f(x) = (1/2) sum_i lam_i x_i^2 with known smoothness and minimum.

    The eigenvalues must all be positive; the gradient Lipschitz constant
    is max(lam) and the optimum value 0 at the origin.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or len(lam) == 0:
        raise ValueError("eigenvalues must be a nonempty vector")
    if not (lam > 0.0).all():
        raise ValueError("all eigenvalues must be positive")
    return ObjectiveHandle(
        dim=len(lam),
        f=lambda x: 0.5 * float(lam @ (x * x)),
        grad=lambda x: lam * x,
        lipschitz_grad=float(lam.max()),
        optimum_value=0.0,
        name="quadratic",
    )


@dataclass(frozen=True)
class MatFacProblem:
    """Synthetic symmetric low-rank factorization target.

    ``mstar`` is d x d symmetric with a Gaussian r x r leading block and
    zeros elsewhere; ``gamma_cap`` is its largest singular value, which
    parameterizes the local smoothness constants.
    """

    d: int
    r: int
    mstar: np.ndarray
    gamma_cap: float

    def __post_init__(self) -> None:
        if not np.array_equal(self.mstar, self.mstar.T):
            raise ValueError("mstar must be symmetric")


def _spectral_norm_sym(a: np.ndarray, tol: float = 1e-10, max_iters: int = 10_000) -> float:
    """Largest singular value of a symmetric matrix by power iteration on a^2.

    Iterating on a @ a avoids the sign-ambiguity of the dominant
    eigenvalue; convergence is declared on relative change <= tol.
    """
    m = a.shape[0]
    if m == 1:
        return abs(float(a[0, 0]))
    b = a @ a
    v = np.full(m, 1.0 / np.sqrt(m))
    lam = 0.0
    for _ in range(max_iters):
        w = b @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ (b @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def build_mstar(seed: Seed, d: int, r: int) -> MatFacProblem:
    """Draw the target matrix: symmetric N(0,1) entries on the leading r x r block.

    Each entry with i <= j is drawn once and mirrored.  The cap is the
    spectral norm of the result, computed by power iteration.
    """
    if not (1 <= r <= d):
        raise ValueError(f"need 1 <= r <= d, got r={r}, d={d}")
    gen = seed.generator()
    a = gen.standard_normal((r, r))
    block = np.triu(a) + np.triu(a, 1).T
    mstar = np.zeros((d, d))
    mstar[:r, :r] = block
    return MatFacProblem(d=d, r=r, mstar=mstar, gamma_cap=_spectral_norm_sym(block))


def matfac_objective(p: MatFacProblem) -> ObjectiveHandle:
    """f(U) = ||U U^T - M*||_F^2 over d x r matrices, flattened column-major.

    grad f(U) = 4 (U U^T - M*) U.  On the region ||U||_F^2 < gamma_cap the
    gradient is 8 gamma_cap-Lipschitz and the Hessian
    12 sqrt(gamma_cap)-Lipschitz; iterates are not projected onto that
    region, so runs record when they leave it rather than enforcing it.
    """
    d, r, mstar = p.d, p.r, p.mstar

    def as_matrix(x: np.ndarray) -> np.ndarray:
        return x.reshape((d, r), order="F")

    def f(x: np.ndarray) -> float:
        u = as_matrix(x)
        resid = u @ u.T - mstar
        return float((resid * resid).sum())

    def grad(x: np.ndarray) -> np.ndarray:
        u = as_matrix(x)
        resid = u @ u.T - mstar
        return (4.0 * resid @ u).reshape(-1, order="F")

    return ObjectiveHandle(
        dim=d * r,
        f=f,
        grad=grad,
        lipschitz_grad=8.0 * p.gamma_cap,
        lipschitz_hess=12.0 * np.sqrt(p.gamma_cap),
        optimum_value=0.0,
        name=f"matfac(d={d},r={r})",
    )


def finite_diff_grad(h: ObjectiveHandle, x: np.ndarray, step: float) -> np.ndarray:
    """Central-difference gradient, the reference all analytic gradients are tested against."""
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    x = _check_point(x, h.dim)
    out = np.empty(h.dim)
    for i in range(h.dim):
        e = np.zeros(h.dim)
        e[i] = step
        out[i] = (h.f(x + e) - h.f(x - e)) / (2.0 * step)
    return out


def wrap_stochastic(h: ObjectiveHandle, noise_scale: float, rho: float) -> ObjectiveHandle:
    """Add an unbiased multiplicative-noise gradient satisfying the growth bound.

    The stochastic gradient is (1 + zeta) grad f(x) with zeta uniform on
    [-noise_scale, noise_scale], so E||g||^2 = (1 + noise_scale^2/3)
    ||grad f||^2.  Admissibility is enforced through the conservative
    1 + noise_scale^2 <= rho, which guarantees the stated rho is honest.
    """
    if rho < 1.0:
        raise ValueError(f"the growth factor rho must be >= 1, got {rho}")
    if noise_scale < 0.0:
        raise ValueError(f"noise_scale must be nonnegative, got {noise_scale}")
    if 1.0 + noise_scale**2 > rho:
        raise ValueError(
            f"noise_scale {noise_scale} too large for rho={rho}: need 1 + noise_scale^2 <= rho"
        )

    base_grad = h._grad

    def stoch_grad(x: np.ndarray, seed: Seed) -> np.ndarray:
        zeta = seed.generator().uniform(-noise_scale, noise_scale)
        return (1.0 + zeta) * base_grad(x)

    return ObjectiveHandle(
        dim=h.dim,
        f=h._f,
        grad=base_grad,
        stoch_grad=stoch_grad,
        lipschitz_grad=h.lipschitz_grad,
        lipschitz_hess=h.lipschitz_hess,
        sgc_rho=rho,
        optimum_value=h.optimum_value,
        name=f"{h.name}+noise({noise_scale})",
    )
