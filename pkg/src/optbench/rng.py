"""Seedable generation of the exponential jump-time sequences driving the optimizer.

Everything random in this package flows from a single 64-bit ``Seed``.
Independent streams for parallel trials are derived with :func:`spawn_stream`,
never by reusing a generator across owners.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class Seed:
    """A 64-bit unsigned root for a deterministic random stream.

    The same seed with the same request sequence yields a bit-identical
    stream.  The underlying bit generator is counter-based (Philox), so
    spawned sub-streams are statistically independent.
    """

    value: int

    def __post_init__(self) -> None:
        if not (0 <= int(self.value) <= _SEED_MAX):
            raise ValueError(f"seed must fit in 64 bits, got {self.value}")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this seed's stream."""
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.value)))


def spawn_stream(seed: Seed, stream_index: int) -> Seed:
    """Derive the ``stream_index``-th independent sub-seed of ``seed``.

    Deterministic: the same (seed, index) pair always yields the same
    sub-seed.  Distinct indices yield distinct, independent streams.
    """
    if stream_index < 0:
        raise ValueError(f"stream_index must be nonnegative, got {stream_index}")
    ss = np.random.SeedSequence(entropy=seed.value, spawn_key=(stream_index,))
    return Seed(int(ss.generate_state(1, np.uint64)[0]))


@dataclass(frozen=True)
class JumpSchedule:
    """Realized jump times of a unit-rate Poisson process.

    ``increments[k]`` is the waiting time between the k-th and (k+1)-th
    jump (unit-rate exponential draws, all strictly positive) and
    ``times[k]`` the cumulative jump time, with the convention T_0 = 0
    before the first stored entry.
    """

    increments: np.ndarray
    times: np.ndarray
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("a JumpSchedule holds at least one jump")
        if len(self.increments) != self.count or len(self.times) != self.count:
            raise ValueError("increments/times length must equal count")
        if not np.all(self.increments > 0.0):
            raise ValueError("all inter-jump increments must be > 0")


def _exponential_increments(gen: np.random.Generator, n: int) -> np.ndarray:
    """n unit-rate exponential draws via the inverse CDF, all strictly positive.

    tau = -ln(u) with u uniform on (0, 1]; the u = 1 boundary (tau = 0) is
    rejected and redrawn so jump times stay strictly increasing.
    """
    u = gen.random(n)
    # u in [0, 1); 1 - u in (0, 1], so -log1p(-u) = -ln(1 - u) is the
    # inverse CDF draw.  tau == 0 can only happen at u == 0: redraw those.
    tau = -np.log1p(-u)
    while True:
        zero = tau <= 0.0
        if not zero.any():
            break
        tau[zero] = -np.log1p(-gen.random(int(zero.sum())))
    return tau


def sample_increments(seed: Seed, n: int) -> JumpSchedule:
    """Sample ``n`` i.i.d. unit-rate exponential inter-jump times.

    Returns the increments together with their running sums (the jump
    times themselves).  Raises ``ValueError`` for ``n < 1``.
    """
    if n < 1:
        raise ValueError(f"cannot sample an empty schedule (n={n})")
    tau = _exponential_increments(seed.generator(), n)
    return JumpSchedule(increments=tau, times=np.cumsum(tau), count=n)


def sample_increment_matrix(seed: Seed, trials: int, n: int) -> np.ndarray:
    """A (trials, n) matrix of increments, one independent sub-stream per row.

    Row t is exactly the increment vector of
    ``sample_increments(spawn_stream(seed, t), n)``, so Monte Carlo trials
    are reproducible individually and insensitive to execution order.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if n < 1:
        raise ValueError(f"cannot sample an empty schedule (n={n})")
    out = np.empty((trials, n))
    for t in range(trials):
        out[t] = _exponential_increments(spawn_stream(seed, t).generator(), n)
    return out
