"""Jump-time diagnostics: closed forms, Monte Carlo agreement, envelope test.

Walks through the random quantities that drive the momentum method's
guarantees: sample a schedule of exponential gaps, stream the discounted
sums along it, compare their Monte Carlo means with the exact
expectations, and check how often realizations stay inside the C-times-
expectation envelope.
"""

import numpy as np

from optbench import (
    Seed,
    a_n_verdict,
    delta_n,
    expected_H,
    expected_delta,
    expected_delta_upper,
    monte_carlo_stats,
    sample_increments,
)

seed = Seed(2024)
n = 1000
alpha = float(n) ** (-1.0 / 7.0)

print(f"== one realization (n={n}, alpha=n^(-1/7)={alpha:.4f}) ==")
schedule = sample_increments(seed, n)
print(f"first gaps: {np.round(schedule.increments[:5], 3)}")
print(f"T_n = {schedule.times[-1]:.1f} (mean gap {schedule.increments.mean():.3f}, Exp(1) has mean 1)")

value = delta_n(schedule, alpha)
print(f"\nrealized quadratic functional: {value:.1f}")
print(f"closed-form expectation:       {expected_delta(n, alpha):.1f}")
print(f"linear upper bound:            {expected_delta_upper(n, alpha):.1f}")

print("\n== closed forms vs Monte Carlo (10^4 schedules) ==")
for i in (2, 10, 50):
    mc = monte_carlo_stats("H1", n=i, alpha=0.5, C=5.0, trials=10_000, seed=Seed(7 + i))
    _, e1, _ = expected_H(i, 0.5)
    print(f"i={i:3d}: E[H1]={e1:.4f}, centered MC mean {mc.mean:+.4f} (stderr {mc.stderr:.4f})")

print("\n== envelope membership at C=5 ==")
verdict = a_n_verdict(schedule, alpha, C=5.0)
print(f"this realization is a member: {verdict.member}")
members = monte_carlo_stats("an_membership", n=n, alpha=alpha, C=5.0, trials=100, seed=Seed(99))
print(f"membership over 100 realizations: {members.mean:.0%}")
ratio = monte_carlo_stats("delta_ratio", n=n, alpha=alpha, C=5.0, trials=100, seed=Seed(100))
print(f"realized/expected ratio: mean {ratio.mean:.3f}, range [{ratio.min:.3f}, {ratio.max:.3f}]")
