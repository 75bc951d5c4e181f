"""Symmetric low-rank factorization: event-driven momentum vs gradient descent.

Reproduces the desk-scale benchmark: a d x d target with a Gaussian r x r
block, both algorithms run at the step size prescribed by the local
smoothness constant, function values averaged iteration-wise over seeds.
"""

import numpy as np

from optbench.experiments import build_config, matfac_records

cfg = build_config("matfac", None, seed=0, out_dir="unused")
print(f"== desk preset: d={cfg.d}, r={cfg.r}, {cfg.seeds} seeds, {cfg.n} iterations ==")

gd_records, cna_records, cap = matfac_records(cfg)
print(f"largest singular value of the target: {cap:.3f} (step size 1/(8*{cap:.3f}))")

gd_mean = np.mean([r.f_query for r in gd_records], axis=0)
cna_mean = np.mean([r.f_query for r in cna_records], axis=0)

print("\niteration-averaged objective values:")
print(f"{'iter':>6} {'descent':>12} {'momentum':>12} {'ratio':>8}")
for k in (1, 5, 10, 20, cfg.n):
    g, c = gd_mean[k - 1], cna_mean[k - 1]
    print(f"{k:6d} {g:12.4f} {c:12.4f} {c / g:8.4f}")

print(f"\nfinal budget ({cfg.n} gradients each): momentum {cna_mean[-1]:.4f} <= descent {gd_mean[-1]:.4f}")
exits = sum(int((r.query_norm**2 >= cap).any()) for r in gd_records + cna_records)
print(f"runs leaving the smoothness region during descent: {exits} of {len(gd_records) + len(cna_records)}")
