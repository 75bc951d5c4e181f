"""Experiment harness: configs, the six experiment commands, CSV persistence.

Every command is a pure function of its :class:`ExperimentConfig`; with a
fixed seed, re-running a command reproduces its CSV files byte for byte
(floats are written with 17 significant digits, which round-trips
float64 exactly).

Config files are flat ``key = value`` text: one pair per line, ``#``
starts a comment, blank lines are ignored, values are parsed by the key's
declared type, and unknown keys are rejected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import baselines, cna, diagnostics
from .errors import ConfigError
from .oracle import ObjectiveHandle, build_mstar, matfac_objective, quadratic_objective, wrap_stochastic
from .rng import Seed, sample_increment_matrix, spawn_stream

EXPERIMENTS = ("verify-conditions", "delta-ratio", "histograms", "matfac", "smooth-rate", "run")

CONDITIONS_HEADER = ["trial", "i", "H0", "H1", "H2", "bound0", "bound1", "bound2", "violated"]
RATIO_HEADER = ["trial", "n", "delta", "expected_delta", "ratio"]
TRACE_HEADER = ["algo", "seed", "iter", "grad_evals", "f", "grad_norm_y", "grad_norm_xbar"]
HISTOGRAM_HEADER = ["quantity", "i", "bin_left", "bin_right", "count"]
RATE_SUMMARY_HEADER = ["k", "mean_min_gradsq", "bound"]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a command needs; unset fields fall back to per-preset defaults."""

    experiment: str
    preset: str = "desk"
    n: Optional[int] = None
    trials: Optional[int] = None
    seed: int = 0
    C: float = 5.0
    alpha: Optional[float] = None
    out_dir: str = "out"
    # problem
    problem: Optional[str] = None
    d: Optional[int] = None
    r: Optional[int] = None
    eigenvalues: Optional[tuple[float, ...]] = None
    noise: float = 0.0
    rho: float = 1.0
    init_scale: Optional[float] = None
    # optimizer
    algo: str = "cna"
    schedule: Optional[str] = None
    gamma: Optional[float] = None
    eta_prime: float = 0.1
    eta: Optional[float] = None
    theta: float = 0.5
    B: float = 1.0
    K: int = 100
    s: float = 0.1
    gamma_nc: float = 1.0
    eval_schedule: Optional[str] = None
    seeds: Optional[int] = None
    hist_indices: tuple[int, ...] = (2, 10, 100)

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.preset not in ("desk", "paper"):
            raise ConfigError(f"unknown preset {self.preset!r}; expected 'desk' or 'paper'")


_PRESET_DEFAULTS: dict[tuple[str, str], dict] = {
    ("verify-conditions", "desk"): dict(n=1000, trials=100),
    ("verify-conditions", "paper"): dict(n=10_000, trials=100),
    ("delta-ratio", "desk"): dict(n=1000, trials=100),
    ("delta-ratio", "paper"): dict(n=1000, trials=100),
    ("histograms", "desk"): dict(n=100, trials=10_000),
    ("histograms", "paper"): dict(n=100, trials=10_000),
    ("matfac", "desk"): dict(n=40, d=60, r=15, seeds=10),
    ("matfac", "paper"): dict(n=100, d=200, r=50, seeds=10),
    ("smooth-rate", "desk"): dict(n=2000, d=10, seeds=200),
    ("smooth-rate", "paper"): dict(n=2000, d=10, seeds=200),
    ("run", "desk"): dict(n=100, d=10, problem="quadratic"),
    ("run", "paper"): dict(n=100, d=10, problem="quadratic"),
}

_LIST_FIELDS = {"eigenvalues": float, "hist_indices": int}


def _parse_value(key: str, raw: str, target_type) -> object:
    raw = raw.strip()
    try:
        if key in _LIST_FIELDS:
            elem = _LIST_FIELDS[key]
            return tuple(elem(part) for part in raw.split(",") if part.strip())
        if target_type is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return target_type(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for key {key!r}: {raw!r}") from exc


def parse_config_file(path: str | Path) -> dict:
    """Read a flat key=value config file into a dict of typed values."""
    known = {f.name: f for f in fields(ExperimentConfig)}
    type_of = {
        "experiment": str, "preset": str, "n": int, "trials": int, "seed": int,
        "C": float, "alpha": float, "out_dir": str, "problem": str, "d": int,
        "r": int, "eigenvalues": tuple, "noise": float, "rho": float,
        "init_scale": float, "algo": str, "schedule": str, "gamma": float,
        "eta_prime": float, "eta": float, "theta": float, "B": float, "K": int,
        "s": float, "gamma_nc": float, "eval_schedule": str, "seeds": int,
        "hist_indices": tuple,
    }
    out: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, raw, type_of[key])
    return out


def build_config(experiment: str, file_values: Optional[dict] = None, **overrides) -> ExperimentConfig:
    """Merge preset defaults, config-file values, and flag overrides (strongest last)."""
    values = dict(file_values or {})
    if "experiment" in values and values["experiment"] != experiment:
        raise ConfigError(
            f"config file says experiment={values['experiment']!r} but {experiment!r} was requested"
        )
    values["experiment"] = experiment
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    cfg = ExperimentConfig(**values)
    defaults = _PRESET_DEFAULTS[(cfg.experiment, cfg.preset)]
    fill = {k: v for k, v in defaults.items() if getattr(cfg, k) is None}
    return replace(cfg, **fill) if fill else cfg


def _effective_alpha(cfg: ExperimentConfig, n: int) -> float:
    return cfg.alpha if cfg.alpha is not None else float(n) ** (-1.0 / 7.0)


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    return path


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify_conditions(cfg: ExperimentConfig) -> Path:
    """Per-trial, per-index envelope checks; writes conditions.csv."""
    n, trials = int(cfg.n), int(cfg.trials)
    if trials < 1:
        raise ConfigError("verify-conditions needs trials >= 1")
    alpha = _effective_alpha(cfg, n)
    inc = sample_increment_matrix(Seed(cfg.seed), trials, n)
    h0, h1, h2 = diagnostics.h_series(inc, alpha)
    table = diagnostics.expectation_table(n, alpha)
    b0 = cfg.C * table.e_h0
    b1 = cfg.C * table.e_h1
    b2 = (cfg.C / alpha) * table.e_h2

    def rows():
        for t in range(trials):
            v0, v1, v2 = h0[t], h1[t], h2[t]
            bad = (v0 > b0) | (v1 > b1) | (v2 > b2)
            for i in range(n):
                yield (t, i + 1, v0[i], v1[i], v2[i], b0[i], b1[i], b2[i], bool(bad[i]))

    return write_csv(Path(cfg.out_dir) / "conditions.csv", CONDITIONS_HEADER, rows())


def cmd_delta_ratio(cfg: ExperimentConfig) -> Path:
    """Running realized-to-expected ratios of the quadratic functional; ratio.csv."""
    n, trials = int(cfg.n), int(cfg.trials)
    if trials < 2:
        raise ConfigError("delta-ratio needs trials >= 2")
    alpha = _effective_alpha(cfg, n)
    inc = sample_increment_matrix(Seed(cfg.seed), trials, n)
    running = diagnostics.delta_running(inc, alpha)
    expected = diagnostics.expected_delta_running(n, alpha)

    def rows():
        for t in range(trials):
            for k in range(n):
                d = running[t, k]
                e = expected[k]
                yield (t, k + 1, d, e, d / e)

    return write_csv(Path(cfg.out_dir) / "ratio.csv", RATIO_HEADER, rows())


def cmd_histograms(cfg: ExperimentConfig) -> Path:
    """Histograms of the centered laws at a few indices; histograms.csv."""
    n, trials = int(cfg.n), int(cfg.trials)
    indices = [i for i in cfg.hist_indices if i <= n]
    if not indices:
        raise ConfigError(f"no histogram indices <= n={n}")
    alpha = _effective_alpha(cfg, n)
    inc = sample_increment_matrix(Seed(cfg.seed), trials, n)
    h0, h1, h2 = diagnostics.h_series(inc, alpha)
    e0, e1, e2 = diagnostics.expected_H_arrays(n, alpha)

    def rows():
        for name, series, expected in (("H0", h0, e0), ("H1", h1, e1), ("H2", h2, e2)):
            for i in indices:
                centered = series[:, i - 1] - expected[i - 1]
                counts, edges = np.histogram(centered, bins="fd")
                for b in range(len(counts)):
                    yield (name, i, edges[b], edges[b + 1], int(counts[b]))

    return write_csv(Path(cfg.out_dir) / "histograms.csv", HISTOGRAM_HEADER, rows())


def _trace_rows(record: cna.RunRecord, seed_label: int):
    for j in range(record.n):
        yield (
            record.algo,
            seed_label,
            int(record.iters[j]),
            int(record.grad_evals[j]),
            record.f_query[j],
            record.grad_norm_y[j],
            record.grad_norm_xbar[j],
        )


def matfac_records(cfg: ExperimentConfig) -> tuple[list[cna.RunRecord], list[cna.RunRecord], float]:
    """Paired descent/momentum runs on the factorization benchmark.

    Returns (gd records, cna records, gamma_cap).  Both algorithms start
    from the same per-seed init, drawn with Gaussian entries and rescaled
    to squared Frobenius norm gamma_cap, the boundary of the region where
    the smoothness constants are valid (``init_scale`` overrides the
    squared-norm target).  Unscaled Gaussian entries make the prescribed
    step size diverge, so scaling is not optional here.
    """
    n, d, r, seeds = int(cfg.n), int(cfg.d), int(cfg.r), int(cfg.seeds)
    root = Seed(cfg.seed)
    problem = build_mstar(spawn_stream(root, 0), d, r)
    handle = matfac_objective(problem)
    L = 8.0 * problem.gamma_cap
    gamma = 1.0 / L
    params = cna.params_hessian(L=L, n=n)
    target_norm = (
        math.sqrt(cfg.init_scale) if cfg.init_scale is not None else math.sqrt(problem.gamma_cap)
    )

    gd_records, cna_records = [], []
    for s in range(seeds):
        u0 = spawn_stream(root, 100 + s).generator().standard_normal(d * r)
        x0 = u0 * (target_norm / np.linalg.norm(u0))
        gd_records.append(baselines.gd_run(handle.replicate(), x0, gamma=gamma, n=n))
        cna_records.append(
            cna.run(
                handle.replicate(), x0, n=n, seed=spawn_stream(root, 200 + s),
                p=params, eval_schedule=cna.EvalSchedule(kind="never"),
            )
        )
    return gd_records, cna_records, problem.gamma_cap


def cmd_matfac(cfg: ExperimentConfig) -> Path:
    """Descent vs momentum traces on the factorization benchmark; trace.csv."""
    gd_records, cna_records, gamma_cap = matfac_records(cfg)

    def rows():
        for s, rec in enumerate(gd_records):
            yield from _trace_rows(rec, s)
        for s, rec in enumerate(cna_records):
            yield from _trace_rows(rec, s)

    path = write_csv(Path(cfg.out_dir) / "trace.csv", TRACE_HEADER, rows())
    ball_exits = sum(int((rec.query_norm**2 >= gamma_cap).any()) for rec in gd_records + cna_records)
    write_csv(
        Path(cfg.out_dir) / "summary.csv",
        ["key", "value"],
        [
            ("gamma_cap", gamma_cap),
            ("mean_final_f_gd", float(np.mean([rec.f_query[-1] for rec in gd_records]))),
            ("mean_final_f_cna", float(np.mean([rec.f_query[-1] for rec in cna_records]))),
            ("runs_leaving_smoothness_ball", ball_exits),
        ],
    )
    return path


def smooth_rate_curve(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[cna.RunRecord]]:
    """Mean running-minimum squared gradient norm vs the 4 (f0 - f*) / (gamma k) bound.

    Returns (ks, empirical means, bounds, per-seed records); ks is a
    log-spaced grid of iteration counts.
    """
    n, d, seeds = int(cfg.n), int(cfg.d), int(cfg.seeds)
    lam = np.asarray(cfg.eigenvalues if cfg.eigenvalues else [1.0] * d, dtype=float)
    handle = quadratic_objective(lam)
    if handle.optimum_value is None:
        raise ConfigError("smooth-rate needs a problem with a known optimum value")
    p = cna.params_smooth(L=handle.lipschitz_grad, gamma=cfg.gamma, eta_prime=cfg.eta_prime)
    x0 = np.ones(len(lam))
    gap = handle.f(x0) - handle.optimum_value

    root = Seed(cfg.seed)
    records = []
    min_sq = np.empty((seeds, n))
    for s in range(seeds):
        rec = cna.run(
            handle.replicate(), x0, n=n, seed=spawn_stream(root, s), p=p,
            eval_schedule=cna.EvalSchedule(kind="never"),
        )
        records.append(rec)
        min_sq[s] = np.minimum.accumulate(rec.grad_norm_y**2)

    ks = np.unique(np.logspace(0.0, math.log10(n), num=25).astype(int))
    mean_min = min_sq.mean(axis=0)[ks - 1]
    bounds = 4.0 * gap / (p.gamma * ks)
    return ks, mean_min, bounds, records


def cmd_smooth_rate(cfg: ExperimentConfig) -> Path:
    """Empirical rate check on a convex quadratic; trace.csv + summary.csv."""
    ks, mean_min, bounds, records = smooth_rate_curve(cfg)

    def rows():
        for s, rec in enumerate(records):
            yield from _trace_rows(rec, s)

    path = write_csv(Path(cfg.out_dir) / "trace.csv", TRACE_HEADER, rows())
    write_csv(
        Path(cfg.out_dir) / "summary.csv",
        RATE_SUMMARY_HEADER,
        ((int(k), m, b) for k, m, b in zip(ks, mean_min, bounds)),
    )
    return path


def _build_problem(cfg: ExperimentConfig) -> ObjectiveHandle:
    kind = cfg.problem or "quadratic"
    if kind == "quadratic":
        d = int(cfg.d or 10)
        lam = np.asarray(cfg.eigenvalues if cfg.eigenvalues else [1.0] * d, dtype=float)
        handle = quadratic_objective(lam)
    elif kind == "matfac":
        if cfg.d is None or cfg.r is None:
            raise ConfigError("matfac problem needs both d and r")
        problem = build_mstar(spawn_stream(Seed(cfg.seed), 0), int(cfg.d), int(cfg.r))
        handle = matfac_objective(problem)
    else:
        raise ConfigError(f"unknown problem {kind!r}")
    if cfg.noise > 0.0:
        handle = wrap_stochastic(handle, noise_scale=cfg.noise, rho=cfg.rho)
    return handle


def _cna_params_for(cfg: ExperimentConfig, handle: ObjectiveHandle, n: int) -> cna.CnaParams:
    schedule = cfg.schedule or ("sgc" if handle.has_stochastic_grad else "hessian")
    L = handle.lipschitz_grad
    if L is None:
        raise ConfigError("the cna schedules need a known gradient Lipschitz constant")
    if schedule == "smooth":
        return cna.params_smooth(L=L, gamma=cfg.gamma, eta_prime=cfg.eta_prime)
    if schedule == "hessian":
        return cna.params_hessian(L=L, n=n)
    if schedule == "sgc":
        return cna.params_sgc(L=L, rho=cfg.rho, eta_prime=cfg.eta_prime)
    raise ConfigError(f"unknown schedule {cfg.schedule!r}")


def cmd_run(cfg: ExperimentConfig) -> Path:
    """One configured optimizer run; trace.csv + summary.csv."""
    n = int(cfg.n)
    handle = _build_problem(cfg)
    x0_gen = spawn_stream(Seed(cfg.seed), 1).generator()
    x0 = x0_gen.standard_normal(handle.dim)

    if cfg.algo == "cna":
        p = _cna_params_for(cfg, handle, n)
        sched = cna.EvalSchedule.parse(cfg.eval_schedule) if cfg.eval_schedule else None
        record = cna.run(handle, x0, n=n, seed=spawn_stream(Seed(cfg.seed), 2), p=p, eval_schedule=sched)
    elif cfg.algo == "gd":
        gamma = cfg.gamma if cfg.gamma is not None else (
            1.0 / handle.lipschitz_grad if handle.lipschitz_grad else None
        )
        if gamma is None:
            raise ConfigError("gd needs a gamma (no Lipschitz constant to default from)")
        record = baselines.gd_run(handle, x0, gamma=gamma, n=n)
    elif cfg.algo == "nce":
        eta = cfg.eta if cfg.eta is not None else (
            1.0 / handle.lipschitz_grad if handle.lipschitz_grad else None
        )
        if eta is None:
            raise ConfigError("nce needs an eta (no Lipschitz constant to default from)")
        record = baselines.nce_run(
            handle, x0, baselines.NceParams(eta=eta, theta=cfg.theta, gamma_nc=cfg.gamma_nc, s=cfg.s), n=n
        )
    elif cfg.algo == "restarted-nm":
        eta = cfg.eta if cfg.eta is not None else (
            1.0 / handle.lipschitz_grad if handle.lipschitz_grad else None
        )
        if eta is None:
            raise ConfigError("restarted-nm needs an eta (no Lipschitz constant to default from)")
        _, record = baselines.restarted_nm_run(
            handle, x0, baselines.RestartParams(B=cfg.B, K=cfg.K, eta=eta, theta=cfg.theta),
            max_total_iters=n,
        )
    else:
        raise ConfigError(f"unknown optimizer algo={cfg.algo!r}")

    path = write_csv(Path(cfg.out_dir) / "trace.csv", TRACE_HEADER, _trace_rows(record, cfg.seed))
    write_csv(
        Path(cfg.out_dir) / "summary.csv",
        ["key", "value"],
        [
            ("algo", record.algo),
            ("n", record.n),
            ("best_kind", record.best_kind),
            ("best_grad_norm", record.best_grad_norm),
            ("total_grad_evals", record.total_grad_evals),
        ],
    )
    return path


COMMANDS = {
    "verify-conditions": cmd_verify_conditions,
    "delta-ratio": cmd_delta_ratio,
    "histograms": cmd_histograms,
    "matfac": cmd_matfac,
    "smooth-rate": cmd_smooth_rate,
    "run": cmd_run,
}
