"""Momentum with stochastic parameters: exact event-driven simulation,
diagnostic functionals with closed-form expectations, safeguarded
baselines, and a reproducible experiment harness."""

from .baselines import NceParams, RestartParams, gd_run, nce_run, restarted_nm_run
from .cna import (
    AvgState,
    CnaParams,
    CnaState,
    EvalSchedule,
    RunRecord,
    momentum_coefficient,
    ode_flow_closed_form,
    params_hessian,
    params_sgc,
    params_smooth,
    run,
    step,
    step_detailed,
    streaming_average_update,
    z_flow_coefficient,
)
from .diagnostics import (
    AnVerdict,
    DiagAccumulators,
    ExpectationTable,
    McStats,
    a_n_verdict,
    delta_n,
    diag_update,
    expectation_table,
    expected_H,
    expected_delta,
    expected_delta_upper,
    monte_carlo_stats,
)
from .errors import ConfigError, NumericalFailure
from .oracle import (
    MatFacProblem,
    ObjectiveHandle,
    build_mstar,
    finite_diff_grad,
    matfac_objective,
    quadratic_objective,
    wrap_stochastic,
)
from .rng import JumpSchedule, Seed, sample_increments, spawn_stream

__all__ = [
    "AnVerdict",
    "AvgState",
    "CnaParams",
    "CnaState",
    "ConfigError",
    "DiagAccumulators",
    "EvalSchedule",
    "ExpectationTable",
    "JumpSchedule",
    "MatFacProblem",
    "McStats",
    "NceParams",
    "NumericalFailure",
    "ObjectiveHandle",
    "RestartParams",
    "RunRecord",
    "Seed",
    "a_n_verdict",
    "build_mstar",
    "delta_n",
    "diag_update",
    "expectation_table",
    "expected_H",
    "expected_delta",
    "expected_delta_upper",
    "finite_diff_grad",
    "gd_run",
    "matfac_objective",
    "momentum_coefficient",
    "monte_carlo_stats",
    "nce_run",
    "ode_flow_closed_form",
    "params_hessian",
    "params_sgc",
    "params_smooth",
    "quadratic_objective",
    "restarted_nm_run",
    "run",
    "sample_increments",
    "spawn_stream",
    "step",
    "step_detailed",
    "streaming_average_update",
    "wrap_stochastic",
    "z_flow_coefficient",
]

__version__ = "0.1.0"
