"""Render benchmark CSVs into figures.

The only coupling to the producing library is the documented CSV schemas;
each figure kind declares the header it expects and refuses anything
else.  Rendering is a pure function of the CSV contents: the same file
yields the same data layer (and the same image bytes), so figures are
reproducible artifacts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("margins", "ratio-envelope", "histogram-grid", "convergence")

EXPECTED_HEADERS = {
    "margins": ["trial", "i", "H0", "H1", "H2", "bound0", "bound1", "bound2", "violated"],
    "ratio-envelope": ["trial", "n", "delta", "expected_delta", "ratio"],
    "histogram-grid": ["quantity", "i", "bin_left", "bin_right", "count"],
    "convergence": ["algo", "seed", "iter", "grad_evals", "f", "grad_norm_y", "grad_norm_xbar"],
}


class SchemaError(ValueError):
    """The CSV header does not match the declared figure kind."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input CSVs, figure kind, output path, axis options."""

    inputs: Sequence[str | Path]
    kind: str
    output: str | Path
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None
    log_x: bool = False
    log_y: Optional[bool] = None  # None = the kind's default
    title: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def _read_table(path: str | Path, kind: str) -> dict[str, list[str]]:
    """Read a CSV into columns, enforcing the kind's exact header."""
    expected = EXPECTED_HEADERS[kind]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {expected}")
        if header != expected:
            missing = [c for c in expected if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing column(s) {missing}; expected header {expected}")
            raise SchemaError(f"{path}: header {header} does not match expected {expected}")
        columns: dict[str, list[str]] = {name: [] for name in expected}
        for row in reader:
            for name, value in zip(expected, row):
                columns[name].append(value)
    return columns


def _floats(col: list[str]) -> np.ndarray:
    return np.array([float(v) if v != "" else np.nan for v in col])


# ---------------------------------------------------------------------------
# per-kind data preparation (pure; exercised directly by tests)
# ---------------------------------------------------------------------------


def margins_data(columns: dict[str, list[str]]) -> dict[str, np.ndarray]:
    """Per-index max over trials of (realized - bound) for each quantity."""
    idx = _floats(columns["i"]).astype(int)
    order = np.unique(idx)
    out: dict[str, np.ndarray] = {"i": order}
    for name, bound in (("H0", "bound0"), ("H1", "bound1"), ("H2", "bound2")):
        margin = _floats(columns[name]) - _floats(columns[bound])
        out[name] = np.array([margin[idx == i].max() for i in order])
    return out


def ratio_envelope_data(columns: dict[str, list[str]]) -> dict[str, np.ndarray]:
    """Min/mean/max of the ratio across trials at each running index."""
    k = _floats(columns["n"]).astype(int)
    ratio = _floats(columns["ratio"])
    order = np.unique(k)
    stack = lambda reduce: np.array([reduce(ratio[k == i]) for i in order])
    return {"n": order, "min": stack(np.min), "mean": stack(np.mean), "max": stack(np.max)}


def histogram_grid_data(columns: dict[str, list[str]]) -> dict[tuple[str, int], dict[str, np.ndarray]]:
    """Bars per (quantity, index) panel."""
    quantity = np.array(columns["quantity"])
    idx = _floats(columns["i"]).astype(int)
    left = _floats(columns["bin_left"])
    right = _floats(columns["bin_right"])
    count = _floats(columns["count"])
    panels: dict[tuple[str, int], dict[str, np.ndarray]] = {}
    for q in np.unique(quantity):
        for i in np.unique(idx[quantity == q]):
            mask = (quantity == q) & (idx == i)
            panels[(str(q), int(i))] = {
                "left": left[mask],
                "width": right[mask] - left[mask],
                "count": count[mask],
            }
    return panels


def convergence_data(columns: dict[str, list[str]]) -> dict[str, dict[str, np.ndarray]]:
    """Iteration-wise mean objective value per algorithm vs gradient evaluations."""
    algo = np.array(columns["algo"])
    iters = _floats(columns["iter"]).astype(int)
    evals = _floats(columns["grad_evals"])
    f = _floats(columns["f"])
    curves: dict[str, dict[str, np.ndarray]] = {}
    for a in np.unique(algo):
        mask = algo == a
        ks = np.unique(iters[mask])
        mean_f = np.array([f[mask & (iters == k)].mean() for k in ks])
        mean_evals = np.array([evals[mask & (iters == k)].mean() for k in ks])
        curves[str(a)] = {"grad_evals": mean_evals, "f": mean_f}
    return curves


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _apply_axes_options(ax, spec: FigureSpec, default_log_y: bool) -> None:
    if spec.log_x:
        ax.set_xscale("log")
    log_y = default_log_y if spec.log_y is None else spec.log_y
    if log_y:
        ax.set_yscale("log")


def render(spec: FigureSpec) -> Path:
    """Render the figure described by ``spec`` and write the image file."""
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def build_figure(spec: FigureSpec):
    """The figure object for ``spec``; separated from file I/O for testing."""
    if spec.kind == "margins":
        columns = _read_table(spec.inputs[0], spec.kind)
        data = margins_data(columns)
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), constrained_layout=True)
        for ax, name in zip(axes, ("H0", "H1", "H2")):
            ax.plot(data["i"], data[name], lw=1.0)
            ax.axhline(0.0, color="black", lw=0.8, ls="--")
            ax.set_xlabel(spec.xlabel or "index i")
            ax.set_ylabel(spec.ylabel or f"max over trials of {name} - bound")
            _apply_axes_options(ax, spec, default_log_y=False)
        if spec.title:
            fig.suptitle(spec.title)
        return fig

    if spec.kind == "ratio-envelope":
        columns = _read_table(spec.inputs[0], spec.kind)
        data = ratio_envelope_data(columns)
        fig, ax = plt.subplots(figsize=(6.4, 4.0), constrained_layout=True)
        ax.plot(data["n"], data["mean"], label="mean", lw=1.2)
        ax.plot(data["n"], data["min"], label="min", lw=0.8, ls=":")
        ax.plot(data["n"], data["max"], label="max", lw=0.8, ls=":")
        ax.axhline(1.0, color="black", lw=0.8, ls="--")
        ax.set_xlabel(spec.xlabel or "iteration")
        ax.set_ylabel(spec.ylabel or "realized / expected")
        ax.legend()
        _apply_axes_options(ax, spec, default_log_y=False)
        if spec.title:
            fig.suptitle(spec.title)
        return fig

    if spec.kind == "histogram-grid":
        columns = _read_table(spec.inputs[0], spec.kind)
        panels = histogram_grid_data(columns)
        quantities = sorted({q for q, _ in panels})
        indices = sorted({i for _, i in panels})
        fig, axes = plt.subplots(
            len(indices), len(quantities),
            figsize=(3.2 * len(quantities), 2.6 * len(indices)),
            constrained_layout=True, squeeze=False,
        )
        for row, i in enumerate(indices):
            for col, q in enumerate(quantities):
                ax = axes[row][col]
                panel = panels.get((q, i))
                if panel is not None:
                    ax.bar(panel["left"], panel["count"], width=panel["width"], align="edge")
                ax.set_title(f"{q}, i={i}", fontsize=9)
                _apply_axes_options(ax, spec, default_log_y=False)
        if spec.title:
            fig.suptitle(spec.title)
        return fig

    # convergence
    fig, ax = plt.subplots(figsize=(6.4, 4.0), constrained_layout=True)
    for path in spec.inputs:
        columns = _read_table(path, spec.kind)
        for name, curve in sorted(convergence_data(columns).items()):
            ax.plot(curve["grad_evals"], curve["f"], label=name, lw=1.2)
    ax.set_xlabel(spec.xlabel or "gradient evaluations")
    ax.set_ylabel(spec.ylabel or "objective value")
    ax.legend()
    _apply_axes_options(ax, spec, default_log_y=True)
    if spec.title:
        fig.suptitle(spec.title)
    return fig


def data_layer(fig) -> list:
    """A canonical nested-list view of every plotted line and bar.

    Two renders of the same CSV must produce equal data layers; image
    metadata is deliberately excluded.
    """
    layer = []
    for ax in fig.axes:
        for line in ax.get_lines():
            x, y = line.get_data()
            layer.append(("line", [float(v) for v in x], [float(v) for v in y]))
        for patch in ax.patches:
            layer.append(
                ("bar", float(patch.get_x()), float(patch.get_width()), float(patch.get_height()))
            )
    return layer
