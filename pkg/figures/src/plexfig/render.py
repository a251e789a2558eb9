"""Render result-CSV grids as faceted heatmaps or line plots.

Reads only the summary CSV written by the experiment harness (coordinate
columns plus metric columns); never recomputes metrics and never touches
the input file beyond reading it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless; selected before pyplot import

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("heatmap", "lines")


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    kind: str
    x: str
    value: str
    out_path: str
    y: str | None = None
    facet: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "heatmap" and not self.y:
            raise ValueError("heatmap needs a --y column")


def load_table(path: str | Path, columns: list[str]) -> dict[str, np.ndarray]:
    """Read the named numeric columns; missing ones are an error naming them."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise ValueError(
                f"{path}: missing columns {', '.join(missing)}"
                f" (header has {', '.join(header)})")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return {c: np.array([float(r[c]) for r in rows]) for c in columns}


def _facet_slices(table, facet):
    if facet is None:
        return [(None, np.ones(len(next(iter(table.values()))), dtype=bool))]
    vals = np.unique(table[facet])
    return [(v, table[facet] == v) for v in vals]


def _grid(xs, ys, vals, context):
    """Pivot long-form (x, y, value) rows into a dense matrix, ascending axes."""
    ux, uy = np.unique(xs), np.unique(ys)
    mat = np.full((uy.size, ux.size), np.nan)
    for x, y, v in zip(xs, ys, vals):
        i, j = np.searchsorted(uy, y), np.searchsorted(ux, x)
        if not np.isnan(mat[i, j]):
            raise ValueError(f"{context}: duplicate cell x={x:g} y={y:g}")
        mat[i, j] = v
    if np.isnan(mat).any():
        i, j = np.argwhere(np.isnan(mat))[0]
        raise ValueError(
            f"{context}: incomplete grid, no row for x={ux[j]:g} y={uy[i]:g}")
    return ux, uy, mat


def _render_heatmap(spec: FigureSpec, table) -> None:
    panels = _facet_slices(table, spec.facet)
    vmin = float(np.min(table[spec.value]))
    vmax = float(np.max(table[spec.value]))
    if vmin == vmax:
        vmax = vmin + 1e-12  # degenerate scale, keep the colormap defined
    fig, axes = plt.subplots(1, len(panels),
                             figsize=(3.2 * len(panels) + 1.2, 3.4),
                             squeeze=False, constrained_layout=True)
    for ax, (fval, mask) in zip(axes[0], panels):
        ux, uy, mat = _grid(
            table[spec.x][mask], table[spec.y][mask], table[spec.value][mask],
            f"facet {spec.facet}={fval:g}" if fval is not None else "grid")
        im = ax.imshow(mat, origin="lower", aspect="auto",
                       vmin=vmin, vmax=vmax, cmap="viridis")
        ax.set_xticks(range(ux.size), [f"{v:g}" for v in ux])
        ax.set_yticks(range(uy.size), [f"{v:g}" for v in uy])
        ax.set_xlabel(spec.x)
        ax.set_ylabel(spec.y)
        if fval is not None:
            ax.set_title(f"{spec.facet} = {fval:g}")
    fig.colorbar(im, ax=axes[0], label=spec.value, shrink=0.9)
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)


def _render_lines(spec: FigureSpec, table) -> None:
    fig, ax = plt.subplots(figsize=(4.6, 3.4), constrained_layout=True)
    for fval, mask in _facet_slices(table, spec.facet):
        order = np.argsort(table[spec.x][mask], kind="stable")
        label = f"{spec.facet} = {fval:g}" if fval is not None else None
        ax.plot(table[spec.x][mask][order], table[spec.value][mask][order],
                marker="o", label=label)
    ax.set_xlabel(spec.x)
    ax.set_ylabel(spec.value)
    ax.set_xticks(np.unique(table[spec.x]))
    if spec.facet is not None:
        ax.legend()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)


def render(spec: FigureSpec) -> None:
    columns = [spec.x, spec.value]
    if spec.kind == "heatmap":
        columns.insert(1, spec.y)
    if spec.facet is not None:
        columns.append(spec.facet)
    table = load_table(spec.csv_path, columns)
    if spec.kind == "heatmap":
        _render_heatmap(spec, table)
    else:
        _render_lines(spec, table)
