"""Rendering of the four figure kinds.

All figures use a pinned size, dpi and backend and strip the writer's
software tag, so regenerating from the same CSVs is byte-deterministic.
Input files are only ever read.
"""

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .csvio import SchemaError, read_csv, require_columns

__all__ = ["render", "RenderResult"]

FIGSIZE = (6.4, 4.8)
DPI = 110
SAVE_KW = {"dpi": DPI, "metadata": {"Software": None}}


@dataclass
class RenderResult:
    path: str
    caption: str
    stats: dict


def _new_axes(title):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    if title:
        ax.set_title(title)
    return fig, ax


def _load_series(spec, needed):
    loaded = []
    first_columns = None
    for i, path in enumerate(spec.inputs):
        meta, columns, data = read_csv(path)
        require_columns(path, columns, needed)
        if first_columns is None:
            first_columns = columns
        elif columns != first_columns:
            offending = next(
                (c for c in columns if c not in first_columns),
                columns[min(len(columns), len(first_columns)) - 1],
            )
            raise SchemaError(
                f"column {offending!r} of {path} does not match the first "
                f"input's columns {first_columns}"
            )
        label = spec.labels[i] if spec.labels else meta.get("preset", f"series {i}")
        loaded.append((label, meta, columns, data))
    return loaded


def _render_overlay1d(spec):
    loaded = _load_series(spec, ("x", "rho"))
    fig, ax = _new_axes(spec.title)
    ix = loaded[0][2].index("x")
    irho = loaded[0][2].index("rho")
    base = loaded[0][3]
    max_gap = 0.0
    styles = ("-", "--", ":", "-.")
    for k, (label, meta, columns, data) in enumerate(loaded):
        ax.plot(data[:, ix], data[:, irho], styles[k % len(styles)], label=label)
        if k > 0 and data.shape == base.shape:
            max_gap = max(max_gap, float(np.max(np.abs(data[:, irho] - base[:, irho]))))
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend()
    caption = f"max gap to {loaded[0][0]}: {max_gap:.3e}"
    fig.text(0.5, 0.01, caption, ha="center", fontsize=8)
    fig.savefig(spec.output, **SAVE_KW)
    plt.close(fig)
    return RenderResult(spec.output, caption, {"max_gap": max_gap})


def _render_ap_curves(spec):
    loaded = _load_series(spec, ("t", "ap_distance"))
    # order the curves by their Knudsen number, largest first
    def eps_of(item):
        meta = item[1]
        try:
            return float(meta.get("epsilon_run", meta.get("epsilon", "nan")))
        except ValueError:
            return float("nan")

    loaded.sort(key=eps_of, reverse=True)
    fig, ax = _new_axes(spec.title)
    it = loaded[0][2].index("t")
    iap = loaded[0][2].index("ap_distance")
    finals = []
    for k, (label, meta, columns, data) in enumerate(loaded):
        eps = eps_of((label, meta, columns, data))
        name = label if spec.labels else f"eps = {eps:g}"
        ax.semilogy(data[:, it], data[:, iap], label=name)
        finals.append(float(data[-1, iap]))
    ax.set_xlabel("t")
    ax.set_ylabel("|f - rho|_2")
    ax.legend()
    ordered = all(a > b for a, b in zip(finals, finals[1:]))
    caption = (
        f"final distances: {', '.join(f'{v:.3e}' for v in finals)}"
        + ("" if ordered else " (NOT ordered)")
    )
    fig.text(0.5, 0.01, caption, ha="center", fontsize=8)
    fig.savefig(spec.output, **SAVE_KW)
    plt.close(fig)
    return RenderResult(spec.output, caption, {"finals": finals, "ordered": ordered})


def _grid_from(meta, path, data, columns):
    require_columns(path, columns, ("x", "y", "rho"))
    try:
        nx, ny = int(meta["nx"]), int(meta["ny"])
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path} metadata lacks a usable nx/ny grid shape") from exc
    if data.shape[0] != nx * ny:
        raise SchemaError(f"{path} has {data.shape[0]} rows, expected nx*ny = {nx * ny}")
    icol = columns.index
    x = data[:, icol("x")].reshape(nx, ny)
    y = data[:, icol("y")].reshape(nx, ny)
    rho = data[:, icol("rho")].reshape(nx, ny)
    return x, y, rho


def _render_heatmap2d(spec):
    path = spec.inputs[0]
    meta, columns, data = read_csv(path)
    x, y, rho = _grid_from(meta, path, data, columns)
    fig, ax = _new_axes(spec.title)
    mesh = ax.pcolormesh(x, y, rho, shading="nearest")
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    caption = f"range [{rho.min():.4g}, {rho.max():.4g}]"
    fig.text(0.5, 0.01, caption, ha="center", fontsize=8)
    fig.savefig(spec.output, **SAVE_KW)
    plt.close(fig)
    return RenderResult(spec.output, caption, {"min": float(rho.min()), "max": float(rho.max())})


def _render_diffmap2d(spec):
    if len(spec.inputs) != 2:
        raise SchemaError("diffmap2d needs exactly two input files")
    fields = []
    for path in spec.inputs:
        meta, columns, data = read_csv(path)
        fields.append(_grid_from(meta, path, data, columns))
    xa, ya, a = fields[0]
    xb, yb, b = fields[1]
    if a.shape != b.shape:
        raise SchemaError(f"grid shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    max_abs = float(np.max(np.abs(diff)))
    fig, ax = _new_axes(spec.title)
    mesh = ax.pcolormesh(xa, ya, diff, shading="nearest", cmap="RdBu_r",
                         vmin=-max_abs if max_abs > 0 else -1e-300,
                         vmax=max_abs if max_abs > 0 else 1e-300)
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    caption = f"max |diff| = {max_abs:.3e}"
    fig.text(0.5, 0.01, caption, ha="center", fontsize=8)
    fig.savefig(spec.output, **SAVE_KW)
    plt.close(fig)
    return RenderResult(spec.output, caption, {"max_abs_diff": max_abs})


_RENDERERS = {
    "overlay1d": _render_overlay1d,
    "ap_curves": _render_ap_curves,
    "heatmap2d": _render_heatmap2d,
    "diffmap2d": _render_diffmap2d,
}


def render(spec):
    """Render a PlotSpec to its output image; returns a RenderResult with
    the caption text and the numbers reported in it."""
    return _RENDERERS[spec.kind](spec)
