"""Five figure renderers over ppk CSV tables.

Each renderer reads one CSV produced by the ppk command-line tool and
writes one image. Renders never recompute physics from the model: the
only derived overlay is the closed-form continuous critical line
delta_c(g) = -sqrt(g^2 - kappa^2/4) drawn on phase-diagram heatmaps.
Output is deterministic: fixed style, Agg backend, pinned PNG metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import SchemaError, Table, read_table

SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": "ppk-fig"}}

KINDS = ("heatmap", "lines", "wigner_panel", "trajectory_panel", "scaling")


def _new_axes(figsize=(6.0, 4.5)):
    fig, ax = plt.subplots(figsize=figsize)
    return fig, ax


def _finish(fig, out_path):
    fig.tight_layout()
    fig.savefig(out_path, **SAVE_KWARGS)
    plt.close(fig)
    return out_path


def render_heatmap(table: Table, out_path):
    """Phase-diagram heatmap in the (g, delta) plane with the critical line."""
    table.require("g", "delta", "n_scaled")
    g = table.array("g")
    delta = table.array("delta")
    z = table.array("n_scaled")
    gs = np.unique(g)
    ds = np.unique(delta)
    grid = np.full((len(ds), len(gs)), np.nan)
    gi = {v: i for i, v in enumerate(gs)}
    di = {v: i for i, v in enumerate(ds)}
    for gg, dd, zz in zip(g, delta, z):
        grid[di[dd], gi[gg]] = zz
    fig, ax = _new_axes()
    mesh = ax.pcolormesh(gs, ds, grid, shading="nearest", cmap="inferno")
    fig.colorbar(mesh, ax=ax, label=r"$\langle a^\dagger a\rangle\, u/\kappa$")
    kappa = float(table.rows[0].get("kappa", 1.0) or 1.0)
    gfine = np.linspace(max(gs.min(), 0.5 * kappa + 1e-6), gs.max(), 200)
    if len(gfine) and gfine[-1] > gfine[0]:
        ax.plot(gfine, -np.sqrt(gfine ** 2 - 0.25 * kappa ** 2), "k--", lw=1.2,
                label=r"$\delta_c(g)$")
        ax.legend(loc="lower right")
    ax.set_xlabel(r"$g/\kappa$")
    ax.set_ylabel(r"$\delta/\kappa$")
    ax.set_ylim(ds.min(), ds.max())
    return _finish(fig, out_path)


def render_lines(table: Table, out_path):
    """Diffusion (or similar) vs detuning, one line per (u, scheme), log y."""
    table.require("delta", "diffusion")
    has_u = "u" in table.columns
    has_scheme = "scheme" in table.columns
    keys = []
    for row in table.rows:
        keys.append((row.get("u") if has_u else None,
                     row.get("scheme") if has_scheme else None))
    fig, ax = _new_axes()
    for key in sorted(set(keys), key=str):
        sel = [i for i, k in enumerate(keys) if k == key]
        d = np.array([table.rows[i]["delta"] for i in sel], dtype=float)
        v = np.array([table.rows[i]["diffusion"] for i in sel], dtype=float)
        order = np.argsort(d)
        label_bits = []
        if key[0] is not None:
            label_bits.append(f"u={key[0]:g}")
        if key[1] is not None:
            label_bits.append(str(key[1]))
        ax.plot(d[order], np.maximum(v[order], 1e-300),
                label=" ".join(label_bits) or None)
    ax.set_yscale("log")
    ax.set_xlabel(r"$\delta/\kappa$")
    ax.set_ylabel(r"$D/\kappa$")
    if any(k != (None, None) for k in keys):
        ax.legend()
    return _finish(fig, out_path)


def render_wigner_panel(table: Table, out_path):
    """Square phase-space heatmap with symmetric axes."""
    table.require("x", "p", "w")
    x = table.array("x")
    p = table.array("p")
    w = table.array("w")
    xs = np.unique(x)
    ps = np.unique(p)
    grid = np.full((len(ps), len(xs)), np.nan)
    xi = {v: i for i, v in enumerate(xs)}
    pi = {v: i for i, v in enumerate(ps)}
    for xx, pp, ww in zip(x, p, w):
        grid[pi[pp], xi[xx]] = ww
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    lim = max(abs(xs).max(), abs(ps).max())
    mesh = ax.pcolormesh(xs, ps, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=r"$W(x, p)$")
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.set_xlabel(r"$x$")
    ax.set_ylabel(r"$p$")
    return _finish(fig, out_path)


def render_trajectory_panel(table: Table, out_path):
    """Measurement current and conditional moments along one record."""
    table.require("time", "current", "n_mean", "p_mean")
    points = sorted({row.get("point", 0) for row in table.rows})
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 5.0), sharex=True)
    for pt in points:
        rows = [r for r in table.rows if r.get("point", 0) == pt]
        t = np.array([r["time"] for r in rows], dtype=float)
        ax1.plot(t, [r["current"] for r in rows], lw=0.6)
        ax2.plot(t, [r["n_mean"] for r in rows], lw=0.8)
        ax2.plot(t, [r["p_mean"] for r in rows], lw=0.8, ls="--")
    ax1.set_ylabel(r"$I(t)$")
    ax2.set_ylabel(r"$\langle n\rangle$, $\langle p\rangle$")
    ax2.set_xlabel(r"$t\,\kappa$")
    return _finish(fig, out_path)


def render_scaling(table: Table, out_path):
    """Max diffusion coefficient vs kappa/U per (g, scheme), log ordinate."""
    table.require("kappa_over_u", "d_max")
    has_g = "g" in table.columns
    has_scheme = "scheme" in table.columns
    keys = [(row.get("g") if has_g else None,
             row.get("scheme") if has_scheme else None) for row in table.rows]
    fig, ax = _new_axes()
    for key in sorted(set(keys), key=str):
        sel = [i for i, k in enumerate(keys) if k == key]
        kou = np.array([table.rows[i]["kappa_over_u"] for i in sel], dtype=float)
        v = np.array([table.rows[i]["d_max"] for i in sel], dtype=float)
        order = np.argsort(kou)
        bits = []
        if key[0] is not None:
            bits.append(f"g={key[0]:g}")
        if key[1] is not None:
            bits.append(str(key[1]))
        ax.plot(kou[order], v[order], marker="o", label=" ".join(bits) or None)
    ax.set_yscale("log")
    ax.set_xlabel(r"$\kappa/u$")
    ax.set_ylabel(r"$\max_\delta D/\kappa$")
    if any(k != (None, None) for k in keys):
        ax.legend()
    return _finish(fig, out_path)


RENDERERS = {
    "heatmap": render_heatmap,
    "lines": render_lines,
    "wigner_panel": render_wigner_panel,
    "trajectory_panel": render_trajectory_panel,
    "scaling": render_scaling,
}


def render(kind: str, in_path, out_path):
    if kind not in RENDERERS:
        raise SchemaError(f"unknown figure kind {kind!r}; expected one of {KINDS}")
    table = read_table(in_path)
    return RENDERERS[kind](table, out_path)
