"""Figure rendering for run reports.

Figures are written next to the CSV outputs of a run; they are a human
convenience and carry no assertion weight, so rendering failures must
never fail a run.  Uses the Agg backend throughout (file output only).
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_norm_history",
    "plot_classification",
    "plot_state",
    "plot_convergence",
]

_CLASS_COLORS = {"minus": "tab:blue", "zero": "tab:gray", "plus": "tab:red"}


def _save(fig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def plot_norm_history(history: np.ndarray, path) -> None:
    """Relative norm drift over time on a symlog axis."""
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    ax.plot(history[:, 1], history[:, 3], lw=1.0, color="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("relative norm drift")
    ax.set_yscale("symlog", linthresh=1e-15)
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_classification(grid, classification, path) -> None:
    """Boundary faces colored by their flux-sign class."""
    labels = np.full(classification.n_faces, "zero", dtype=object)
    labels[classification.gamma_minus] = "minus"
    labels[classification.gamma_plus] = "plus"
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    if grid.dim == 1:
        for name in ("minus", "zero", "plus"):
            sel = labels == name
            if np.any(sel):
                ax.scatter(grid.face_centroid[sel, 0], classification.f_dot_nu[sel],
                           color=_CLASS_COLORS[name], label=name)
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_xlabel("x")
        ax.set_ylabel("F . nu")
    else:
        for name in ("minus", "zero", "plus"):
            sel = labels == name
            if np.any(sel):
                ax.scatter(grid.face_centroid[sel, 0], grid.face_centroid[sel, 1],
                           s=4, color=_CLASS_COLORS[name], label=name)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def plot_state(grid, values: np.ndarray, path, title: str = "") -> None:
    """|psi|^2 over the domain: line in 1D, filled image in 2D."""
    density = np.abs(values) ** 2
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    if grid.dim == 1:
        ax.plot(grid.centers[:, 0], density, lw=1.2)
        ax.set_xlabel("x")
        ax.set_ylabel("|psi|^2")
    else:
        lo, hi = grid.domain.bounding_box
        if grid.interior_mask is not None:
            img = np.full(grid.interior_mask.shape, np.nan)
            img[grid.interior_mask] = density
        else:
            img = density.reshape(grid.resolution)
        pm = ax.imshow(img.T, origin="lower", extent=(lo[0], hi[0], lo[1], hi[1]),
                       interpolation="nearest")
        fig.colorbar(pm, ax=ax, label="|psi|^2")
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def plot_convergence(rows, orders, path) -> None:
    """log-log error against h with the fitted slopes in the legend.

    rows: (resolution, h, dt, oracle_l2_error, born_l1_error); orders:
    (quantity, order) pairs as written to the order table.
    """
    hs = np.array([r[1] for r in rows])
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    order_map = dict(orders)
    for col, name in ((3, "oracle_l2"), (4, "born_l1")):
        errs = np.array([r[col] for r in rows])
        if np.all(errs > 0.0):
            o = order_map.get(name)
            tag = f" (order {o:.2f})" if isinstance(o, float) else ""
            ax.loglog(hs, errs, "o-", label=f"{name}{tag}")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.grid(which="both", alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)
