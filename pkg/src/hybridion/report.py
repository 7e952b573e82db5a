"""Figures written next to tabular outputs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _loglog_ok(x, y) -> bool:
    return bool(np.all(np.asarray(x) > 0) and np.all(np.asarray(y) > 0))


def plot_sweep(rec: dict, path: Path, columns: list[str] | None = None) -> Path:
    """One panel per scalar output against the swept value."""
    out = rec["outputs"]
    cols = columns or [c for c in out["columns"][1:] if any(c in r for r in out["rows"])]
    cols = cols[:12]
    x = np.array([r["value"] for r in out["rows"]], dtype=float)
    ncol = min(3, max(1, len(cols)))
    nrow = max(1, -(-len(cols) // ncol))
    fig, axes = plt.subplots(nrow, ncol, figsize=(4 * ncol, 3 * nrow), squeeze=False)
    for ax, c in zip(axes.flat, cols):
        y = np.array([r.get(c, np.nan) for r in out["rows"]], dtype=float)
        ax.plot(x, y, "o-", ms=3)
        if _loglog_ok(x, y) and len(x) > 1 and x.max() / x.min() > 50:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(out["parameter"])
        ax.set_title(c, fontsize=9)
    for ax in list(axes.flat)[len(cols):]:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_spectrum(rec: dict, path: Path) -> Path:
    sp = rec["outputs"]["spectrum"]
    w = np.asarray(sp["omega"])
    J = np.asarray(sp["J"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(w / (2 * np.pi), J)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel(r"$J(\omega)$ ($\Omega$ rad/s)")
    ax.set_title(f"charge-qubit noise, R_r = {rec['outputs']['R_r']:.3g} Ohm", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def figure_for(rec: dict, csv_path: Path) -> Path | None:
    """Render the figure matching a CSV output, if the command has one."""
    png = Path(csv_path).with_suffix(".png")
    if rec["command"] == "sweep":
        return plot_sweep(rec, png)
    if rec["command"] == "noise":
        return plot_spectrum(rec, png)
    return None
