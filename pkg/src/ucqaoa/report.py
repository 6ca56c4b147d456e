"""Delimited tables and matplotlib figures for run and bench reports."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (6.4, 4.0)


def write_table(rows: list[dict], stream, columns=None, delimiter: str = ","):
    columns = columns or (list(rows[0]) if rows else [])
    writer = csv.DictWriter(stream, fieldnames=columns, delimiter=delimiter, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_energy_trace(report: dict, path) -> Path:
    """Accepted energy after every refinement iteration, coarsest level first."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    trace = np.asarray(report["energy_trace"], dtype=float)
    ax.plot(np.arange(len(trace)), trace, marker=".", lw=1)
    boundaries = np.cumsum([0] + [lv["accepted"] + lv["rejected"] for lv in report["levels"][1:]])
    for lv, x in zip(report["levels"][1:], boundaries[:-1]):
        ax.axvline(x + 0.5, color="0.8", lw=0.8)
        ax.text(x + 0.6, trace.max(), f"L{lv['level']}", fontsize=7, va="top")
    if trace.min() > 0:
        ax.set_yscale("log")
    ax.set_xlabel("refinement iteration")
    ax.set_ylabel("Ising energy")
    ax.set_title("Accepted energy through the hierarchy")
    return _save(fig, Path(path))


def plot_schedule(report: dict, path) -> Path:
    on = np.asarray(report["schedule"]["on"])
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.imshow(on.T, aspect="auto", cmap="Greys", interpolation="nearest", vmin=0, vmax=1)
    ax.set_xlabel("period")
    ax.set_ylabel("unit")
    ax.set_title("Commitment (black = on)")
    return _save(fig, Path(path))


def plot_bench(rows: list[dict], path) -> Path:
    """Grouped bars of penalized energy per instance and solver."""
    rows = [r for r in rows if r.get("status") == "ok"]
    solvers = sorted({r["solver"] for r in rows})
    cases = sorted({(r["units"], r["horizon"], r["seed"]) for r in rows})
    fig, ax = plt.subplots(figsize=FIGSIZE)
    width = 0.8 / max(len(solvers), 1)
    for k, solver in enumerate(solvers):
        values = []
        for case in cases:
            match = [r["energy"] for r in rows if r["solver"] == solver and (r["units"], r["horizon"], r["seed"]) == case]
            values.append(match[0] if match else np.nan)
        ax.bar(np.arange(len(cases)) + k * width, values, width, label=solver)
    ax.set_xticks(np.arange(len(cases)) + 0.4 - width / 2)
    ax.set_xticklabels([f"{u}x{h}\ns{s}" for u, h, s in cases], fontsize=7)
    energies = [r["energy"] for r in rows]
    if energies and min(energies) > 0:
        ax.set_yscale("log")
    ax.set_ylabel("penalized objective")
    ax.legend(fontsize=8)
    ax.set_title("Solver comparison")
    return _save(fig, Path(path))
