"""Figures written next to a report's delimited output (Agg backend only)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import stats as sps  # noqa: E402

from .stats import CONNECTED, DISCONNECTED, record_connectivity  # noqa: E402


def figure_path(out_path, name: str) -> Path:
    out = Path(out_path)
    return out.with_name(f"{out.stem}_{name}.png")


def plot_k1_histogram(summary: dict, path) -> Path:
    hist = {int(k): v for k, v in summary["k1_histogram"].items()}
    mu = summary["config"]["resolved"]["mu"]
    total = sum(hist.values())
    ks = np.arange(0, max(hist) + 2 if hist else 3)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(ks, [hist.get(int(k), 0) / total for k in ks], width=0.6, label="simulated")
    ax.plot(ks, sps.poisson.pmf(ks, mu), "o-", color="C1", label=f"Poisson({mu:.3g})")
    ax.set_xlabel("isolated vertices K1")
    ax.set_ylabel("frequency")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def plot_period_lengths(connected: np.ndarray, theory: dict, path) -> Path:
    records = record_connectivity(connected)
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
    for ax, kind, key in ((axes[0], CONNECTED, "el_c"), (axes[1], DISCONNECTED, "el_d")):
        lengths = np.array([p.length for p in records if p.kind == kind and p.complete])
        if lengths.size:
            ax.hist(lengths, bins=np.arange(1, lengths.max() + 2) - 0.5, density=True)
            ax.axvline(lengths.mean(), color="C0", ls="--", label=f"mean {lengths.mean():.3g}")
        expected = theory.get(key)
        if expected is not None and math.isfinite(expected):
            ax.axvline(expected, color="C1", label=f"closed form {expected:.3g}")
        ax.set_xlabel(f"{kind} period length (steps)")
        ax.set_yscale("log")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def plot_q_curve(rows: list, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    good = [row for row in rows if row.get("s") and row.get("q_exact") is not None]
    for n in sorted({row["n"] for row in good}):
        sub = sorted((row for row in good if row["n"] == n), key=lambda row: row["s"] / row["r"])
        ratio = np.array([row["s"] / row["r"] for row in sub])
        ax.plot(ratio, [row["q_exact"] / (row["s"] * row["r"]) for row in sub], "o-", label=f"n={n}")
    if good:
        lo = min(row["s"] / row["r"] for row in good)
        hi = max(row["s"] / row["r"] for row in good)
        grid = np.geomspace(lo, hi, 50)
        ax.plot(grid, np.full_like(grid, 8 / np.pi), ":", color="gray", label="8/pi (small s)")
        ax.plot(grid, np.pi / grid, "--", color="gray", label="pi r/s (large s)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("s / r")
    ax.set_ylabel("q / (s r)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def render_report_figures(report, out_path) -> list[Path]:
    """Write the figures that make sense for ``report``; returns their paths."""
    written = []
    if report.kind == "static-census" and report.summary.get("k1_histogram"):
        written.append(plot_k1_histogram(report.summary, figure_path(out_path, "k1")))
    elif report.kind == "dynamic-run":
        traces = report.extras.get("traces", [])
        if traces and len(traces[0].connected) > 1:
            written.append(plot_period_lengths(traces[0].connected, report.summary["theory"],
                                               figure_path(out_path, "periods")))
    elif report.kind == "q-table" and len(report.rows) > 1:
        written.append(plot_q_curve(report.rows, figure_path(out_path, "q")))
    return written
