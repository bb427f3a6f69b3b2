"""CSV tables and companion figures for scenario runs.

CSV is the canonical machine-readable output and the only artifact covered by
the byte-determinism guarantee; figures are rendered alongside each table for
eyeballing.  Writes are atomic (tmp file + rename) so a crashed scenario
never leaves a half-written table.
"""

from __future__ import annotations

import csv
import math
import os
import threading
from typing import Sequence

_PLOT_LOCK = threading.Lock()
_FIG_WIDTH = 6.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    tmp = str(path) + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)
    return str(path)


def _axes(title: str, xlabel: str, ylabel: str):
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(_FIG_WIDTH, _FIG_WIDTH * _GOLDEN))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path) -> str:
    import matplotlib.pyplot as plt

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def fig_doubling_ratios(path, curves: dict) -> str:
    """curves: label -> (t, ratio) arrays of the doubling quotient."""
    with _PLOT_LOCK:
        fig, ax = _axes("doubling ratio", "t", "Phi(2t)/Phi(t)")
        for label, (t, ratio) in curves.items():
            ax.plot(t, ratio, label=label)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.legend(fontsize=8)
        return _save(fig, path)


def fig_gamma(path, curves: dict) -> str:
    """curves: label -> list of (R, gamma) pairs."""
    with _PLOT_LOCK:
        fig, ax = _axes("oscillation modulus", "R", "gamma(R)")
        for label, pairs in curves.items():
            rs = [p[0] for p in pairs]
            gs = [p[1] for p in pairs]
            ax.plot(rs, gs, marker="o", ms=3, label=label)
        ax.set_xscale("log")
        ax.legend(fontsize=8)
        return _save(fig, path)


def fig_norm_bars(path, labels: Sequence[str], values: Sequence[float], title: str) -> str:
    with _PLOT_LOCK:
        fig, ax = _axes(title, "", "norm")
        ax.bar(range(len(labels)), values)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
        return _save(fig, path)


def fig_operator_ratios(path, series: dict, title: str) -> str:
    """series: label -> list of per-function gauge-norm ratios."""
    with _PLOT_LOCK:
        fig, ax = _axes(title, "test function index", "||K f|| / ||f||")
        for label, ratios in series.items():
            ax.plot(range(len(ratios)), ratios, marker=".", ls="", label=label)
        ax.legend(fontsize=8)
        return _save(fig, path)


def fig_estimate_constants(path, series: dict, title: str) -> str:
    """series: label -> list of (N, C_emp)."""
    with _PLOT_LOCK:
        fig, ax = _axes(title, "N", "empirical constant")
        for label, pairs in series.items():
            ns = [p[0] for p in pairs]
            cs = [p[1] for p in pairs]
            ax.plot(ns, cs, marker="o", label=label)
        ax.set_xscale("log", base=2)
        ax.legend(fontsize=8)
        return _save(fig, path)


def fig_residual_orders(path, pairs: Sequence, title: str) -> str:
    with _PLOT_LOCK:
        fig, ax = _axes(title, "N", "relative residual")
        ns = [p[0] for p in pairs]
        rs = [p[1] for p in pairs]
        ax.loglog(ns, rs, marker="o")
        if len(ns) >= 2:
            ref = [rs[0] * (ns[0] / n) ** 2 for n in ns]
            ax.loglog(ns, ref, ls="--", alpha=0.5, label="order 2")
            ax.legend(fontsize=8)
        return _save(fig, path)
