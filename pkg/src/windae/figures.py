"""Figure rendering for the CLI report path.

Every delimited report the CLI writes gets a PNG sibling: a bar chart of
F1/2 differences for model comparisons, and a two-panel score/threshold
plus criticality trace for case studies.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates
import matplotlib.pyplot as plt
import numpy as np

from .evaluate import CaseStudyTrace, ComparisonReport
from .ingest import NORMAL_OPMODE


def render_comparison(report: ComparisonReport, path) -> None:
    """Bar chart of each model's F1/2 difference against the baseline."""
    rows = list(report.rows)
    labels = [row.model_id for row in rows]
    deltas = [row.delta_f_half for row in rows]
    f_values = [row.f_half for row in rows]

    fig, ax = plt.subplots(figsize=(max(6.0, 1.4 * len(rows)), 4.0))
    colors = ["#888888" if rid == report.baseline_id else "#2c7fb8" for rid in labels]
    bars = ax.bar(np.arange(len(rows)), deltas, color=colors)
    for bar, f_half in zip(bars, f_values):
        ax.annotate(
            f"F½={f_half:.3f}",
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom" if bar.get_height() >= 0 else "top",
            fontsize=8,
        )
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(np.arange(len(rows)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel(f"Δ F½ vs {report.baseline_id}")
    ax.set_title("Model comparison")
    fig.tight_layout()
    _save(fig, path)


def render_case_study(trace: CaseStudyTrace, path) -> None:
    """Anomaly score with its threshold on top, criticality below."""
    times = trace.timestamps.astype("datetime64[s]").astype("O")
    fig, (ax_score, ax_crit) = plt.subplots(
        2, 1, figsize=(10.0, 6.0), sharex=True, height_ratios=[2, 1]
    )

    ax_score.plot(times, trace.scores, linewidth=0.6, color="#2c7fb8", label="anomaly score")
    ax_score.axhline(trace.threshold, color="#d95f02", linewidth=1.0, label="threshold")
    not_normal = trace.op_modes != NORMAL_OPMODE
    if not_normal.any():
        ax_score.fill_between(
            times,
            0,
            1,
            where=not_normal,
            transform=ax_score.get_xaxis_transform(),
            color="#cccccc",
            alpha=0.4,
            label="OP-mode not normal",
        )
    ax_score.set_ylabel("score")
    ax_score.legend(loc="upper left", fontsize=8)

    ax_crit.plot(times, trace.criticality, linewidth=0.8, color="#555555")
    ax_crit.set_ylabel("criticality")
    ax_crit.set_xlabel("time")
    ax_crit.xaxis.set_major_formatter(mdates.DateFormatter("%Y-%m-%d"))
    fig.autofmt_xdate()
    fig.tight_layout()
    _save(fig, path)


def _save(fig, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
