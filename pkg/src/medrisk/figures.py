"""Figure rendering for CLI reports.

Each report-producing command can drop PNG figures next to its JSON/CSV
output: misclassification-rate and RMSE bars for attack campaigns, a ranked
severity bar chart for propagation, the framework-coverage matrix, and a
trace overview for simulations. All functions write a file and return its
path; none of them show an interactive window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evasion import CampaignMetrics
from .glucose import GlucoseTrace
from .propagation import SystemRiskEntry
from .risk_vector import FACTOR_EVALUATION_ORDER
from .scoring import COVERAGE_METHODS, framework_coverage_table

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": None}}


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def campaign_rates_figure(
    campaigns: dict[str, CampaignMetrics], path: str | Path
) -> Path:
    """Grouped bars of misclassification rates per patient and scenario."""
    scenarios = sorted(campaigns)
    patients = sorted(
        {pid for m in campaigns.values() for pid in m.per_patient}
    )
    fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    xs = np.arange(len(patients))
    width = 0.8 / max(len(scenarios), 1)
    for panel, metric in zip(axes, ("normal_to_hyper_rate", "hypo_to_hyper_rate")):
        for k, scen in enumerate(scenarios):
            values = [
                getattr(campaigns[scen].per_patient[pid], metric)
                if pid in campaigns[scen].per_patient
                else 0.0
                for pid in patients
            ]
            panel.bar(xs + k * width, values, width=width, label=scen)
        panel.set_xticks(xs + width * (len(scenarios) - 1) / 2)
        panel.set_xticklabels(patients, rotation=30, ha="right")
        panel.set_ylim(0, 105)
        panel.set_title(metric.replace("_", " "))
    axes[0].set_ylabel("misclassified as hyperglycemic (%)")
    axes[0].legend()
    fig.tight_layout()
    return _finish(fig, path)


def campaign_rmse_figure(
    campaigns: dict[str, CampaignMetrics], path: str | Path
) -> Path:
    """Benign vs attacked RMSE per patient for each scenario."""
    scenarios = sorted(campaigns)
    patients = sorted(
        {pid for m in campaigns.values() for pid in m.per_patient}
    )
    series: list[tuple[str, list[float]]] = []
    first = campaigns[scenarios[0]]
    series.append(
        (
            "benign",
            [
                first.per_patient[pid].rmse_benign if pid in first.per_patient else 0.0
                for pid in patients
            ],
        )
    )
    for scen in scenarios:
        series.append(
            (
                f"attacked ({scen})",
                [
                    campaigns[scen].per_patient[pid].rmse_attacked
                    if pid in campaigns[scen].per_patient
                    else 0.0
                    for pid in patients
                ],
            )
        )
    fig, ax = plt.subplots(figsize=(8, 4))
    xs = np.arange(len(patients))
    width = 0.8 / len(series)
    for k, (label, values) in enumerate(series):
        ax.bar(xs + k * width, values, width=width, label=label)
    ax.set_xticks(xs + width * (len(series) - 1) / 2)
    ax.set_xticklabels(patients, rotation=30, ha="right")
    ax.set_ylabel("RMSE (mg/dL)")
    ax.legend()
    fig.tight_layout()
    return _finish(fig, path)


def ranking_figure(entries: list[SystemRiskEntry], path: str | Path, top: int = 12) -> Path:
    """Horizontal bars of the top-ranked system risk entries."""
    shown = entries[:top]
    labels = ["+".join(e.capability.via) for e in shown]
    scores = [e.score.total for e in shown]
    fig, ax = plt.subplots(figsize=(8, 0.5 * max(len(shown), 4) + 1.5))
    ys = np.arange(len(shown))
    ax.barh(ys, scores, color="#a63232")
    ax.set_yticks(ys)
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlim(0, 10)
    ax.set_xlabel("system-level severity (0-10)")
    for y, entry in zip(ys, shown):
        ax.text(
            entry.score.total + 0.1,
            y,
            f"{entry.score.total:.1f} {entry.attack_class.value}",
            va="center",
            fontsize=8,
        )
    fig.tight_layout()
    return _finish(fig, path)


def assessment_figure(breakdowns: list[tuple[str, float]], path: str | Path) -> Path:
    """Per-vulnerability severity bars for the assess command."""
    labels = [vid for vid, _ in breakdowns]
    scores = [total for _, total in breakdowns]
    fig, ax = plt.subplots(figsize=(7, 0.5 * max(len(labels), 4) + 1.5))
    ys = np.arange(len(labels))
    ax.barh(ys, scores, color="#32688c")
    ax.set_yticks(ys)
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlim(0, 10)
    ax.set_xlabel("severity (0-10)")
    fig.tight_layout()
    return _finish(fig, path)


def coverage_figure(path: str | Path) -> Path:
    """Render the factor-coverage matrix as a colored grid."""
    table = framework_coverage_table()
    matrix = np.array(
        [
            [1.0 if table[m][f] else 0.0 for f in FACTOR_EVALUATION_ORDER]
            for m in COVERAGE_METHODS
        ]
    )
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.imshow(matrix, cmap="RdYlGn", vmin=-0.2, vmax=1.2, aspect="auto")
    ax.set_xticks(range(len(FACTOR_EVALUATION_ORDER)))
    ax.set_xticklabels(
        [f.replace("_", "\n") for f in FACTOR_EVALUATION_ORDER], fontsize=8
    )
    ax.set_yticks(range(len(COVERAGE_METHODS)))
    ax.set_yticklabels(COVERAGE_METHODS)
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            ax.text(
                j,
                i,
                "yes" if matrix[i, j] else "no",
                ha="center",
                va="center",
                fontsize=9,
            )
    fig.tight_layout()
    return _finish(fig, path)


def trace_figure(trace: GlucoseTrace, path: str | Path, days: int | None = 3) -> Path:
    """CGM series with meal and bolus markers for the first few days."""
    n = len(trace) if days is None else min(len(trace), days * 288)
    hours = np.arange(n) * trace.step_minutes / 60.0
    fig, ax = plt.subplots(figsize=(10, 3.5))
    ax.plot(hours, trace.cgm[:n], lw=0.8, color="#333333", label="cgm")
    meal_steps = np.flatnonzero(trace.meal_flag[:n])
    ax.plot(
        hours[meal_steps],
        np.full(len(meal_steps), 40.0),
        "^",
        color="#d89000",
        label="meal",
        markersize=5,
    )
    bolus_steps = np.flatnonzero(trace.bolus[:n] > 0)
    ax.plot(
        hours[bolus_steps],
        np.full(len(bolus_steps), 30.0),
        "v",
        color="#3c78b4",
        label="bolus",
        markersize=5,
    )
    ax.axhline(80, color="#aa3333", lw=0.6, ls="--")
    ax.axhline(125, color="#aa8833", lw=0.6, ls="--")
    ax.set_xlabel("hours")
    ax.set_ylabel("mg/dL")
    ax.set_title(trace.patient_id)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return _finish(fig, path)
