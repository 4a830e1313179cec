"""Result artifacts: CSV tables and the accuracy chart.

All writers are deterministic: fixed column order, fixed float formatting,
and charts saved without timestamps, so re-running an experiment yields
byte-identical files.
"""

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
# Content-derived element ids instead of per-process ones; together with
# stripped Date metadata this makes repeated renders byte-identical.
matplotlib.rcParams["svg.hashsalt"] = "deauville"

import matplotlib.pyplot as plt
import numpy as np

from ..errors import ValidationError
from .metrics import MetricSummary


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def confusion_filename(model: str, fold: int) -> str:
    return f"confusion_{model}_{fold}.csv"


def write_results_csv(summaries: Sequence[MetricSummary], path: Path) -> None:
    """One row per (model, weighting) with summary and per-fold columns."""
    if not summaries:
        raise ValidationError("no summaries to write")
    iterations = [f.iteration for f in summaries[0].folds]
    for s in summaries:
        if [f.iteration for f in s.folds] != iterations:
            raise ValidationError("all summaries must cover the same fold iterations")
    header = (
        ["model", "weighting", "acc_mean", "acc_sd", "kappa_mean"]
        + [f"acc_fold_{it}" for it in iterations]
        + [f"kappa_fold_{it}" for it in iterations]
    )
    ordered = sorted(summaries, key=lambda s: (s.model_name, s.weighting))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for s in ordered:
            row = [s.model_name, s.weighting, _fmt(s.acc_mean), _fmt(s.acc_sd), _fmt(s.kappa_mean)]
            row += [_fmt(f.accuracy) for f in s.folds]
            row += [_fmt(f.kappa(s.weighting)) for f in s.folds]
            writer.writerow(row)


def write_confusion_csv(confusion: np.ndarray, path: Path) -> None:
    """5x5 counts with labeled axes; rows are true scores."""
    mat = np.asarray(confusion)
    if mat.shape != (5, 5):
        raise ValidationError("confusion must be 5x5")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true\\pred"] + [f"pred_{i}" for i in range(1, 6)])
        for i in range(5):
            writer.writerow([f"true_{i + 1}"] + [int(v) for v in mat[i]])


def render_accuracy_chart(
    summaries: Sequence[MetricSummary],
    path: Path,
    title: str = "Test accuracy by model",
) -> None:
    """Bar chart of per-model mean accuracy with SD error bars.

    Each bar carries a stable SVG gid ("bar-<model>") so the output can
    be inspected structurally.  Written without creation-date metadata.
    """
    if not summaries:
        raise ValidationError("no summaries to chart")
    by_model = {}
    for s in summaries:
        by_model.setdefault(s.model_name, s)
    models = sorted(by_model)
    means = [by_model[m].acc_mean for m in models]
    sds = [by_model[m].acc_sd for m in models]

    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(models), 4.0))
    bars = ax.bar(range(len(models)), means, yerr=sds, capsize=4, color="#4878a8")
    for model, bar in zip(models, bars):
        bar.set_gid(f"bar-{model}")
    ax.set_xticks(range(len(models)))
    ax.set_xticklabels(models, rotation=20, ha="right")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1)
    ax.set_title(title)
    ax.axhline(0.0, color="black", linewidth=0.8)
    fig.tight_layout()
    path = Path(path)
    if path.suffix.lower() == ".svg":
        fig.savefig(path, format="svg", metadata={"Date": None})
    else:
        fig.savefig(path)
    plt.close(fig)
