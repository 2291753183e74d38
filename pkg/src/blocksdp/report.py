"""Summaries and SVG line charts of a result CSV."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .experiment import COLUMNS

__all__ = ["ReportError", "read_results", "summarize", "report"]


class ReportError(ValueError):
    pass


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != COLUMNS:
            raise ReportError(f"{path}: header does not match {','.join(COLUMNS)}")
        rows = []
        for lineno, r in enumerate(reader, 2):
            try:
                r["n"] = int(r["n"])
                r["K"] = int(r["K"])
                r["avg_degree"] = float(r["avg_degree"])
                r["seed"] = int(r["seed"])
                r["value"] = float(r["value"])
            except (TypeError, ValueError):
                raise ReportError(f"{path}: malformed row at line {lineno}") from None
            rows.append(r)
    return rows


def summarize(rows) -> list[dict]:
    """Mean, standard error and count per (model, degree, metric, method, n).

    The standard error uses the sample standard deviation (ddof=1) and is
    0 for a single observation.
    """
    groups = defaultdict(list)
    for r in rows:
        groups[(r["model"], r["avg_degree"], r["metric_name"], r["method"], r["n"])].append(r["value"])
    out = []
    for key in sorted(groups):
        v = np.asarray(groups[key])
        se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
        out.append(dict(zip(("model", "avg_degree", "metric_name", "method", "n"), key),
                        mean=float(v.mean()), se=se, count=int(v.size)))
    return out


def _chart(series, title, ylabel, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for method in sorted(series):
        pts = sorted(series[method])
        x = [p[0] for p in pts]
        ax.errorbar(x, [p[1] for p in pts], yerr=[p[2] for p in pts], marker="o", capsize=3,
                    label=method)
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "blocksdp", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def report(csv_path, out_dir) -> list[Path]:
    """Write ``summary.csv`` and one SVG per (model, degree, metric)."""
    rows = read_results(csv_path)
    summary = summarize(rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "summary.csv"]
    with open(written[0], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "avg_degree", "metric_name", "method", "n", "mean", "se", "count"])
        for s in summary:
            w.writerow([s["model"], repr(s["avg_degree"]), s["metric_name"], s["method"], s["n"],
                        repr(s["mean"]), repr(s["se"]), s["count"]])

    charts = defaultdict(lambda: defaultdict(list))
    for s in summary:
        charts[(s["model"], s["avg_degree"], s["metric_name"])][s["method"]].append(
            (s["n"], s["mean"], s["se"]))
    for (mdl, deg, metric), series in sorted(charts.items()):
        path = out / f"{mdl}_deg{deg:g}_{metric}.svg"
        _chart(series, f"{mdl}, average degree {deg:g}", metric, path)
        written.append(path)
    return written
