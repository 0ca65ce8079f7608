"""Matplotlib figures rendered next to the delimited report outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .stats import EvasionReport  # noqa: E402

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": "mutatree"}}


def _save(fig, path: Path) -> None:
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def render_mutation_histogram(report: EvasionReport, engine: str, path: Path) -> None:
    histogram = report.engines[engine].mutation_histogram
    numeric = sorted((k for k in histogram if k != "failed"), key=int)
    labels = numeric + (["failed"] if "failed" in histogram else [])
    values = [histogram[k] for k in labels]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    colors = ["tab:blue"] * len(numeric) + (["tab:red"] if "failed" in histogram else [])
    ax.bar(range(len(labels)), values, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels)
    ax.set_xlabel("mutations needed for surrogate misclassification")
    ax.set_ylabel("samples")
    ax.set_title(f"Mutation count distribution ({engine})")
    fig.tight_layout()
    _save(fig, path)


def render_evasion_rates(report: EvasionReport, path: Path) -> None:
    engines = sorted(report.engines)
    mutated = [report.engines[e].surrogate_mutation_rate for e in engines]
    evaded = [report.engines[e].victim_evasion_rate_over_total for e in engines]
    x = range(len(engines))
    width = 0.38
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar([i - width / 2 for i in x], mutated, width, label="mutated on surrogate", color="tab:blue")
    ax.bar(
        [i + width / 2 for i in x],
        evaded,
        width,
        label="evaded victim (over total)",
        color="tab:purple",
        hatch="//",
    )
    ax.set_xticks(list(x))
    ax.set_xticklabels(engines)
    ax.set_ylabel("fraction of searched malware")
    ax.set_ylim(0.0, 1.0)
    ax.set_title("Surrogate mutation and victim evasion rates")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def render_figures(report: EvasionReport, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for engine in sorted(report.engines):
        path = out_dir / f"mutations_{engine}.png"
        render_mutation_histogram(report, engine, path)
        written.append(path)
    if report.engines:
        path = out_dir / "evasion_rates.png"
        render_evasion_rates(report, path)
        written.append(path)
    return written
