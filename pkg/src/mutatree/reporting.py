"""Deterministic report renderers: JSON, CSV and markdown outputs.

Identical report inputs produce byte-identical files; nothing time- or
environment-dependent is written.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path

from .stats import EvasionReport

REPORT_FORMATS = ("json", "csv", "markdown")

_STAT_FIELDS = ("alone", "in_group", "repeats", "affected_instances", "total_occurrence")
_STAT_HEADERS = ("Alone", "In Group", "Repeats", "Affected Instances", "Total Occurrence")


def report_json_text(report: EvasionReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"


def mutation_stats_csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["Mutation", *_STAT_HEADERS])
    for row in rows:
        writer.writerow([row["mutation"], *[row[f] for f in _STAT_FIELDS]])
    return buf.getvalue()


def histogram_csv_text(histogram: dict[str, int]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["mutations", "samples"])
    numeric = sorted((k for k in histogram if k != "failed"), key=int)
    for key in numeric:
        writer.writerow([key, histogram[key]])
    if "failed" in histogram:
        writer.writerow(["failed", histogram["failed"]])
    return buf.getvalue()


def rates_csv_text(report: EvasionReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "engine",
            "searched",
            "pre_benign",
            "mutated",
            "failed",
            "invalid_paths",
            "surrogate_mutation_rate",
            "victim_evaded",
            "victim_evasion_rate_over_mutated",
            "victim_evasion_rate_over_total",
            "total_queries",
        ]
    )
    for name in sorted(report.engines):
        rep = report.engines[name]
        writer.writerow(
            [
                name,
                rep.searched,
                rep.pre_benign,
                rep.mutated,
                rep.failed,
                rep.invalid_paths,
                f"{rep.surrogate_mutation_rate:.6f}",
                rep.victim_evaded,
                f"{rep.victim_evasion_rate_over_mutated:.6f}",
                f"{rep.victim_evasion_rate_over_total:.6f}",
                rep.total_queries,
            ]
        )
    return buf.getvalue()


def mutation_stats_markdown_text(report: EvasionReport) -> str:
    lines = ["# Mutation usage statistics", ""]
    for engine in sorted(report.mutation_stats):
        rows = report.mutation_stats[engine]
        lines.append(f"## Mutations over the surrogate with {engine}")
        lines.append("")
        lines.append("| Mutation | " + " | ".join(_STAT_HEADERS) + " |")
        lines.append("|" + " --- |" * (len(_STAT_HEADERS) + 1))
        for row in rows:
            cells = [row["mutation"], *[str(row[f]) for f in _STAT_FIELDS]]
            lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
    return "\n".join(lines)


def emit_report(
    report: EvasionReport, out_dir: str | Path, formats: tuple[str, ...] = REPORT_FORMATS
) -> list[Path]:
    """Render the report in the requested formats; returns written paths."""
    unknown = set(formats) - set(REPORT_FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def write(name: str, text: str) -> None:
        path = out_dir / name
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)

    if "json" in formats:
        write("report.json", report_json_text(report))
    if "csv" in formats:
        write("evasion_rates.csv", rates_csv_text(report))
        for engine in sorted(report.engines):
            write(
                f"mutation_stats_{engine}.csv",
                mutation_stats_csv_text(report.mutation_stats.get(engine, [])),
            )
            write(
                f"histogram_{engine}.csv",
                histogram_csv_text(report.engines[engine].mutation_histogram),
            )
    if "markdown" in formats:
        write("mutation_stats.md", mutation_stats_markdown_text(report))
    return written


def load_report_schema() -> dict:
    text = resources.files("mutatree").joinpath("report_schema.json").read_text()
    return json.loads(text)


def validate_report(report_obj: dict) -> None:
    """Raise jsonschema.ValidationError if the report document is malformed."""
    import jsonschema

    jsonschema.validate(report_obj, load_report_schema())
