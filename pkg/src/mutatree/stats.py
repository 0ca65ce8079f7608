"""Aggregate statistics over discovered mutation paths."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .mutations import ALL_KINDS, KIND_LABELS, MutationKind, MutationPath

STATS_COLUMNS = ("Alone", "In Group", "Repeats", "Affected Instances", "Total Occurrence")


@dataclass
class KindStats:
    alone: int = 0
    in_group: int = 0
    repeats: int = 0
    affected_instances: int = 0
    total_occurrence: int = 0

    def as_row(self) -> tuple[int, int, int, int, int]:
        return (self.alone, self.in_group, self.repeats, self.affected_instances, self.total_occurrence)


def compute_mutation_stats(paths: Sequence[MutationPath]) -> dict[MutationKind, KindStats]:
    """Per-kind usage over successful paths.

    alone: paths made of this kind exclusively (any length);
    in_group: paths containing it alongside other kinds;
    repeats: paths where it occurs at least twice;
    affected_instances: paths containing it at all;
    total_occurrence: summed occurrences.
    """
    stats = {kind: KindStats() for kind in ALL_KINDS}
    for p in paths:
        if not p.surrogate_benign or not p.path:
            continue
        counts = Counter(p.path)
        exclusive = len(counts) == 1
        for kind, n in counts.items():
            row = stats[kind]
            row.affected_instances += 1
            row.total_occurrence += n
            if exclusive:
                row.alone += 1
            else:
                row.in_group += 1
            if n >= 2:
                row.repeats += 1
    return stats


def mutation_stats_table(stats: dict[MutationKind, KindStats]) -> list[dict]:
    return [
        {
            "mutation": KIND_LABELS[kind],
            "kind_id": int(kind),
            "alone": stats[kind].alone,
            "in_group": stats[kind].in_group,
            "repeats": stats[kind].repeats,
            "affected_instances": stats[kind].affected_instances,
            "total_occurrence": stats[kind].total_occurrence,
        }
        for kind in ALL_KINDS
    ]


@dataclass
class EngineReport:
    """Per-engine search and transfer outcomes."""

    engine: str
    searched: int = 0
    pre_benign: int = 0
    mutated: int = 0
    failed: int = 0
    invalid_paths: int = 0
    victim_evaded: int = 0
    total_queries: int = 0
    total_iterations: int = 0
    mutation_histogram: dict[str, int] = field(default_factory=dict)

    @property
    def surrogate_mutation_rate(self) -> float:
        return self.mutated / self.searched if self.searched else 0.0

    @property
    def victim_evasion_rate_over_mutated(self) -> float:
        return self.victim_evaded / self.mutated if self.mutated else 0.0

    @property
    def victim_evasion_rate_over_total(self) -> float:
        return self.victim_evaded / self.searched if self.searched else 0.0

    def to_json_dict(self) -> dict:
        return {
            "engine": self.engine,
            "searched": self.searched,
            "pre_benign": self.pre_benign,
            "mutated": self.mutated,
            "failed": self.failed,
            "invalid_paths": self.invalid_paths,
            "victim_evaded": self.victim_evaded,
            "total_queries": self.total_queries,
            "total_iterations": self.total_iterations,
            "surrogate_mutation_rate": self.surrogate_mutation_rate,
            "victim_evasion_rate_over_mutated": self.victim_evasion_rate_over_mutated,
            "victim_evasion_rate_over_total": self.victim_evasion_rate_over_total,
            "mutation_histogram": dict(sorted(self.mutation_histogram.items())),
        }


@dataclass
class EvasionReport:
    seed: int
    total_samples: int
    total_malicious: int
    classifier_metrics: dict = field(default_factory=dict)
    engines: dict[str, EngineReport] = field(default_factory=dict)
    mutation_stats: dict[str, list[dict]] = field(default_factory=dict)
    stage_seeds: dict[str, int] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "format": "mutatree-report",
            "version": 1,
            "seed": self.seed,
            "total_samples": self.total_samples,
            "total_malicious": self.total_malicious,
            "classifier_metrics": self.classifier_metrics,
            "engines": {name: rep.to_json_dict() for name, rep in sorted(self.engines.items())},
            "mutation_stats": self.mutation_stats,
            "stage_seeds": self.stage_seeds,
            "config": self.config,
        }


def engine_report_from_json_dict(obj: dict) -> EngineReport:
    return EngineReport(
        engine=obj["engine"],
        searched=int(obj["searched"]),
        pre_benign=int(obj["pre_benign"]),
        mutated=int(obj["mutated"]),
        failed=int(obj["failed"]),
        invalid_paths=int(obj["invalid_paths"]),
        victim_evaded=int(obj["victim_evaded"]),
        total_queries=int(obj["total_queries"]),
        total_iterations=int(obj.get("total_iterations", 0)),
        mutation_histogram=dict(obj["mutation_histogram"]),
    )


def report_from_json_dict(obj: dict) -> EvasionReport:
    if obj.get("format") != "mutatree-report":
        raise ValueError(f"not a report document: {obj.get('format')!r}")
    return EvasionReport(
        seed=int(obj["seed"]),
        total_samples=int(obj["total_samples"]),
        total_malicious=int(obj["total_malicious"]),
        classifier_metrics=dict(obj["classifier_metrics"]),
        engines={
            name: engine_report_from_json_dict(rep) for name, rep in obj["engines"].items()
        },
        mutation_stats=dict(obj["mutation_stats"]),
        stage_seeds=dict(obj["stage_seeds"]),
        config=dict(obj["config"]),
    )
