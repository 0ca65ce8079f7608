"""End-to-end harness: data, splits, models, batch search, transfer, report.

Pipeline: load or generate a corpus; split it into disjoint defender and
attacker corpora; fit the preprocessor on the defender corpus; train the
victim network on it; train the surrogate tree on a seeded fraction of the
attacker corpus; search mutations for every malicious attacker sample the
surrogate flags; replay the serialized paths and score them against the
victim. Every stage draws its randomness from a seed derived from the one
run seed, and all artifacts are written with that seed embedded.
"""

from __future__ import annotations

import json
import logging
import math
import multiprocessing
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import reporting
from .dtree import DecisionTreeModel, save_tree, train_decision_tree, tree_to_json, tree_from_json
from .mcts import SearchConfig, search
from .metrics import evaluate_scores
from .mlp import MlpConfig, MlpModel, save_mlp, train_mlp
from .mutations import (
    MutationContext,
    MutationError,
    MutationPath,
    apply_path,
    build_context,
    context_from_json,
    context_to_json,
    save_context,
    write_paths_jsonl,
)
from .pipeline import RecordClassifier
from .preprocess import (
    PreprocessorModel,
    fit_preprocessor,
    fnv1a64,
    preprocessor_from_json,
    preprocessor_to_json,
    save_preprocessor,
    transform,
    transform_many,
)
from .random_search import RandomSearchConfig, random_search
from .records import Label, SampleRecord, ingest_jsonl, write_jsonl
from .stats import EngineReport, EvasionReport, compute_mutation_stats, mutation_stats_table
from .synthetic import generate_synthetic

log = logging.getLogger(__name__)

ENGINES = ("mcts", "random")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class StageError(RuntimeError):
    """A pipeline stage failed (CLI exit code 3)."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "run"
    data_path: str | None = None
    count_per_class: int = 1000
    defender_fraction: float = 0.5
    surrogate_train_fraction: float = 0.6
    engines: tuple[str, ...] = ENGINES
    threshold: float = 0.5
    tree_max_depth: int = 12
    mlp_layer_widths: tuple[int, ...] = (64, 32, 16, 32, 16, 32, 16)
    mlp_epochs: int = 20
    mlp_batch_size: int = 128
    mlp_learning_rate: float = 1e-3
    mcts_iterations: int = 500
    mcts_exploration_c: float = math.sqrt(2.0)
    mcts_simulation_depth: int = 12
    mcts_patience: int | None = 100
    # The experiment pipeline defaults to the score-preserving update: the
    # verbatim rule lets one failed rollout erase a scored branch, which
    # measurably drops the search's hit rate on the hard tail of samples.
    mcts_backprop_mode: str = "preserving"
    random_max_mutations: int = 5
    random_attempts: int | None = None  # None: match the MCTS query budget
    n_candidate_functions: int = 14
    entropy_step: float = 0.05
    timestamp_step: int = 1000
    workers: int = 1
    emit_figures: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.defender_fraction < 1.0:
            raise ConfigError("defender_fraction must be in (0, 1)")
        if not 0.0 < self.surrogate_train_fraction < 1.0:
            raise ConfigError("surrogate_train_fraction must be in (0, 1)")
        unknown = set(self.engines) - set(ENGINES)
        if unknown:
            raise ConfigError(f"unknown engines: {sorted(unknown)}")
        if not self.engines:
            raise ConfigError("at least one engine required")
        if self.count_per_class < 1:
            raise ConfigError("count_per_class must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.mcts_iterations < 1:
            raise ConfigError("mcts_iterations must be >= 1")
        if self.random_max_mutations < 1:
            raise ConfigError("random_max_mutations must be >= 1")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config document must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}  # noqa: C416
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(obj)
        for key in ("engines", "mlp_layer_widths"):
            if key in coerced and coerced[key] is not None:
                coerced[key] = tuple(coerced[key])
        try:
            return cls(**coerced)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["engines"] = list(self.engines)
        out["mlp_layer_widths"] = list(self.mlp_layer_widths)
        return out


def stage_seed(root_seed: int, stage: str) -> int:
    return fnv1a64(f"{root_seed}:{stage}") & 0x7FFFFFFFFFFFFFFF


def split_corpus(
    records: Sequence[SampleRecord], defender_fraction: float, seed: int
) -> tuple[list[SampleRecord], list[SampleRecord]]:
    """Disjoint defender/attacker corpora from a seeded shuffle."""
    ids = [r.sample_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate sample_id values in corpus")
    ordered = sorted(records, key=lambda r: r.sample_id)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    n_defender = int(round(defender_fraction * len(ordered)))
    defender = [ordered[i] for i in perm[:n_defender]]
    attacker = [ordered[i] for i in perm[n_defender:]]
    return defender, attacker


def _labeled_matrix(
    pre: PreprocessorModel, records: Sequence[SampleRecord]
) -> tuple[np.ndarray, np.ndarray]:
    labeled = [r for r in records if r.label is not Label.UNKNOWN]
    X = transform_many(pre, labeled)
    y = np.array([1 if r.label is Label.MALICIOUS else 0 for r in labeled], dtype=np.int64)
    return X, y


@dataclass
class SearchResult:
    sample_id: str
    engine: str
    found: bool
    path: tuple[int, ...]
    iterations_used: int
    queries_used: int
    telemetry: dict = field(default_factory=dict)


# Worker-process state for parallel per-sample searches.
_worker_state: dict = {}


def _init_worker(pre_json: dict, tree_json: dict, ctx_json: dict, cfg_json: dict) -> None:
    config = ExperimentConfig.from_dict(cfg_json)
    pre = preprocessor_from_json(pre_json)
    tree = tree_from_json(tree_json)
    _worker_state["surrogate"] = RecordClassifier(pre, tree, config.threshold)
    _worker_state["ctx"] = context_from_json(ctx_json)
    _worker_state["config"] = config


def _search_one(record: SampleRecord) -> list[SearchResult]:
    surrogate: RecordClassifier = _worker_state["surrogate"]
    ctx: MutationContext = _worker_state["ctx"]
    config: ExperimentConfig = _worker_state["config"]
    return run_searches_for_sample(record, surrogate, ctx, config)


def run_searches_for_sample(
    record: SampleRecord,
    surrogate: RecordClassifier,
    ctx: MutationContext,
    config: ExperimentConfig,
) -> list[SearchResult]:
    """Run every configured engine on one surrogate-malicious sample. The
    random baseline is held to the MCTS query count when both engines run
    and no explicit attempt count is configured.
    """
    results: list[SearchResult] = []
    mcts_queries: int | None = None
    if "mcts" in config.engines:
        outcome = search(
            record,
            surrogate,
            ctx,
            SearchConfig(
                iterations=config.mcts_iterations,
                exploration_c=config.mcts_exploration_c,
                simulation_depth=config.mcts_simulation_depth,
                seed=stage_seed(config.seed, "search"),
                patience=config.mcts_patience,
                backprop_mode=config.mcts_backprop_mode,
            ),
        )
        mcts_queries = outcome.queries_used
        results.append(
            SearchResult(
                sample_id=record.sample_id,
                engine="mcts",
                found=outcome.found,
                path=tuple(int(k) for k in outcome.path or ()),
                iterations_used=outcome.iterations_used,
                queries_used=outcome.queries_used,
                telemetry=dict(outcome.tree_stats),
            )
        )
    if "random" in config.engines:
        budget = None
        attempts = config.random_attempts
        if attempts is None:
            if mcts_queries is not None:
                budget = max(mcts_queries, 1)
            else:
                attempts = config.mcts_iterations
        outcome = random_search(
            record,
            surrogate,
            ctx,
            RandomSearchConfig(
                max_mutations=config.random_max_mutations,
                attempts=attempts,
                query_budget=budget,
                seed=stage_seed(config.seed, "search"),
            ),
        )
        results.append(
            SearchResult(
                sample_id=record.sample_id,
                engine="random",
                found=outcome.found,
                path=tuple(int(k) for k in outcome.path or ()),
                iterations_used=outcome.iterations_used,
                queries_used=outcome.queries_used,
            )
        )
    return results


def run_experiment(config: ExperimentConfig) -> EvasionReport:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = {
        name: stage_seed(config.seed, name)
        for name in ("data", "split", "victim", "surrogate", "context", "search")
    }

    # --- data ---
    try:
        if config.data_path is not None:
            records = ingest_jsonl(config.data_path)
        else:
            records = generate_synthetic(config.count_per_class, seeds["data"])
        if not records:
            raise ValueError("corpus is empty")
    except Exception as exc:
        raise StageError("load-data", str(exc)) from exc

    try:
        defender, attacker = split_corpus(records, config.defender_fraction, seeds["split"])
        write_jsonl(defender, out_dir / "defender.jsonl")
        write_jsonl(attacker, out_dir / "attacker.jsonl")
    except Exception as exc:
        raise StageError("split", str(exc)) from exc

    if not any(r.label is Label.MALICIOUS for r in records):
        # Nothing to attack (and no way to train a malware classifier);
        # still a successful, if empty, run.
        log.warning("corpus contains no malicious samples; emitting an empty report")
        report = EvasionReport(
            seed=config.seed,
            total_samples=len(records),
            total_malicious=0,
            stage_seeds=seeds,
            config=config.to_json_dict(),
        )
        for engine in config.engines:
            report.engines[engine] = EngineReport(engine=engine)
            report.mutation_stats[engine] = mutation_stats_table(compute_mutation_stats([]))
            write_paths_jsonl([], out_dir / f"paths_{engine}.jsonl")
        reporting.emit_report(report, out_dir)
        return report

    # --- preprocessing and models ---
    try:
        pre = fit_preprocessor(defender)
        save_preprocessor(pre, out_dir / "preprocessor.json")
    except Exception as exc:
        raise StageError("preprocess", str(exc)) from exc

    try:
        X_def, y_def = _labeled_matrix(pre, defender)
        victim = train_mlp(
            X_def,
            y_def,
            MlpConfig(
                layer_widths=config.mlp_layer_widths,
                learning_rate=config.mlp_learning_rate,
                epochs=config.mlp_epochs,
                batch_size=config.mlp_batch_size,
                seed=seeds["victim"],
            ),
        )
        save_mlp(victim, out_dir / "victim.json")
    except Exception as exc:
        raise StageError("train-victim", str(exc)) from exc

    try:
        surrogate_model, surrogate_train, surrogate_holdout = train_surrogate(
            pre, attacker, config.surrogate_train_fraction, config.tree_max_depth, seeds["surrogate"]
        )
        save_tree(surrogate_model, out_dir / "surrogate.json")
    except Exception as exc:
        raise StageError("train-surrogate", str(exc)) from exc

    # --- evaluation of both models ---
    try:
        metrics = {}
        X_hold, y_hold = _labeled_matrix(pre, surrogate_holdout)
        if np.unique(y_hold).size == 2:
            metrics["surrogate"] = evaluate_scores(
                surrogate_model.predict_proba(X_hold), y_hold, config.threshold
            )
        X_att, y_att = _labeled_matrix(pre, attacker)
        if np.unique(y_att).size == 2:
            metrics["victim"] = evaluate_scores(
                victim.predict_proba(X_att), y_att, config.threshold
            )
    except Exception as exc:
        raise StageError("evaluate-models", str(exc)) from exc

    # --- mutation context (attacker's training view only) ---
    try:
        ctx = build_context(
            surrogate_train,
            n_candidates=config.n_candidate_functions,
            entropy_step=config.entropy_step,
            timestamp_step=config.timestamp_step,
            rng_seed=seeds["context"],
        )
        save_context(ctx, out_dir / "context.json")
    except Exception as exc:
        raise StageError("context", str(exc)) from exc

    # --- per-sample searches ---
    try:
        surrogate_clf = RecordClassifier(pre, surrogate_model, config.threshold)
        malicious = sorted(
            (r for r in attacker if r.label is Label.MALICIOUS), key=lambda r: r.sample_id
        )
        if not malicious:
            log.warning("no malicious samples in the attacker corpus; report will be empty")
        pre_benign_ids = []
        to_search = []
        for record in malicious:
            if surrogate_clf.is_benign(record):
                pre_benign_ids.append(record.sample_id)
            else:
                to_search.append(record)
        results = _dispatch_searches(to_search, pre, surrogate_model, ctx, config)
    except Exception as exc:
        raise StageError("search", str(exc)) from exc

    # --- serialize paths + telemetry, replay against the victim ---
    try:
        report = EvasionReport(
            seed=config.seed,
            total_samples=len(records),
            total_malicious=len(malicious),
            classifier_metrics=metrics,
            stage_seeds=seeds,
            config=config.to_json_dict(),
        )
        originals = {r.sample_id: r for r in records}
        for engine in config.engines:
            engine_results = [r for r in results if r.engine == engine]
            rep = _score_engine(
                engine, engine_results, originals, surrogate_clf, victim, pre, ctx, config
            )
            rep.pre_benign = len(pre_benign_ids)
            report.engines[engine] = rep
            paths = [
                MutationPath(
                    sample_id=r.sample_id,
                    path=tuple(r.path),  # type: ignore[arg-type]
                    found_by=engine,
                    surrogate_benign=r.found,
                    iterations_used=r.iterations_used,
                )
                for r in engine_results
            ]
            write_paths_jsonl(paths, out_dir / f"paths_{engine}.jsonl")
            _write_telemetry(engine_results, out_dir / f"telemetry_{engine}.jsonl")
            report.mutation_stats[engine] = mutation_stats_table(compute_mutation_stats(paths))
    except Exception as exc:
        raise StageError("replay", str(exc)) from exc

    # --- reports and figures ---
    try:
        reporting.emit_report(report, out_dir)
        if config.emit_figures:
            from . import figures

            figures.render_figures(report, out_dir / "figures")
    except Exception as exc:
        raise StageError("report", str(exc)) from exc
    return report


def train_surrogate(
    pre: PreprocessorModel,
    attacker: Sequence[SampleRecord],
    train_fraction: float,
    max_depth: int,
    seed: int,
) -> tuple[DecisionTreeModel, list[SampleRecord], list[SampleRecord]]:
    """Train the attacker's local tree on a seeded fraction of the attacker
    corpus; the rest is held out for evaluating it.
    """
    labeled = sorted(
        (r for r in attacker if r.label is not Label.UNKNOWN), key=lambda r: r.sample_id
    )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(labeled))
    n_train = int(round(train_fraction * len(labeled)))
    train = [labeled[i] for i in perm[:n_train]]
    holdout = [labeled[i] for i in perm[n_train:]]
    X, y = _labeled_matrix(pre, train)
    model = train_decision_tree(X, y, max_depth=max_depth)
    return model, train, holdout


def _dispatch_searches(
    to_search: list[SampleRecord],
    pre: PreprocessorModel,
    surrogate_model: DecisionTreeModel,
    ctx: MutationContext,
    config: ExperimentConfig,
) -> list[SearchResult]:
    if not to_search:
        return []
    if config.workers == 1:
        surrogate = RecordClassifier(pre, surrogate_model, config.threshold)
        results: list[SearchResult] = []
        for record in to_search:
            results.extend(run_searches_for_sample(record, surrogate, ctx, config))
        return results
    init_args = (
        preprocessor_to_json(pre),
        tree_to_json(surrogate_model),
        context_to_json(ctx),
        config.to_json_dict(),
    )
    with multiprocessing.Pool(config.workers, initializer=_init_worker, initargs=init_args) as pool:
        nested = pool.map(_search_one, to_search, chunksize=8)
    return [r for group in nested for r in group]


def _score_engine(
    engine: str,
    engine_results: list[SearchResult],
    originals: dict[str, SampleRecord],
    surrogate_clf: RecordClassifier,
    victim: MlpModel,
    pre: PreprocessorModel,
    ctx: MutationContext,
    config: ExperimentConfig,
) -> EngineReport:
    """Replay serialized paths on the original records and evaluate transfer.

    Replay must reproduce a surrogate-benign record for every found path;
    anything that does not (or violates caps) is counted as invalid, never
    silently dropped.
    """
    rep = EngineReport(engine=engine)
    histogram: dict[str, int] = {}
    for result in engine_results:
        rep.searched += 1
        rep.total_queries += result.queries_used
        rep.total_iterations += result.iterations_used
        if not result.found:
            rep.failed += 1
            histogram["failed"] = histogram.get("failed", 0) + 1
            continue
        rep.mutated += 1
        histogram[str(len(result.path))] = histogram.get(str(len(result.path)), 0) + 1
        original = originals[result.sample_id]
        try:
            mutated = apply_path(original, result.path, ctx)
        except MutationError as exc:
            log.warning("%s path for %s failed replay: %s", engine, result.sample_id, exc)
            rep.invalid_paths += 1
            continue
        if not surrogate_clf.is_benign(mutated):
            log.warning("%s path for %s no longer surrogate-benign", engine, result.sample_id)
            rep.invalid_paths += 1
            continue
        proba = victim.predict_proba_one(transform(pre, mutated))
        if proba < config.threshold:
            rep.victim_evaded += 1
    rep.mutation_histogram = histogram
    return rep


def _write_telemetry(results: list[SearchResult], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in results:
            row = {
                "sample_id": r.sample_id,
                "iterations_used": r.iterations_used,
                "queries_used": r.queries_used,
                **{k: v for k, v in sorted(r.telemetry.items())},
            }
            # -inf best scores are not valid JSON numbers
            if row.get("best_score") == float("-inf"):
                row["best_score"] = None
            fh.write(json.dumps(row, sort_keys=True) + "\n")
