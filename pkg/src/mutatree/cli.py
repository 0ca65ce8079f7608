"""Command-line interface.

Exit codes: 0 on success, 2 on configuration errors, 3 on stage failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dtree import load_tree, save_tree, train_decision_tree
from .experiment import (
    ConfigError,
    ExperimentConfig,
    StageError,
    run_experiment,
    run_searches_for_sample,
    stage_seed,
    train_surrogate,
)
from .mcts import SearchConfig
from .metrics import evaluate_scores
from .mlp import MlpConfig, load_mlp, save_mlp, train_mlp
from .mutations import (
    MutationError,
    MutationPath,
    apply_path,
    build_context,
    load_context,
    read_paths_jsonl,
    save_context,
    write_paths_jsonl,
)
from .pipeline import RecordClassifier
from .preprocess import fit_preprocessor, load_preprocessor, save_preprocessor, transform_many
from .records import Label, ingest_jsonl, write_jsonl
from .reporting import emit_report
from .stats import report_from_json_dict
from .synthetic import generate_synthetic

log = logging.getLogger("mutatree")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutatree",
        description="Grey-box classifier evasion: tree search over capped feature mutations.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic labeled corpus")
    p.add_argument("--count-per-class", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-victim", help="fit the preprocessor and train the victim network")
    p.add_argument("--data", required=True, help="defender corpus JSONL")
    p.add_argument("--preprocessor", required=True, help="output preprocessor JSON")
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train-surrogate", help="train the attacker's local tree")
    p.add_argument("--data", required=True, help="attacker corpus JSONL")
    p.add_argument("--preprocessor", required=True, help="fitted preprocessor JSON")
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--context", required=True, help="output mutation-context JSON")
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("search", help="search mutation paths for malicious samples")
    p.add_argument("--engine", choices=("mcts", "random"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--preprocessor", required=True)
    p.add_argument("--model", required=True, help="surrogate tree JSON")
    p.add_argument("--context", required=True)
    p.add_argument("--out", required=True, help="output paths JSONL")
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--attempts", type=int, default=None)
    p.add_argument("--max-mutations", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None, help="cap on samples searched")

    p = sub.add_parser("apply", help="replay serialized paths onto original records")
    p.add_argument("--data", required=True)
    p.add_argument("--paths", required=True)
    p.add_argument("--context", required=True)
    p.add_argument("--out", required=True, help="output mutated records JSONL")

    p = sub.add_parser("evaluate", help="score a model on a labeled corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--preprocessor", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="write metrics JSON here instead of stdout")

    p = sub.add_parser("report", help="re-render CSV/markdown/figures from report.json")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("run-all", help="full pipeline: data, models, search, transfer, report")
    p.add_argument("--config", default=None, help="experiment config JSON document")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--data", default=None, help="corpus JSONL (default: synthetic)")
    p.add_argument("--count-per-class", type=int, default=None)
    p.add_argument("--engines", default=None, help="comma-separated subset of: mcts,random")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--mcts-iterations", type=int, default=None)
    p.add_argument("--mlp-epochs", type=int, default=None)
    p.add_argument("--no-figures", action="store_true")
    return parser


def _load_model(path: str):
    obj = json.loads(Path(path).read_text())
    fmt = obj.get("format")
    if fmt == "mutatree-dtree":
        from .dtree import tree_from_json

        return tree_from_json(obj)
    if fmt == "mutatree-mlp":
        from .mlp import mlp_from_json

        return mlp_from_json(obj)
    raise ConfigError(f"unrecognized model document format: {fmt!r}")


def cmd_gen_data(args: argparse.Namespace) -> int:
    records = generate_synthetic(args.count_per_class, args.seed)
    write_jsonl(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_train_victim(args: argparse.Namespace) -> int:
    records = ingest_jsonl(args.data)
    labeled = [r for r in records if r.label is not Label.UNKNOWN]
    if not labeled:
        raise ConfigError("no labeled records in corpus")
    pre = fit_preprocessor(records)
    X = transform_many(pre, labeled)
    y = np.array([1 if r.label is Label.MALICIOUS else 0 for r in labeled])
    model = train_mlp(X, y, MlpConfig(epochs=args.epochs, seed=args.seed))
    save_preprocessor(pre, args.preprocessor)
    save_mlp(model, args.model)
    print(f"trained victim on {len(labeled)} records; model -> {args.model}")
    return 0


def cmd_train_surrogate(args: argparse.Namespace) -> int:
    records = ingest_jsonl(args.data)
    pre = load_preprocessor(args.preprocessor)
    model, train, holdout = train_surrogate(
        pre, records, args.train_fraction, args.max_depth, args.seed
    )
    save_tree(model, args.model)
    ctx = build_context(train, rng_seed=stage_seed(args.seed, "context"))
    save_context(ctx, args.context)
    print(
        f"trained surrogate on {len(train)} records ({len(holdout)} held out); "
        f"model -> {args.model}, context -> {args.context}"
    )
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    records = ingest_jsonl(args.data)
    pre = load_preprocessor(args.preprocessor)
    tree = load_tree(args.model)
    ctx = load_context(args.context)
    surrogate = RecordClassifier(pre, tree)
    config = ExperimentConfig(
        engines=(args.engine,),
        mcts_iterations=args.iterations,
        random_attempts=args.attempts,
        random_max_mutations=args.max_mutations,
        seed=args.seed,
    )
    malicious = sorted(
        (r for r in records if r.label is Label.MALICIOUS), key=lambda r: r.sample_id
    )
    paths: list[MutationPath] = []
    searched = 0
    for record in malicious:
        if args.limit is not None and searched >= args.limit:
            break
        if surrogate.is_benign(record):
            continue
        searched += 1
        for result in run_searches_for_sample(record, surrogate, ctx, config):
            paths.append(
                MutationPath(
                    sample_id=result.sample_id,
                    path=tuple(result.path),  # type: ignore[arg-type]
                    found_by=result.engine,
                    surrogate_benign=result.found,
                    iterations_used=result.iterations_used,
                )
            )
    write_paths_jsonl(paths, args.out)
    found = sum(1 for p in paths if p.surrogate_benign)
    print(f"searched {searched} samples with {args.engine}: {found} mutated; paths -> {args.out}")
    return 0


def cmd_apply(args: argparse.Namespace) -> int:
    records = {r.sample_id: r for r in ingest_jsonl(args.data)}
    ctx = load_context(args.context)
    paths = read_paths_jsonl(args.paths)
    mutated = []
    invalid = 0
    for p in paths:
        if not p.surrogate_benign:
            continue
        original = records.get(p.sample_id)
        if original is None:
            log.warning("sample %s not present in corpus; skipping", p.sample_id)
            invalid += 1
            continue
        try:
            mutated.append(apply_path(original, p.path, ctx))
        except MutationError as exc:
            log.warning("invalid path for %s: %s", p.sample_id, exc)
            invalid += 1
    write_jsonl(mutated, args.out)
    print(f"applied {len(mutated)} paths ({invalid} invalid); mutated records -> {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    records = ingest_jsonl(args.data)
    labeled = [r for r in records if r.label is not Label.UNKNOWN]
    if not labeled:
        raise ConfigError("no labeled records to evaluate on")
    pre = load_preprocessor(args.preprocessor)
    model = _load_model(args.model)
    X = transform_many(pre, labeled)
    y = np.array([1 if r.label is Label.MALICIOUS else 0 for r in labeled])
    metrics = evaluate_scores(model.predict_proba(X), y)
    text = json.dumps(metrics, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        raise ConfigError(f"{report_path} not found; run `mutatree run-all` first")
    report = report_from_json_dict(json.loads(report_path.read_text()))
    written = emit_report(report, run_dir)
    if not args.no_figures:
        from .figures import render_figures

        written.extend(render_figures(report, run_dir / "figures"))
    print("\n".join(str(p) for p in written))
    return 0


def cmd_run_all(args: argparse.Namespace) -> int:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config document: {exc}") from None
    overrides = {
        "seed": args.seed,
        "output_dir": args.out,
        "data_path": args.data,
        "count_per_class": args.count_per_class,
        "workers": args.workers,
        "mcts_iterations": args.mcts_iterations,
        "mlp_epochs": args.mlp_epochs,
    }
    if args.engines is not None:
        overrides["engines"] = tuple(e.strip() for e in args.engines.split(",") if e.strip())
    if args.no_figures:
        overrides["emit_figures"] = False
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    config = ExperimentConfig.from_dict(base)
    report = run_experiment(config)
    for engine in sorted(report.engines):
        rep = report.engines[engine]
        print(
            f"{engine}: mutated {rep.mutated}/{rep.searched} "
            f"(rate {rep.surrogate_mutation_rate:.4f}), "
            f"victim evaded {rep.victim_evaded} "
            f"(over total {rep.victim_evasion_rate_over_total:.4f})"
        )
    print(f"artifacts -> {config.output_dir}")
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-victim": cmd_train_victim,
    "train-surrogate": cmd_train_surrogate,
    "search": cmd_search,
    "apply": cmd_apply,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "run-all": cmd_run_all,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - stage failures map to exit 3
        log.debug("unhandled failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
