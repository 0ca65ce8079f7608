"""The twelve feature mutations, their per-sample caps, and path replay.

Every mutation is pure: it returns a fresh record and budget and never
touches its inputs. Random values (the entropy of an added string, which
import candidate gets picked) are derived from a hash of
(path seed, mutation kind, per-kind occurrence index) instead of a shared
stream, so any permutation of the same mutation multiset reproduces the
same draws and a serialized path replays to the identical record.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .preprocess import fnv1a64
from .records import Label, SampleRecord


class MutationKind(enum.IntEnum):
    """Stable integer ids; they appear in serialized path files."""

    ADD_STRING = 0
    ADD_STRING_WITH_SIZE = 1
    CHANGE_STRING_ENTROPY = 2
    CHANGE_STRING_ENTROPY_WITH_SIZE = 3
    REMOVE_STRING = 4
    ADD_SECTION = 5
    ADD_BYTES = 6
    ADD_CODE_BYTES = 7
    IMPORT_FUNCTION = 8
    CHANGE_TIMESTAMP = 9
    REMOVE_DEBUG = 10
    CHANGE_SIGNATURE = 11


ALL_KINDS: tuple[MutationKind, ...] = tuple(MutationKind)

KIND_LABELS = {
    MutationKind.ADD_STRING: "Add String",
    MutationKind.ADD_STRING_WITH_SIZE: "Add String with Size",
    MutationKind.CHANGE_STRING_ENTROPY: "Change String Entropy",
    MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE: "Change String Entropy with Size",
    MutationKind.REMOVE_STRING: "Remove String",
    MutationKind.ADD_SECTION: "Add Section",
    MutationKind.ADD_BYTES: "Add Bytes",
    MutationKind.ADD_CODE_BYTES: "Add Code Bytes",
    MutationKind.IMPORT_FUNCTION: "Import Function",
    MutationKind.CHANGE_TIMESTAMP: "Change Timestamp",
    MutationKind.REMOVE_DEBUG: "Remove Debug",
    MutationKind.CHANGE_SIGNATURE: "Change Signature",
}

STRING_SIZE_DELTA = 30
SECTION_SIZE_DELTA = 512
BYTES_SIZE_DELTA = 128
CODE_BYTES_DELTA = 64
ADDED_STRING_ENTROPY_RANGE = (3.0, 6.5)


class MutationError(ValueError):
    """A mutation was applied against a cap or precondition."""


@dataclass(frozen=True)
class BudgetCaps:
    strings_added: int = 15
    strings_added_with_size: int = 5
    entropy_changes: int = 7
    entropy_changes_with_size: int = 3
    strings_removed: int = 4
    # Optional uniform ceiling on applications of any single kind, including
    # the otherwise unlimited ones. None preserves the published rule set;
    # truncated search spaces (tests, calibration) set it to keep the
    # mutation space finite.
    max_per_kind: int | None = None


@dataclass(frozen=True)
class MutationBudget:
    """Per-kind application counts for one sample's mutation history."""

    counts: tuple[int, ...] = (0,) * 12

    @property
    def strings_added(self) -> int:
        return self.counts[MutationKind.ADD_STRING] + self.counts[MutationKind.ADD_STRING_WITH_SIZE]

    @property
    def strings_added_with_size(self) -> int:
        return self.counts[MutationKind.ADD_STRING_WITH_SIZE]

    @property
    def entropy_changes(self) -> int:
        return (
            self.counts[MutationKind.CHANGE_STRING_ENTROPY]
            + self.counts[MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE]
        )

    @property
    def entropy_changes_with_size(self) -> int:
        return self.counts[MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE]

    @property
    def strings_removed(self) -> int:
        return self.counts[MutationKind.REMOVE_STRING]

    def count(self, kind: MutationKind) -> int:
        return self.counts[kind]

    def incremented(self, kind: MutationKind) -> "MutationBudget":
        counts = list(self.counts)
        counts[kind] += 1
        return MutationBudget(tuple(counts))


@dataclass(frozen=True)
class MutationContext:
    """Targets, candidates and knobs shared by every mutation of one run."""

    benign_entropy_target: float
    benign_timestamp_target: int
    candidate_functions: tuple[str, ...]
    entropy_step: float = 0.05
    # One step of timestamp movement, in POSIX seconds.
    timestamp_step: int = 1000
    rng_seed: int = 0
    caps: BudgetCaps = BudgetCaps()
    enabled_kinds: tuple[MutationKind, ...] = ALL_KINDS

    def __post_init__(self) -> None:
        if self.entropy_step <= 0:
            raise ValueError("entropy_step must be positive")
        if self.timestamp_step <= 0:
            raise ValueError("timestamp_step must be positive")
        object.__setattr__(self, "enabled_kinds", tuple(sorted(self.enabled_kinds)))


def path_seed(ctx: MutationContext, sample_id: str) -> int:
    """Per-sample seed for mutation value draws, derived from the context."""
    return fnv1a64(f"{ctx.rng_seed}:{sample_id}")


def _uniform(seed: int, kind: MutationKind, occurrence: int) -> float:
    return fnv1a64(f"{seed}:{int(kind)}:{occurrence}") / 2.0**64


def cap_violation(kind: MutationKind, budget: MutationBudget, caps: BudgetCaps) -> str | None:
    if caps.max_per_kind is not None and budget.count(kind) >= caps.max_per_kind:
        return f"cap exceeded: {kind.name} applied {budget.count(kind)} times"
    if kind in (MutationKind.ADD_STRING, MutationKind.ADD_STRING_WITH_SIZE):
        if budget.strings_added >= caps.strings_added:
            return f"cap exceeded: strings_added={budget.strings_added}"
        if (
            kind is MutationKind.ADD_STRING_WITH_SIZE
            and budget.strings_added_with_size >= caps.strings_added_with_size
        ):
            return f"cap exceeded: strings_added_with_size={budget.strings_added_with_size}"
    elif kind in (MutationKind.CHANGE_STRING_ENTROPY, MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE):
        if budget.entropy_changes >= caps.entropy_changes:
            return f"cap exceeded: entropy_changes={budget.entropy_changes}"
        if (
            kind is MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE
            and budget.entropy_changes_with_size >= caps.entropy_changes_with_size
        ):
            return f"cap exceeded: entropy_changes_with_size={budget.entropy_changes_with_size}"
    elif kind is MutationKind.REMOVE_STRING:
        if budget.strings_removed >= caps.strings_removed:
            return f"cap exceeded: strings_removed={budget.strings_removed}"
    elif kind is MutationKind.REMOVE_DEBUG:
        if budget.count(kind) >= 1:
            return "cap exceeded: remove_debug applied once already"
    elif kind is MutationKind.CHANGE_SIGNATURE:
        if budget.count(kind) >= 1:
            return "cap exceeded: change_signature applied once already"
    return None


_STRING_KINDS = (
    MutationKind.ADD_STRING,
    MutationKind.ADD_STRING_WITH_SIZE,
    MutationKind.CHANGE_STRING_ENTROPY,
    MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE,
    MutationKind.REMOVE_STRING,
)


def precondition_violation(
    kind: MutationKind, sample: SampleRecord, ctx: MutationContext
) -> str | None:
    # Mutations touching a missing field cannot compute a well-defined
    # result, so they are simply not available for that sample.
    if kind in _STRING_KINDS and (sample.num_strings is None or sample.strings_entropy is None):
        return "precondition failed: string features missing"
    if kind is MutationKind.REMOVE_STRING and sample.num_strings == 0:
        return "precondition failed: no strings to remove"
    if kind in (MutationKind.ADD_STRING_WITH_SIZE, MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE):
        if sample.file_size is None:
            return "precondition failed: file_size missing"
    if kind in (MutationKind.ADD_SECTION, MutationKind.ADD_BYTES):
        if sample.file_size is None:
            return "precondition failed: file_size missing"
        if kind is MutationKind.ADD_SECTION and sample.num_sections is None:
            return "precondition failed: num_sections missing"
    if kind is MutationKind.ADD_CODE_BYTES and (
        sample.size_of_code is None or sample.file_size is None
    ):
        return "precondition failed: size_of_code missing"
    if kind is MutationKind.IMPORT_FUNCTION:
        if not any(c not in sample.imported_functions for c in ctx.candidate_functions):
            return "precondition failed: all candidate functions already imported"
    if kind is MutationKind.CHANGE_TIMESTAMP:
        if sample.timestamp is None:
            return "precondition failed: timestamp missing"
        if sample.timestamp == ctx.benign_timestamp_target:
            return "precondition failed: timestamp already at target"
    if kind is MutationKind.REMOVE_DEBUG and not sample.has_debug:
        return "precondition failed: debug flag not set"
    if kind is MutationKind.CHANGE_SIGNATURE and sample.has_signature:
        return "precondition failed: certificate already present"
    return None


def allowed_mutations(
    sample: SampleRecord, budget: MutationBudget, ctx: MutationContext
) -> list[MutationKind]:
    """Exactly the kinds whose caps and preconditions admit one more
    application, in ascending id order.
    """
    return [
        kind
        for kind in ctx.enabled_kinds
        if cap_violation(kind, budget, ctx.caps) is None
        and precondition_violation(kind, sample, ctx) is None
    ]


def _blend_added_string(entropy: float, n: int, h_s: float) -> float:
    return min(8.0, max(0.0, (n * entropy + h_s) / (n + 1)))


def _blend_removed_string(entropy: float, n: int, h_s: float) -> float:
    if n <= 1:
        return 0.0
    return min(8.0, max(0.0, (n * entropy - h_s) / (n - 1)))


def _step_toward(value: float, target: float, step: float) -> float:
    gap = target - value
    if gap > 0:
        return value + min(step, gap)
    return value - min(step, -gap)


def apply(
    sample: SampleRecord,
    kind: MutationKind,
    budget: MutationBudget,
    ctx: MutationContext,
    seed: int,
) -> tuple[SampleRecord, MutationBudget]:
    """Apply one mutation, returning the new record and updated budget.

    Raises MutationError naming the violated cap or precondition when the
    kind is not currently allowed.
    """
    if kind not in ctx.enabled_kinds:
        raise MutationError(f"precondition failed: kind {kind} disabled in context")
    message = cap_violation(kind, budget, ctx.caps) or precondition_violation(kind, sample, ctx)
    if message is not None:
        raise MutationError(message)

    occurrence = budget.count(kind)
    lo, hi = ADDED_STRING_ENTROPY_RANGE

    if kind in (MutationKind.ADD_STRING, MutationKind.ADD_STRING_WITH_SIZE):
        h_s = lo + (hi - lo) * _uniform(seed, kind, occurrence)
        changes: dict = {
            "num_strings": sample.num_strings + 1,
            "strings_entropy": _blend_added_string(sample.strings_entropy, sample.num_strings, h_s),
        }
        if kind is MutationKind.ADD_STRING_WITH_SIZE:
            changes["file_size"] = sample.file_size + STRING_SIZE_DELTA
    elif kind in (MutationKind.CHANGE_STRING_ENTROPY, MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE):
        step = ctx.entropy_step
        changes = {"num_strings": sample.num_strings + 1}
        if kind is MutationKind.CHANGE_STRING_ENTROPY_WITH_SIZE:
            step = 2.0 * ctx.entropy_step
            changes["file_size"] = sample.file_size + STRING_SIZE_DELTA
        changes["strings_entropy"] = min(
            8.0, max(0.0, _step_toward(sample.strings_entropy, ctx.benign_entropy_target, step))
        )
    elif kind is MutationKind.REMOVE_STRING:
        h_s = lo + (hi - lo) * _uniform(seed, kind, occurrence)
        changes = {
            "num_strings": sample.num_strings - 1,
            "strings_entropy": _blend_removed_string(
                sample.strings_entropy, sample.num_strings, h_s
            ),
        }
    elif kind is MutationKind.ADD_SECTION:
        changes = {
            "num_sections": sample.num_sections + 1,
            "file_size": sample.file_size + SECTION_SIZE_DELTA,
        }
    elif kind is MutationKind.ADD_BYTES:
        changes = {"file_size": sample.file_size + BYTES_SIZE_DELTA}
    elif kind is MutationKind.ADD_CODE_BYTES:
        changes = {
            "size_of_code": sample.size_of_code + CODE_BYTES_DELTA,
            "file_size": sample.file_size + CODE_BYTES_DELTA,
        }
    elif kind is MutationKind.IMPORT_FUNCTION:
        absent = [c for c in ctx.candidate_functions if c not in sample.imported_functions]
        pick = absent[int(_uniform(seed, kind, occurrence) * len(absent)) % len(absent)]
        library = pick.split(":", 1)[0]
        changes = {
            "imported_functions": sample.imported_functions | {pick},
            "imported_libraries": sample.imported_libraries | {library},
            "num_imports": (sample.num_imports or 0) + 1,
        }
    elif kind is MutationKind.CHANGE_TIMESTAMP:
        moved = _step_toward(
            float(sample.timestamp), float(ctx.benign_timestamp_target), float(ctx.timestamp_step)
        )
        changes = {"timestamp": int(moved)}
    elif kind is MutationKind.REMOVE_DEBUG:
        changes = {"has_debug": False}
    elif kind is MutationKind.CHANGE_SIGNATURE:
        changes = {"has_signature": True}
    else:  # pragma: no cover - enum is exhaustive
        raise MutationError(f"unknown mutation kind {kind}")

    return replace(sample, **changes), budget.incremented(kind)


def apply_path(
    sample: SampleRecord,
    path: Sequence[MutationKind | int],
    ctx: MutationContext,
    seed: int | None = None,
) -> SampleRecord:
    """Left fold of apply over a path. Deterministic given the seed (which
    defaults to the per-sample seed derived from the context).
    """
    record, _ = apply_path_with_budget(sample, path, ctx, seed)
    return record


def apply_path_with_budget(
    sample: SampleRecord,
    path: Sequence[MutationKind | int],
    ctx: MutationContext,
    seed: int | None = None,
) -> tuple[SampleRecord, MutationBudget]:
    if seed is None:
        seed = path_seed(ctx, sample.sample_id)
    record = sample
    budget = MutationBudget()
    for i, raw in enumerate(path):
        kind = MutationKind(raw)
        try:
            record, budget = apply(record, kind, budget, ctx, seed)
        except MutationError as exc:
            raise MutationError(f"at path index {i}: {exc}") from None
    return record, budget


@dataclass(frozen=True)
class MutationPath:
    """One search result: the mutation sequence found for one sample."""

    sample_id: str
    path: tuple[MutationKind, ...]
    found_by: str  # "mcts" | "random"
    surrogate_benign: bool
    iterations_used: int

    def to_json_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "path": [int(k) for k in self.path],
            "found_by": self.found_by,
            "surrogate_benign": self.surrogate_benign,
            "iterations_used": self.iterations_used,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MutationPath":
        return cls(
            sample_id=str(obj["sample_id"]),
            path=tuple(MutationKind(int(k)) for k in obj["path"]),
            found_by=str(obj["found_by"]),
            surrogate_benign=bool(obj["surrogate_benign"]),
            iterations_used=int(obj["iterations_used"]),
        )


def write_paths_jsonl(paths: Iterable[MutationPath], path: str | Path) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="\n") as fh:
        for p in paths:
            fh.write(json.dumps(p.to_json_dict(), sort_keys=True) + "\n")


def read_paths_jsonl(path: str | Path) -> list[MutationPath]:
    results = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                results.append(MutationPath.from_json_dict(json.loads(line)))
    return results


def build_context(
    samples: Sequence[SampleRecord],
    n_candidates: int = 14,
    entropy_step: float = 0.05,
    timestamp_step: int = 1000,
    rng_seed: int = 0,
    caps: BudgetCaps | None = None,
) -> MutationContext:
    """Derive targets and import candidates from a labeled corpus.

    Candidates are the functions most frequent among benign samples that
    never occur in a malicious one (count descending, then name ascending).
    """
    benign = [s for s in samples if s.label is Label.BENIGN]
    malicious = [s for s in samples if s.label is Label.MALICIOUS]
    if not benign:
        raise ValueError("cannot build mutation context: no benign samples")
    entropies = [s.strings_entropy for s in benign if s.strings_entropy is not None]
    timestamps = [s.timestamp for s in benign if s.timestamp is not None]
    entropy_target = sum(entropies) / len(entropies) if entropies else 0.0
    timestamp_target = int(sum(timestamps) / len(timestamps)) if timestamps else 0

    seen_in_malware: set[str] = set()
    for s in malicious:
        seen_in_malware.update(s.imported_functions)
    counts: dict[str, int] = {}
    for s in benign:
        for f in s.imported_functions:
            if f not in seen_in_malware:
                counts[f] = counts.get(f, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    candidates = tuple(name for name, _ in ranked[:n_candidates])

    return MutationContext(
        benign_entropy_target=float(entropy_target),
        benign_timestamp_target=timestamp_target,
        candidate_functions=candidates,
        entropy_step=entropy_step,
        timestamp_step=timestamp_step,
        rng_seed=rng_seed,
        caps=caps or BudgetCaps(),
    )


CONTEXT_FORMAT = "mutatree-context"


def context_to_json(ctx: MutationContext) -> dict:
    return {
        "format": CONTEXT_FORMAT,
        "version": 1,
        "benign_entropy_target": ctx.benign_entropy_target,
        "benign_timestamp_target": ctx.benign_timestamp_target,
        "candidate_functions": list(ctx.candidate_functions),
        "entropy_step": ctx.entropy_step,
        "timestamp_step": ctx.timestamp_step,
        "rng_seed": ctx.rng_seed,
        "caps": {
            "strings_added": ctx.caps.strings_added,
            "strings_added_with_size": ctx.caps.strings_added_with_size,
            "entropy_changes": ctx.caps.entropy_changes,
            "entropy_changes_with_size": ctx.caps.entropy_changes_with_size,
            "strings_removed": ctx.caps.strings_removed,
            "max_per_kind": ctx.caps.max_per_kind,
        },
        "enabled_kinds": [int(k) for k in ctx.enabled_kinds],
    }


def context_from_json(obj: dict) -> MutationContext:
    if obj.get("format") != CONTEXT_FORMAT:
        raise ValueError(f"not a mutation-context document: {obj.get('format')!r}")
    return MutationContext(
        benign_entropy_target=float(obj["benign_entropy_target"]),
        benign_timestamp_target=int(obj["benign_timestamp_target"]),
        candidate_functions=tuple(obj["candidate_functions"]),
        entropy_step=float(obj["entropy_step"]),
        timestamp_step=int(obj["timestamp_step"]),
        rng_seed=int(obj["rng_seed"]),
        caps=BudgetCaps(**obj["caps"]),
        enabled_kinds=tuple(MutationKind(k) for k in obj["enabled_kinds"]),
    )


def save_context(ctx: MutationContext, path: str | Path) -> None:
    Path(path).write_text(json.dumps(context_to_json(ctx), indent=2) + "\n")


def load_context(path: str | Path) -> MutationContext:
    return context_from_json(json.loads(Path(path).read_text()))
