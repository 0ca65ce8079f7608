"""Truncated-space stub scenarios for search-vs-oracle comparisons.

Each scenario restricts the mutation space to at most 6 kinds with caps of
at most 2 and defines a benign predicate over draw-independent fields, so
the breadth-first oracle's multiset dedup is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from mutatree.mutations import BudgetCaps, MutationContext, MutationKind
from mutatree.records import SampleRecord

from conftest import fresh_sample, small_context

K = MutationKind

# Every enabled kind is capped at two applications so the whole mutation
# space is a small finite set of multisets.
SMALL_CAPS = BudgetCaps(
    strings_added=2,
    strings_added_with_size=2,
    entropy_changes=2,
    entropy_changes_with_size=2,
    strings_removed=2,
    max_per_kind=2,
)


@dataclass
class Scenario:
    name: str
    sample: SampleRecord
    ctx: MutationContext
    is_benign: Callable[[SampleRecord], bool]


def _ctx(kinds, **overrides) -> MutationContext:
    return small_context(enabled_kinds=tuple(kinds), caps=SMALL_CAPS, **overrides)


def build_scenarios() -> list[Scenario]:
    base = fresh_sample()
    fs, sc, ns, ni, sec = (
        base.file_size,
        base.size_of_code,
        base.num_strings,
        base.num_imports,
        base.num_sections,
    )
    ts_target = base.timestamp + 5000

    scenarios = [
        Scenario(
            "signature-only",
            base,
            _ctx([K.CHANGE_SIGNATURE]),
            lambda r: bool(r.has_signature),
        ),
        Scenario(
            "signature-and-debug",
            base,
            _ctx([K.REMOVE_DEBUG, K.CHANGE_SIGNATURE]),
            lambda r: bool(r.has_signature) and not r.has_debug,
        ),
        Scenario(
            "size-542",
            base,
            _ctx([K.ADD_STRING, K.ADD_SECTION, K.ADD_BYTES, K.CHANGE_SIGNATURE]),
            lambda r: r.file_size >= fs + 542,
        ),
        Scenario(
            "code-and-size",
            base,
            _ctx([K.ADD_BYTES, K.ADD_CODE_BYTES]),
            lambda r: r.size_of_code >= sc + 64 and r.file_size >= fs + 192,
        ),
        Scenario(
            "two-imports",
            base,
            _ctx(
                [K.IMPORT_FUNCTION, K.CHANGE_SIGNATURE],
                candidate_functions=("a.dll:F0", "b.dll:F1"),
            ),
            lambda r: r.num_imports >= ni + 2,
        ),
        Scenario(
            "timestamp-two-steps",
            base,
            _ctx(
                [K.CHANGE_TIMESTAMP, K.ADD_BYTES],
                benign_timestamp_target=ts_target,
            ),
            lambda r: abs(r.timestamp - ts_target) <= 3200,
        ),
        Scenario(
            "two-sections",
            base,
            _ctx([K.ADD_SECTION]),
            lambda r: r.num_sections >= sec + 2,
        ),
        Scenario(
            "strings-then-signature",
            base,
            _ctx([K.ADD_STRING, K.ADD_STRING_WITH_SIZE, K.CHANGE_SIGNATURE]),
            lambda r: r.num_strings >= ns + 2 and bool(r.has_signature),
        ),
        Scenario(
            "import-plus-signature",
            base,
            _ctx(
                [
                    K.ADD_STRING,
                    K.ADD_SECTION,
                    K.ADD_BYTES,
                    K.IMPORT_FUNCTION,
                    K.REMOVE_DEBUG,
                    K.CHANGE_SIGNATURE,
                ],
                candidate_functions=("a.dll:F0", "b.dll:F1"),
            ),
            lambda r: bool(r.has_signature) and r.num_imports >= ni + 1,
        ),
        Scenario(
            "two-sections-of-bytes",
            base,
            _ctx([K.ADD_SECTION, K.ADD_BYTES]),
            lambda r: r.file_size >= fs + 1024,
        ),
        Scenario(
            "sections-plus-bytes-three",
            base,
            _ctx(
                [
                    K.ADD_STRING,
                    K.ADD_SECTION,
                    K.ADD_BYTES,
                    K.IMPORT_FUNCTION,
                    K.CHANGE_SIGNATURE,
                    K.REMOVE_DEBUG,
                ],
                candidate_functions=("a.dll:F0",),
            ),
            lambda r: r.num_sections >= sec + 2 and r.file_size >= fs + 1100,
        ),
        Scenario(
            "mixed-three",
            base,
            _ctx([K.ADD_SECTION, K.ADD_BYTES, K.CHANGE_SIGNATURE]),
            lambda r: bool(r.has_signature) and r.file_size >= fs + 640,
        ),
        Scenario(
            "debug-only",
            base,
            _ctx([K.REMOVE_DEBUG, K.ADD_BYTES]),
            lambda r: not r.has_debug,
        ),
        Scenario(
            "strings-two",
            base,
            _ctx([K.ADD_STRING, K.REMOVE_STRING, K.CHANGE_SIGNATURE]),
            lambda r: r.num_strings >= ns + 2,
        ),
        Scenario(
            "remove-strings-two",
            base,
            _ctx([K.ADD_STRING, K.REMOVE_STRING]),
            lambda r: r.num_strings <= ns - 2,
        ),
        Scenario(
            "entropy-two-steps",
            base,
            _ctx(
                [K.CHANGE_STRING_ENTROPY, K.CHANGE_STRING_ENTROPY_WITH_SIZE, K.ADD_BYTES],
                benign_entropy_target=base.strings_entropy + 1.0,
            ),
            lambda r: r.strings_entropy >= base.strings_entropy + 0.19,
        ),
        Scenario(
            "code-bytes-two",
            base,
            _ctx([K.ADD_CODE_BYTES, K.CHANGE_SIGNATURE, K.REMOVE_DEBUG]),
            lambda r: r.size_of_code >= sc + 128,
        ),
        Scenario(
            "one-import",
            base,
            _ctx(
                [K.IMPORT_FUNCTION, K.ADD_BYTES, K.ADD_SECTION],
                candidate_functions=("a.dll:F0", "b.dll:F1"),
            ),
            lambda r: len(r.imported_functions) >= len(base.imported_functions) + 1,
        ),
        Scenario(
            "signature-and-bytes",
            base,
            _ctx([K.ADD_BYTES, K.CHANGE_SIGNATURE]),
            lambda r: bool(r.has_signature) and r.file_size >= fs + 128,
        ),
        Scenario(
            "three-way-combo",
            base,
            _ctx(
                [K.ADD_SECTION, K.IMPORT_FUNCTION, K.CHANGE_SIGNATURE],
                candidate_functions=("a.dll:F0",),
            ),
            lambda r: bool(r.has_signature)
            and r.num_sections >= sec + 1
            and r.num_imports >= ni + 1,
        ),
    ]
    assert len(scenarios) == 20
    return scenarios
