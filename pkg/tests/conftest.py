import pytest

from mutatree.mutations import BudgetCaps, MutationContext, MutationKind
from mutatree.records import Label, SampleRecord


class PredicateClassifier:
    """Stub surrogate: benign verdict decided by an arbitrary predicate."""

    def __init__(self, fn):
        self.fn = fn

    def is_benign(self, record):
        return self.fn(record)


def fresh_sample(**overrides) -> SampleRecord:
    """A fully populated malicious record on which all 12 mutations apply."""
    fields = dict(
        sample_id="mal-000000",
        label=Label.MALICIOUS,
        strings_entropy=5.5,
        num_strings=100,
        file_size=1000,
        num_exports=2,
        num_imports=40,
        timestamp=1_300_000_000,
        size_of_code=4096,
        num_sections=4,
        has_debug=True,
        has_signature=False,
        entry_section=".text",
        imported_libraries=frozenset({"kernel32.dll"}),
        imported_functions=frozenset({"kernel32.dll:ReadFile"}),
    )
    fields.update(overrides)
    return SampleRecord(**fields)


def small_context(**overrides) -> MutationContext:
    fields = dict(
        benign_entropy_target=5.6,
        benign_timestamp_target=1_340_000_000,
        candidate_functions=tuple(
            f"user32.dll:BenignFunc{i:02d}" for i in range(14)
        ),
        entropy_step=0.05,
        timestamp_step=1000,
        rng_seed=7,
        caps=BudgetCaps(),
        enabled_kinds=tuple(MutationKind),
    )
    fields.update(overrides)
    return MutationContext(**fields)


@pytest.fixture
def sample():
    return fresh_sample()


@pytest.fixture
def ctx():
    return small_context()
