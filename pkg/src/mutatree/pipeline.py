"""Record-level classification: preprocessing plus model behind one call.

Search engines only need a benign/malicious verdict per candidate record.
For decision trees the verdict is computed straight from the record by
evaluating just the features the tree actually probes, which skips building
the ~9k-wide fused vector on every query; the result is identical to
transforming first (covered by tests).
"""

from __future__ import annotations

from dataclasses import dataclass

from .dtree import DecisionTreeModel
from .preprocess import PreprocessorModel, hash_bucket, transform
from .records import BOOL_FIELDS, NUMERIC_FIELDS, SampleRecord

_N_NUMERIC = len(NUMERIC_FIELDS)
_N_BOOL = len(BOOL_FIELDS)


def record_feature_value(
    model: PreprocessorModel,
    record: SampleRecord,
    index: int,
    lib_counts: dict[int, int] | None = None,
    func_counts: dict[int, int] | None = None,
) -> float:
    """Value the fused vector would hold at one index, without building it."""
    if index < _N_NUMERIC:
        value = getattr(record, NUMERIC_FIELDS[index])
        if value is None:
            value = model.numeric_medians[index]
        return (value - model.numeric_means[index]) / model.numeric_scales[index]
    index -= _N_NUMERIC
    if index < _N_BOOL:
        return 1.0 if getattr(record, BOOL_FIELDS[index]) else 0.0
    index -= _N_BOOL
    if index < len(model.entry_vocabulary):
        entry = record.entry_section
        if entry is None:
            entry = model.entry_most_frequent
        return 1.0 if model.entry_vocabulary[index] == entry else 0.0
    index -= len(model.entry_vocabulary)
    if index < model.library_hash_dim:
        if lib_counts is None:
            lib_counts = _bucket_counts(record.imported_libraries, model.library_hash_dim)
        return float(lib_counts.get(index, 0))
    index -= model.library_hash_dim
    if func_counts is None:
        func_counts = _bucket_counts(record.imported_functions, model.function_hash_dim)
    return float(func_counts.get(index, 0))


def _bucket_counts(names: frozenset[str], dim: int) -> dict[int, int]:
    counts: dict[int, int] = {}
    for name in names:
        b = hash_bucket(name, dim)
        counts[b] = counts.get(b, 0) + 1
    return counts


@dataclass
class RecordClassifier:
    """Preprocessor + trained model with a record-in, verdict-out interface."""

    preprocessor: PreprocessorModel
    model: object
    threshold: float = 0.5

    def predict_proba_record(self, record: SampleRecord) -> float:
        if isinstance(self.model, DecisionTreeModel):
            return self._tree_proba(record)
        return float(self.model.predict_proba_one(transform(self.preprocessor, record)))

    def _tree_proba(self, record: SampleRecord) -> float:
        pre = self.preprocessor
        lib_counts = _bucket_counts(record.imported_libraries, pre.library_hash_dim)
        func_counts = _bucket_counts(record.imported_functions, pre.function_hash_dim)
        nodes = self.model.nodes
        node = nodes[0]
        while node.feature_index >= 0:
            value = record_feature_value(pre, record, node.feature_index, lib_counts, func_counts)
            node = nodes[node.left] if value <= node.threshold else nodes[node.right]
        return node.leaf_probability

    def is_benign(self, record: SampleRecord) -> bool:
        return self.predict_proba_record(record) < self.threshold


class CountingClassifier:
    """Wraps anything with is_benign() and counts the queries made."""

    def __init__(self, inner):
        self.inner = inner
        self.queries = 0

    def is_benign(self, record: SampleRecord) -> bool:
        self.queries += 1
        return self.inner.is_benign(record)
