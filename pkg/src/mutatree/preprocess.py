"""Fitted preprocessing pipeline: impute, standardize, one-hot, feature-hash.

The fused vector layout is fixed for a fitted model:
    [ 8 standardized numerics | 2 boolean flags | one-hot entry section |
      1024 hashed library buckets | 8192 hashed function buckets ]
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .records import BOOL_FIELDS, NUMERIC_FIELDS, SampleRecord

LIBRARY_HASH_DIM = 2**10
FUNCTION_HASH_DIM = 2**13

_FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes | str) -> int:
    """64-bit FNV-1a. Fixed and documented so vectors are bit-reproducible."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV64_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV64_PRIME) & _MASK64
    return h


@lru_cache(maxsize=1 << 16)
def hash_bucket(name: str, dim: int) -> int:
    return fnv1a64(name) % dim


@dataclass(frozen=True)
class PreprocessorModel:
    """Imputation, standardization and encoding parameters fitted on a corpus."""

    numeric_medians: tuple[float, ...]
    numeric_means: tuple[float, ...]
    numeric_scales: tuple[float, ...]
    entry_vocabulary: tuple[str, ...]
    entry_most_frequent: str
    library_hash_dim: int = LIBRARY_HASH_DIM
    function_hash_dim: int = FUNCTION_HASH_DIM

    def __post_init__(self) -> None:
        if len(self.numeric_medians) != len(NUMERIC_FIELDS):
            raise ValueError("one median per numeric feature required")
        if any(s <= 0 for s in self.numeric_scales):
            raise ValueError("numeric scales must be strictly positive")
        if len(set(self.entry_vocabulary)) != len(self.entry_vocabulary):
            raise ValueError("entry vocabulary has duplicates")
        object.__setattr__(
            self, "_entry_index", {v: i for i, v in enumerate(self.entry_vocabulary)}
        )

    @property
    def width(self) -> int:
        return (
            len(NUMERIC_FIELDS)
            + len(BOOL_FIELDS)
            + len(self.entry_vocabulary)
            + self.library_hash_dim
            + self.function_hash_dim
        )

    def entry_index(self, entry: str) -> int | None:
        return self._entry_index.get(entry)  # type: ignore[attr-defined]


def fit_preprocessor(samples: Sequence[SampleRecord]) -> PreprocessorModel:
    """Fit imputation/standardization parameters and the entry vocabulary.

    Medians, means and scales are computed over non-missing values only;
    the scale is the population standard deviation, with zero-variance
    (or all-missing) features falling back to scale 1.
    """
    if not samples:
        raise ValueError("no training samples")
    medians, means, scales = [], [], []
    for name in NUMERIC_FIELDS:
        values = np.array(
            [getattr(s, name) for s in samples if getattr(s, name) is not None],
            dtype=np.float64,
        )
        if values.size == 0:
            medians.append(0.0)
            means.append(0.0)
            scales.append(1.0)
            continue
        medians.append(float(np.median(values)))
        means.append(float(values.mean()))
        std = float(values.std())
        scales.append(std if std > 0.0 else 1.0)
    entries = [s.entry_section for s in samples if s.entry_section is not None]
    vocabulary = tuple(sorted(set(entries)))
    if entries:
        counts = Counter(entries)
        top = max(counts.values())
        most_frequent = min(e for e, c in counts.items() if c == top)
    else:
        most_frequent = ""
    return PreprocessorModel(
        numeric_medians=tuple(medians),
        numeric_means=tuple(means),
        numeric_scales=tuple(scales),
        entry_vocabulary=vocabulary,
        entry_most_frequent=most_frequent,
    )


def transform(model: PreprocessorModel, sample: SampleRecord) -> np.ndarray:
    """Fused feature vector for one record. Total: missing numerics impute to
    the median, missing entry to the most frequent, missing booleans to False,
    and unknown entry sections map to an all-zero one-hot block.
    """
    x = np.zeros(model.width, dtype=np.float64)
    for i, name in enumerate(NUMERIC_FIELDS):
        value = getattr(sample, name)
        if value is None:
            value = model.numeric_medians[i]
        x[i] = (value - model.numeric_means[i]) / model.numeric_scales[i]
    base = len(NUMERIC_FIELDS)
    for j, name in enumerate(BOOL_FIELDS):
        x[base + j] = 1.0 if getattr(sample, name) else 0.0
    base += len(BOOL_FIELDS)
    entry = sample.entry_section
    if entry is None:
        entry = model.entry_most_frequent
    idx = model.entry_index(entry)
    if idx is not None:
        x[base + idx] = 1.0
    base += len(model.entry_vocabulary)
    for lib in sample.imported_libraries:
        x[base + hash_bucket(lib, model.library_hash_dim)] += 1.0
    base += model.library_hash_dim
    for func in sample.imported_functions:
        x[base + hash_bucket(func, model.function_hash_dim)] += 1.0
    return x


def transform_many(model: PreprocessorModel, samples: Sequence[SampleRecord]) -> np.ndarray:
    X = np.zeros((len(samples), model.width), dtype=np.float64)
    for i, sample in enumerate(samples):
        X[i] = transform(model, sample)
    return X


PREPROCESSOR_FORMAT = "mutatree-preprocessor"


def preprocessor_to_json(model: PreprocessorModel) -> dict:
    return {
        "format": PREPROCESSOR_FORMAT,
        "version": 1,
        "numeric_fields": list(NUMERIC_FIELDS),
        "numeric_medians": list(model.numeric_medians),
        "numeric_means": list(model.numeric_means),
        "numeric_scales": list(model.numeric_scales),
        "entry_vocabulary": list(model.entry_vocabulary),
        "entry_most_frequent": model.entry_most_frequent,
        "library_hash_dim": model.library_hash_dim,
        "function_hash_dim": model.function_hash_dim,
    }


def preprocessor_from_json(obj: dict) -> PreprocessorModel:
    if obj.get("format") != PREPROCESSOR_FORMAT:
        raise ValueError(f"not a preprocessor document: {obj.get('format')!r}")
    return PreprocessorModel(
        numeric_medians=tuple(obj["numeric_medians"]),
        numeric_means=tuple(obj["numeric_means"]),
        numeric_scales=tuple(obj["numeric_scales"]),
        entry_vocabulary=tuple(obj["entry_vocabulary"]),
        entry_most_frequent=obj["entry_most_frequent"],
        library_hash_dim=int(obj["library_hash_dim"]),
        function_hash_dim=int(obj["function_hash_dim"]),
    )


def save_preprocessor(model: PreprocessorModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(preprocessor_to_json(model), indent=2) + "\n")


def load_preprocessor(path: str | Path) -> PreprocessorModel:
    return preprocessor_from_json(json.loads(Path(path).read_text()))
