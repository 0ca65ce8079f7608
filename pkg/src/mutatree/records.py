"""Static-feature sample records and their JSONL serialization."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

log = logging.getLogger(__name__)

# Canonical order of the eight numeric features; also the layout of the
# numeric block in the fused feature vector.
NUMERIC_FIELDS = (
    "strings_entropy",
    "num_strings",
    "file_size",
    "num_exports",
    "num_imports",
    "timestamp",
    "size_of_code",
    "num_sections",
)

BOOL_FIELDS = ("has_debug", "has_signature")

JSONL_KEYS = (
    "sample_id",
    "label",
    *NUMERIC_FIELDS,
    *BOOL_FIELDS,
    "entry_section",
    "imported_libraries",
    "imported_functions",
)


class Label(enum.Enum):
    MALICIOUS = "malicious"
    BENIGN = "benign"
    UNKNOWN = "unknown"


class IngestError(ValueError):
    """Raised in strict mode when a JSONL file contains malformed lines."""


@dataclass(frozen=True)
class SampleRecord:
    """One binary's static features. Absent (None) fields mean "missing".

    Instances are immutable; mutation operators produce new records.
    num_imports and imported_functions are carried independently: the
    count is not required to match the list length.
    """

    sample_id: str
    label: Label = Label.UNKNOWN
    strings_entropy: float | None = None
    num_strings: int | None = None
    file_size: int | None = None
    num_exports: int | None = None
    num_imports: int | None = None
    timestamp: int | None = None
    size_of_code: int | None = None
    num_sections: int | None = None
    has_debug: bool | None = None
    has_signature: bool | None = None
    entry_section: str | None = None
    imported_libraries: frozenset[str] = field(default_factory=frozenset)
    imported_functions: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not self.sample_id:
            raise ValueError("sample_id must be non-empty")
        if self.strings_entropy is not None and not 0.0 <= self.strings_entropy <= 8.0:
            raise ValueError(f"strings_entropy out of [0, 8]: {self.strings_entropy}")
        for name in NUMERIC_FIELDS[1:]:
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")

    def to_json_dict(self) -> dict[str, Any]:
        """Plain-dict form for JSONL output. Missing fields are omitted."""
        out: dict[str, Any] = {"sample_id": self.sample_id}
        if self.label is not Label.UNKNOWN:
            out["label"] = self.label.value
        for name in (*NUMERIC_FIELDS, *BOOL_FIELDS, "entry_section"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        out["imported_libraries"] = sorted(self.imported_libraries)
        out["imported_functions"] = sorted(self.imported_functions)
        return out

    @classmethod
    def from_json_dict(cls, obj: dict[str, Any]) -> "SampleRecord":
        if not isinstance(obj, dict):
            raise ValueError("record must be a JSON object")
        kwargs: dict[str, Any] = {"sample_id": str(obj.get("sample_id", ""))}
        raw_label = obj.get("label")
        if raw_label is not None:
            try:
                kwargs["label"] = Label(raw_label)
            except ValueError:
                raise ValueError(f"unknown label {raw_label!r}") from None
        if "strings_entropy" in obj and obj["strings_entropy"] is not None:
            kwargs["strings_entropy"] = float(obj["strings_entropy"])
        for name in NUMERIC_FIELDS[1:]:
            if name in obj and obj[name] is not None:
                kwargs[name] = _as_int(name, obj[name])
        for name in BOOL_FIELDS:
            if name in obj and obj[name] is not None:
                kwargs[name] = _as_bool(name, obj[name])
        if obj.get("entry_section") is not None:
            kwargs["entry_section"] = str(obj["entry_section"])
        for name in ("imported_libraries", "imported_functions"):
            raw = obj.get(name)
            if raw is None:
                continue
            if not isinstance(raw, (list, tuple)):
                raise ValueError(f"{name} must be a list of strings")
            kwargs[name] = frozenset(str(v) for v in raw)
        return cls(**kwargs)


def _as_int(name: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ValueError(f"{name} must be an integer, got {value!r}")


def _as_bool(name: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if value in (0, 1):
        return bool(value)
    raise ValueError(f"{name} must be a boolean, got {value!r}")


def ingest_jsonl(path: str | Path, strict: bool = False) -> list[SampleRecord]:
    """Read one sample record per line. Malformed lines are logged with their
    line number and skipped; with strict=True any malformed line is an error.
    """
    path = Path(path)
    records: list[SampleRecord] = []
    bad: list[tuple[int, str]] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(SampleRecord.from_json_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                bad.append((lineno, str(exc)))
                log.warning("%s:%d: skipping malformed record: %s", path, lineno, exc)
    if bad and strict:
        lines = ", ".join(str(n) for n, _ in bad)
        raise IngestError(f"{path}: {len(bad)} malformed line(s) at {lines}")
    return records


def write_jsonl(records: Iterable[SampleRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")


def is_missing(record: SampleRecord, name: str) -> bool:
    return getattr(record, name) is None
