import json

import pytest

from mutatree.records import IngestError, Label, SampleRecord, ingest_jsonl, write_jsonl

from conftest import fresh_sample


def test_round_trip_preserves_all_fields(tmp_path):
    records = [
        fresh_sample(sample_id=f"s-{i}", num_strings=i * 10, has_signature=bool(i % 2))
        for i in range(100)
    ]
    path = tmp_path / "corpus.jsonl"
    write_jsonl(records, path)
    again = ingest_jsonl(path)
    assert again == records


def test_empty_file_gives_empty_list(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert ingest_jsonl(path) == []


def test_missing_field_stays_missing(tmp_path):
    obj = fresh_sample().to_json_dict()
    del obj["strings_entropy"]
    path = tmp_path / "one.jsonl"
    path.write_text(json.dumps(obj) + "\n")
    (record,) = ingest_jsonl(path)
    assert record.strings_entropy is None
    assert record.num_strings is not None


def test_absent_label_is_unknown():
    record = SampleRecord.from_json_dict({"sample_id": "x"})
    assert record.label is Label.UNKNOWN
    assert "label" not in record.to_json_dict()


def test_unknown_keys_ignored():
    obj = fresh_sample().to_json_dict()
    obj["histogram"] = [1, 2, 3]
    record = SampleRecord.from_json_dict(obj)
    assert record.sample_id == "mal-000000"


def test_malformed_lines_skipped_and_strict_raises(tmp_path, caplog):
    good = json.dumps(fresh_sample().to_json_dict())
    path = tmp_path / "mixed.jsonl"
    path.write_text(good + "\n{not json\n" + good.replace("mal-000000", "m2") + "\n")
    records = ingest_jsonl(path)
    assert [r.sample_id for r in records] == ["mal-000000", "m2"]
    with pytest.raises(IngestError, match="line.*2|2 "):
        ingest_jsonl(path, strict=True)


def test_validation_rejects_bad_values():
    with pytest.raises(ValueError, match="strings_entropy"):
        fresh_sample(strings_entropy=9.0)
    with pytest.raises(ValueError, match="file_size"):
        fresh_sample(file_size=-1)
    with pytest.raises(ValueError, match="label"):
        SampleRecord.from_json_dict({"sample_id": "x", "label": "weird"})


def test_count_and_list_carried_independently():
    record = fresh_sample(num_imports=40, imported_functions=frozenset({"a.dll:F"}))
    assert record.num_imports == 40
    assert len(record.imported_functions) == 1
