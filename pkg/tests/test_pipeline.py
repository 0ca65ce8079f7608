import random

import numpy as np

from mutatree.dtree import train_decision_tree
from mutatree.mlp import MlpConfig, train_mlp
from mutatree.pipeline import CountingClassifier, RecordClassifier, record_feature_value
from mutatree.preprocess import fit_preprocessor, transform, transform_many
from mutatree.records import Label
from mutatree.synthetic import generate_synthetic

from conftest import fresh_sample


def _fitted_models():
    records = generate_synthetic(120, seed=31)
    pre = fit_preprocessor(records)
    X = transform_many(pre, records)
    y = np.array([1 if r.label is Label.MALICIOUS else 0 for r in records])
    tree = train_decision_tree(X, y, max_depth=10)
    mlp = train_mlp(X, y, MlpConfig(layer_widths=(8,), epochs=2, seed=1))
    return records, pre, tree, mlp


def test_record_feature_value_matches_full_vector():
    records, pre, *_ = _fitted_models()
    rng = random.Random(3)
    for record in rng.sample(records, 30):
        x = transform(pre, record)
        for index in rng.sample(range(pre.width), 200):
            assert record_feature_value(pre, record, index) == x[index]


def test_tree_fast_path_agrees_with_transform_route():
    """The record-level tree verdict must equal predicting on the fused
    vector; the search relies on this shortcut being exact.
    """
    records, pre, tree, _ = _fitted_models()
    clf = RecordClassifier(pre, tree)
    for record in records:
        via_record = clf.predict_proba_record(record)
        via_vector = tree.predict_proba_one(transform(pre, record))
        assert via_record == via_vector


def test_mlp_route_uses_full_transform():
    records, pre, _, mlp = _fitted_models()
    clf = RecordClassifier(pre, mlp)
    for record in records[:20]:
        assert clf.predict_proba_record(record) == mlp.predict_proba_one(transform(pre, record))


def test_threshold_and_is_benign():
    records, pre, tree, _ = _fitted_models()
    clf = RecordClassifier(pre, tree, threshold=0.5)
    record = records[0]
    assert clf.is_benign(record) == (clf.predict_proba_record(record) < 0.5)


def test_counting_wrapper():
    clf = CountingClassifier(RecordClassifier(*_fitted_models()[1:3]))
    record = fresh_sample()
    for _ in range(7):
        clf.is_benign(record)
    assert clf.queries == 7
