import numpy as np
import pytest

from mutatree.metrics import confusion_counts, evaluate_scores, roc_auc

from oracles import pairwise_auc


def test_perfect_separation_gives_auc_one():
    scores = np.array([0.9, 0.8, 0.2, 0.1])
    y = np.array([1, 1, 0, 0])
    assert roc_auc(scores, y) == 1.0


def test_three_of_four_pairs_ordered():
    scores = np.array([0.9, 0.4, 0.6, 0.1])
    y = np.array([1, 1, 0, 0])
    assert roc_auc(scores, y) == 0.75


def test_all_positive_predictions():
    scores = np.array([0.9, 0.8, 0.7, 0.6])
    y = np.array([1, 0, 1, 0])
    result = evaluate_scores(scores, y, threshold=0.5)
    assert result["recall"] == 1.0
    assert result["precision"] == 0.5  # base rate


def test_single_class_raises():
    with pytest.raises(ValueError, match="single class"):
        roc_auc(np.array([0.1, 0.9]), np.array([1, 1]))


def test_auc_matches_pairwise_oracle_on_random_score_sets():
    rng = np.random.default_rng(42)
    for trial in range(50):
        n = rng.integers(4, 40)
        scores = rng.choice([0.1, 0.25, 0.5, 0.75, 0.9], size=n)  # forces ties
        y = rng.integers(0, 2, size=n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        assert roc_auc(scores, y) == pytest.approx(pairwise_auc(scores, y), abs=1e-12)


def test_auc_invariant_under_monotone_transform():
    rng = np.random.default_rng(7)
    scores = rng.uniform(size=30)
    y = rng.integers(0, 2, size=30)
    y[0], y[1] = 0, 1
    base = roc_auc(scores, y)
    for transform in (lambda s: 2 * s + 3, np.exp, lambda s: s**3):
        assert roc_auc(transform(scores), y) == pytest.approx(base, abs=1e-12)


def test_confusion_counts():
    scores = np.array([0.9, 0.4, 0.6, 0.1])
    y = np.array([1, 1, 0, 0])
    cm = confusion_counts(scores, y)
    assert cm == {"tp": 1, "fp": 1, "tn": 1, "fn": 1}


def test_f1_hand_computed():
    scores = np.array([0.9, 0.4, 0.6, 0.1])
    y = np.array([1, 1, 0, 0])
    result = evaluate_scores(scores, y)
    precision, recall = 0.5, 0.5
    assert result["f1"] == pytest.approx(2 * precision * recall / (precision + recall))


def test_empty_set_errors():
    with pytest.raises(ValueError, match="empty"):
        evaluate_scores(np.array([]), np.array([]))
