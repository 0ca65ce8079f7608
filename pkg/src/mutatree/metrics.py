"""Classifier evaluation: rank-statistic ROC-AUC, F1, confusion counts."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def roc_auc(scores: np.ndarray, y: np.ndarray) -> float:
    """Mann-Whitney AUC with ties averaged. Invariant under any strictly
    monotone transform of the scores.
    """
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: labels contain a single class")
    ranks = rankdata(scores)
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def confusion_counts(scores: np.ndarray, y: np.ndarray, threshold: float = 0.5) -> dict[str, int]:
    pred = np.asarray(scores) >= threshold
    y = np.asarray(y).astype(bool)
    return {
        "tp": int((pred & y).sum()),
        "fp": int((pred & ~y).sum()),
        "tn": int((~pred & ~y).sum()),
        "fn": int((~pred & y).sum()),
    }


def evaluate_scores(scores: np.ndarray, y: np.ndarray, threshold: float = 0.5) -> dict:
    if len(np.asarray(y)) == 0:
        raise ValueError("empty evaluation set")
    cm = confusion_counts(scores, y, threshold)
    precision = cm["tp"] / (cm["tp"] + cm["fp"]) if cm["tp"] + cm["fp"] else 0.0
    recall = cm["tp"] / (cm["tp"] + cm["fn"]) if cm["tp"] + cm["fn"] else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "roc_auc": roc_auc(scores, y),
        "f1": f1,
        "precision": precision,
        "recall": recall,
        "confusion": cm,
    }


def evaluate(model, X: np.ndarray, y: np.ndarray, threshold: float = 0.5) -> dict:
    """Evaluate any model exposing predict_proba over feature vectors."""
    return evaluate_scores(model.predict_proba(np.atleast_2d(X)), y, threshold)
