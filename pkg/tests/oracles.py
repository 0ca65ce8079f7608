"""Independent reference computations the tests check the library against.

These deliberately use the dumbest correct method available (exhaustive
enumeration, pairwise counting, finite differences) and never share logic
with the code paths they verify.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from mutatree.mlp import MlpModel, bce_loss
from mutatree.mutations import (
    MutationBudget,
    MutationContext,
    allowed_mutations,
    apply,
    path_seed,
)
from mutatree.records import SampleRecord


def bfs_min_path_length(
    sample: SampleRecord,
    is_benign,
    ctx: MutationContext,
    max_depth: int,
) -> int | None:
    """Exhaustive breadth-first minimum over legal mutation sequences.

    States are deduplicated by mutation multiset, which is sound for the
    predicates used in tests (they read only draw-independent integer or
    boolean fields, so any ordering of a multiset reaches the same verdict).
    """
    seed = path_seed(ctx, sample.sample_id)
    if is_benign(sample):
        return 0
    frontier: list[tuple[SampleRecord, MutationBudget, tuple[int, ...]]] = [
        (sample, MutationBudget(), ())
    ]
    seen = {()}
    for depth in range(1, max_depth + 1):
        next_frontier = []
        for record, budget, key in frontier:
            for kind in allowed_mutations(record, budget, ctx):
                new_key = tuple(sorted((*key, int(kind))))
                if new_key in seen:
                    continue
                seen.add(new_key)
                new_record, new_budget = apply(record, kind, budget, ctx, seed)
                if is_benign(new_record):
                    return depth
                next_frontier.append((new_record, new_budget, new_key))
        frontier = next_frontier
        if not frontier:
            return None
    return None


def pairwise_auc(scores, y) -> float:
    """AUC by direct positive/negative pair comparison, ties worth 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y)
    pos = scores[y == 1]
    neg = scores[y == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def finite_difference_gradients(
    model: MlpModel, X: np.ndarray, y: np.ndarray, step: float = 1e-5
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Central-difference gradients of the mean BCE loss, parameter by
    parameter.
    """

    def loss() -> float:
        return bce_loss(model.forward_logits(X), y)

    grads_w, grads_b = [], []
    for params, grads in ((model.weights, grads_w), (model.biases, grads_b)):
        for arr in params:
            grad = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                original = arr[idx]
                arr[idx] = original + step
                up = loss()
                arr[idx] = original - step
                down = loss()
                arr[idx] = original
                grad[idx] = (up - down) / (2.0 * step)
            grads.append(grad)
    return grads_w, grads_b


def random_search_success_probability(
    sample: SampleRecord,
    is_benign,
    ctx: MutationContext,
    max_mutations: int,
) -> float:
    """Exact probability that one attempt of uniformly drawn legal mutations
    reaches a benign verdict within max_mutations draws.

    Memoized on (budget counts, debug flag, steps left): for the predicates
    used in tests, the set of legal mutations depends only on those, so the
    recursion is exact.
    """
    seed = path_seed(ctx, sample.sample_id)

    @lru_cache(maxsize=None)
    def recurse(state_key, steps_left) -> float:
        record, budget = _states[state_key]
        if steps_left == 0:
            return 0.0
        options = allowed_mutations(record, budget, ctx)
        if not options:
            return 0.0
        total = 0.0
        for kind in options:
            new_record, new_budget = apply(record, kind, budget, ctx, seed)
            if is_benign(new_record):
                total += 1.0
            else:
                new_key = (new_budget.counts, new_record.has_debug)
                _states.setdefault(new_key, (new_record, new_budget))
                total += recurse(new_key, steps_left - 1)
        return total / len(options)

    _states: dict = {}
    root_key = (MutationBudget().counts, sample.has_debug)
    _states[root_key] = (sample, MutationBudget())
    return recurse(root_key, max_mutations)
