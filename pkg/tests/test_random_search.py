import math

import pytest

from mutatree.mutations import MutationKind, apply_path
from mutatree.random_search import RandomSearchConfig, random_search

from conftest import PredicateClassifier, fresh_sample, small_context
from oracles import random_search_success_probability

K = MutationKind


def test_config_validation():
    with pytest.raises(ValueError, match="max_mutations"):
        RandomSearchConfig(max_mutations=0)
    with pytest.raises(ValueError, match="attempts"):
        RandomSearchConfig(attempts=0)
    with pytest.raises(ValueError, match="query_budget"):
        RandomSearchConfig(query_budget=0)


def test_never_benign_fails(ctx, sample):
    surrogate = PredicateClassifier(lambda r: False)
    outcome = random_search(sample, surrogate, ctx, RandomSearchConfig(attempts=30, seed=1))
    assert not outcome.found
    assert outcome.path is None
    assert outcome.iterations_used == 30


def test_pre_benign_trivially_found(ctx, sample):
    surrogate = PredicateClassifier(lambda r: True)
    outcome = random_search(sample, surrogate, ctx, RandomSearchConfig(attempts=5, seed=1))
    assert outcome.found and outcome.path == []
    assert outcome.queries_used == 1


def test_paths_capped_at_max_mutations_and_legal(ctx, sample):
    surrogate = PredicateClassifier(lambda r: r.file_size >= sample.file_size + 512)
    for seed in range(40):
        outcome = random_search(
            sample, surrogate, ctx, RandomSearchConfig(attempts=50, seed=seed)
        )
        if outcome.found:
            assert 1 <= len(outcome.path) <= 5
            mutated = apply_path(sample, outcome.path, ctx)
            assert surrogate.is_benign(mutated)


def test_deterministic_under_seed(ctx, sample):
    surrogate = PredicateClassifier(lambda r: bool(r.has_signature))
    config = RandomSearchConfig(attempts=20, seed=7)
    o1 = random_search(sample, surrogate, ctx, config)
    o2 = random_search(sample, surrogate, ctx, config)
    assert o1.path == o2.path and o1.queries_used == o2.queries_used


def test_query_budget_respected(ctx, sample):
    surrogate = PredicateClassifier(lambda r: False)
    outcome = random_search(
        sample, surrogate, ctx, RandomSearchConfig(query_budget=37, seed=3)
    )
    assert outcome.queries_used <= 37 + 1  # the pre-check query plus budget


def test_success_rate_matches_enumerated_probability(ctx):
    """1000 single-attempt searches vs the exact per-attempt success
    probability computed by enumeration: agreement within 3 binomial sigma.
    """
    sample = fresh_sample(has_signature=False)
    surrogate = PredicateClassifier(lambda r: bool(r.has_signature))
    p = random_search_success_probability(sample, surrogate.is_benign, ctx, max_mutations=5)
    assert 0.0 < p < 1.0
    runs = 1000
    hits = 0
    for seed in range(runs):
        outcome = random_search(
            sample, surrogate, ctx, RandomSearchConfig(attempts=1, seed=seed)
        )
        hits += outcome.found
    sigma = math.sqrt(p * (1 - p) / runs)
    assert abs(hits / runs - p) < 3 * sigma


def test_shortest_successful_path_across_attempts(ctx):
    # benign iff signature set OR 3+ sections added: length-1 paths exist,
    # so with many attempts the shortest found must be 1
    sample = fresh_sample(has_signature=False)
    surrogate = PredicateClassifier(lambda r: bool(r.has_signature))
    outcome = random_search(sample, surrogate, ctx, RandomSearchConfig(attempts=200, seed=5))
    assert outcome.found
    assert len(outcome.path) == 1
    assert outcome.path == [K.CHANGE_SIGNATURE]
