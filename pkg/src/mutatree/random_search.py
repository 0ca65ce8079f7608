"""Random-search baseline: repeated attempts of up to five legal mutations.

Each attempt restarts from the original sample and mutates cumulatively,
checking the surrogate after every application. The shortest successful
path across attempts is returned. Attempts stop at the configured count or
once the surrogate-query budget is spent, whichever comes first, so the
baseline can be held to the same query budget as the tree search.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .mcts import SearchOutcome
from .mutations import (
    MutationBudget,
    MutationContext,
    MutationKind,
    allowed_mutations,
    apply,
    path_seed,
)
from .pipeline import CountingClassifier
from .preprocess import fnv1a64
from .records import SampleRecord


@dataclass(frozen=True)
class RandomSearchConfig:
    max_mutations: int = 5
    # With neither attempts nor query_budget set, attempts defaults to the
    # tree search's default simulation count.
    attempts: int | None = None
    query_budget: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_mutations < 1:
            raise ValueError("max_mutations must be >= 1")
        if self.attempts is not None and self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.query_budget is not None and self.query_budget < 1:
            raise ValueError("query_budget must be >= 1")


DEFAULT_ATTEMPTS = 500


def random_search(
    sample: SampleRecord,
    surrogate,
    ctx: MutationContext,
    config: RandomSearchConfig = RandomSearchConfig(),
) -> SearchOutcome:
    counting = CountingClassifier(surrogate)
    if counting.is_benign(sample):
        return SearchOutcome(
            found=True, path=[], iterations_used=0, queries_used=counting.queries
        )

    attempts = config.attempts
    if attempts is None and config.query_budget is None:
        attempts = DEFAULT_ATTEMPTS
    sample_seed = path_seed(ctx, sample.sample_id)
    rng = random.Random(fnv1a64(f"{config.seed}:{sample.sample_id}:random-search"))

    best: list[MutationKind] | None = None
    attempt = 0
    while attempts is None or attempt < attempts:
        if config.query_budget is not None and counting.queries >= config.query_budget:
            break
        attempt += 1
        record = sample
        budget = MutationBudget()
        trail: list[MutationKind] = []
        for _ in range(config.max_mutations):
            options = allowed_mutations(record, budget, ctx)
            if not options:
                break
            kind = options[rng.randrange(len(options))]
            record, budget = apply(record, kind, budget, ctx, sample_seed)
            trail.append(kind)
            if counting.is_benign(record):
                if best is None or len(trail) < len(best):
                    best = list(trail)
                break
            if config.query_budget is not None and counting.queries >= config.query_budget:
                break

    return SearchOutcome(
        found=best is not None,
        path=best,
        iterations_used=attempt,
        queries_used=counting.queries,
    )
