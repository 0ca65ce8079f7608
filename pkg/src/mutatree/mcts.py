"""Single-player Monte Carlo tree search over the mutation space.

One search hunts for the shortest mutation path that flips the surrogate's
verdict on one sample to benign. Child selection uses UCB1, expansion is
gated to the second visit of a leaf, rollouts pick uniformly among legal
mutations, and node scores are negated path lengths so shorter successful
paths rank higher. Sorted-path deduplication keeps mutation multisets that
were already examined from being expanded again under a different order.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

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

NEG_INF = float("-inf")


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 500
    exploration_c: float = math.sqrt(2.0)
    simulation_depth: int = 12
    seed: int = 0
    # Stop once the best terminal path length has not improved for this many
    # iterations; None runs the full budget.
    patience: int | None = 100
    backprop_mode: str = "faithful"  # "faithful" | "preserving"
    keep_tree: bool = False
    record_trace: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.simulation_depth < 1:
            raise ValueError("simulation_depth must be >= 1")
        if self.exploration_c < 0:
            raise ValueError("exploration_c must be >= 0")
        if self.backprop_mode not in ("faithful", "preserving"):
            raise ValueError(f"unknown backprop_mode {self.backprop_mode!r}")


class SearchNode:
    __slots__ = (
        "mutation_path",
        "record",
        "budget",
        "score",
        "visits",
        "is_expanded",
        "is_terminal",
        "is_exhausted",
        "parent",
        "children",
    )

    def __init__(
        self,
        mutation_path: tuple[MutationKind, ...],
        record: SampleRecord,
        budget: MutationBudget,
        parent: "SearchNode | None" = None,
        is_terminal: bool = False,
    ):
        self.mutation_path = mutation_path
        self.record = record
        self.budget = budget
        self.score = NEG_INF
        self.visits = 0
        self.is_expanded = False
        self.is_terminal = is_terminal
        # Exhausted: expanded, non-terminal, and no live subtree remains
        # (every continuation was claimed by another branch's canonical key
        # or is exhausted itself). Selection routes around such nodes.
        self.is_exhausted = False
        self.parent = parent
        self.children: list[SearchNode] = []

    def last_kind(self) -> MutationKind:
        return self.mutation_path[-1]


def _mark_exhausted(node: SearchNode) -> None:
    """Flag the node and propagate upward while parents lose their last
    live child. Terminal nodes never exhaust.
    """
    current: SearchNode | None = node
    while current is not None and not current.is_terminal and current.is_expanded:
        if current.children and not all(ch.is_exhausted for ch in current.children):
            break
        if current.is_exhausted:
            break
        current.is_exhausted = True
        current = current.parent


class SeenPaths:
    """Exact transposition store keyed by the sorted mutation-id sequence."""

    def __init__(self) -> None:
        self._seen: set[tuple[int, ...]] = set()

    @staticmethod
    def canonical_key(path: Sequence[MutationKind]) -> tuple[int, ...]:
        return tuple(sorted(int(k) for k in path))

    def add(self, path: Sequence[MutationKind]) -> bool:
        """Record the path's canonical key; True if it was new."""
        key = self.canonical_key(path)
        if key in self._seen:
            return False
        self._seen.add(key)
        return True

    def __contains__(self, path: Sequence[MutationKind]) -> bool:
        return self.canonical_key(path) in self._seen

    def __len__(self) -> int:
        return len(self._seen)


def ucb1(child: SearchNode, parent_visits: int, c: float) -> float:
    """UCB1 child value: empirical mean plus exploration bonus. Unvisited
    children score +inf (always explored first); a -inf score dominates to
    -inf once the child has been visited.
    """
    if child.visits == 0:
        return math.inf
    if child.score == NEG_INF:
        return NEG_INF
    return child.score / child.visits + c * math.sqrt(math.log(parent_visits) / child.visits)


def _select_child(node: SearchNode, c: float) -> SearchNode | None:
    best = None
    best_key: tuple[float, int, int] | None = None
    for child in node.children:
        if child.is_exhausted:
            continue
        # UCB1 ties break toward fewer visits (the formula's own preference,
        # extended to the +-inf plateaus where it goes silent), then toward
        # the lowest mutation id for determinism. Least-visited-first keeps
        # scoreless siblings cycling instead of starving behind one branch.
        key = (ucb1(child, node.visits, c), -child.visits, -int(child.last_kind()))
        if best_key is None or key > best_key:
            best, best_key = child, key
    return best


def tree_policy(root: SearchNode, c: float) -> SearchNode:
    """Descend by argmax UCB1 while nodes are expanded; returns the first
    unexpanded node (or an expanded node with no live children left).
    """
    node = root
    while node.is_expanded and node.children:
        selected = _select_child(node, c)
        if selected is None:
            break
        node = selected
    return node


def expansion_policy(
    node: SearchNode,
    seen: SeenPaths,
    ctx: MutationContext,
    surrogate,
    sample_seed: int,
    stats: dict,
) -> None:
    """Add one child per allowed mutation whose canonical extended path is
    unseen. The node is marked expanded even if nothing was addable.
    """
    for kind in allowed_mutations(node.record, node.budget, ctx):
        extended = (*node.mutation_path, kind)
        if not seen.add(extended):
            stats["dedup_hits"] += 1
            continue
        record, budget = apply(node.record, kind, node.budget, ctx, sample_seed)
        child = SearchNode(
            extended,
            record,
            budget,
            parent=node,
            is_terminal=surrogate.is_benign(record),
        )
        node.children.append(child)
        stats["nodes_created"] += 1
    node.is_expanded = True
    if not node.children:
        _mark_exhausted(node)


def simulation_policy(
    node: SearchNode,
    surrogate,
    ctx: MutationContext,
    depth: int,
    rng: random.Random,
    sample_seed: int,
) -> tuple[list[MutationKind], bool]:
    """Uniform random legal rollout from the node, stopping on a benign
    verdict, at the depth limit, or when no mutation is allowed. Simulated
    states are discarded; only the rollout path and outcome are returned.
    """
    record, budget = node.record, node.budget
    rollout: list[MutationKind] = []
    for _ in range(depth):
        options = allowed_mutations(record, budget, ctx)
        if not options:
            return rollout, False
        kind = options[rng.randrange(len(options))]
        record, budget = apply(record, kind, budget, ctx, sample_seed)
        rollout.append(kind)
        if surrogate.is_benign(record):
            return rollout, True
    return rollout, False


def evaluate_path(node_path_len: int, rollout_len: int, terminal: bool) -> float:
    """Score of a simulation: the negated total mutation count from the root
    when it reached a benign verdict, -inf otherwise.
    """
    if not terminal:
        return NEG_INF
    return -float(node_path_len + rollout_len)


def back_propagate(node: SearchNode, s: float, mode: str = "faithful") -> None:
    """Update the node and every ancestor up to the root.

    faithful: finite+finite adds, any -inf overwrites with s.
    preserving: a -inf result only increments visits, never erases a score.
    """
    current: SearchNode | None = node
    while current is not None:
        if mode == "faithful":
            if current.score != NEG_INF and s != NEG_INF:
                current.score += s
            else:
                current.score = s
        else:
            if s != NEG_INF:
                current.score = s if current.score == NEG_INF else current.score + s
        current.visits += 1
        current = current.parent


def _empirical_score(node: SearchNode) -> float:
    """Accumulated score per visit: the same empirical child value UCB1's
    first term uses. Unvisited or never-successful nodes rank lowest.
    """
    if node.visits == 0 or node.score == NEG_INF:
        return NEG_INF
    return node.score / node.visits


def recover_path(root: SearchNode) -> list[MutationKind] | None:
    """Greedy argmax descent over the empirical child score (ties: fewest
    visits, then lowest id). Returns the path only if it ends on a terminal
    node.

    Raw accumulated sums scale with visit counts, which would make the
    argmax prefer stale rarely-visited branches; dividing by visits keeps
    the recovery aligned with the branch the selection policy converged on.
    """
    node = root
    path: list[MutationKind] = []
    while node.is_expanded and not node.is_terminal:
        # A childless expanded node is a dead end: transposition dedup gave
        # all its continuations to sibling branches, so any value its
        # rollouts earned is realized elsewhere in the tree. Skip those.
        candidates = [
            ch
            for ch in node.children
            if ch.is_terminal or ch.children or not ch.is_expanded
        ]
        if not candidates:
            return None
        node = max(
            candidates,
            key=lambda ch: (_empirical_score(ch), -ch.visits, -int(ch.last_kind())),
        )
        path.append(node.last_kind())
    return path if node.is_terminal else None


@dataclass
class SearchOutcome:
    found: bool
    path: list[MutationKind] | None
    iterations_used: int
    queries_used: int
    tree_stats: dict = field(default_factory=dict)
    root: SearchNode | None = None
    trace: list[dict] | None = None


def search(
    sample: SampleRecord,
    surrogate,
    ctx: MutationContext,
    config: SearchConfig = SearchConfig(),
) -> SearchOutcome:
    """Run the full iterate-traverse-expand-simulate-backpropagate loop for
    one sample and recover the best mutation path found.
    """
    counting = CountingClassifier(surrogate)
    sample_seed = path_seed(ctx, sample.sample_id)
    stats = {"nodes_created": 1, "dedup_hits": 0, "best_score": NEG_INF}

    if counting.is_benign(sample):
        # Nothing to do: the surrogate already accepts the unmutated record.
        return SearchOutcome(
            found=True,
            path=[],
            iterations_used=0,
            queries_used=counting.queries,
            tree_stats={**stats, "best_score": 0.0},
        )

    root = SearchNode((), sample, MutationBudget())
    seen = SeenPaths()
    seen.add(())
    rng = random.Random(fnv1a64(f"{config.seed}:{sample.sample_id}:rollout"))
    trace: list[dict] | None = [] if config.record_trace else None

    # Shortest path recovery has returned so far. Recovery is sampled every
    # iteration because accumulated (not averaged) node scores drift as a
    # terminal node is re-selected, so the greedy descent is most reliable
    # shortly after a terminal branch gets scored.
    best_path: list[MutationKind] | None = None
    last_improvement = 0
    iterations_used = 0
    for iteration in range(1, config.iterations + 1):
        iterations_used = iteration
        node = tree_policy(root, config.exploration_c)
        if node.visits != 0 and not node.is_terminal and not node.is_expanded:
            expansion_policy(node, seen, ctx, counting, sample_seed, stats)
            node = tree_policy(node, config.exploration_c)
        if node.is_terminal:
            rollout: list[MutationKind] = []
            terminal = True
        else:
            rollout, terminal = simulation_policy(
                node, counting, ctx, config.simulation_depth, rng, sample_seed
            )
        s = evaluate_path(len(node.mutation_path), len(rollout), terminal)
        back_propagate(node, s, config.backprop_mode)
        if s > stats["best_score"]:
            stats["best_score"] = s
        if trace is not None:
            trace.append(
                {
                    "node_path": [int(k) for k in node.mutation_path],
                    "rollout_len": len(rollout),
                    "terminal": terminal,
                    "score": s,
                }
            )
        recovered = recover_path(root)
        if recovered is not None and (best_path is None or len(recovered) < len(best_path)):
            best_path = recovered
            last_improvement = iteration
        if root.is_exhausted:
            # The whole finite mutation space has been enumerated.
            break
        if (
            config.patience is not None
            and best_path is not None
            and iteration - last_improvement >= config.patience
        ):
            break

    stats["seen_paths"] = len(seen)
    return SearchOutcome(
        found=best_path is not None,
        path=best_path,
        iterations_used=iterations_used,
        queries_used=counting.queries,
        tree_stats=stats,
        root=root if config.keep_tree else None,
        trace=trace,
    )
