"""Grey-box malware-classifier evasion toolkit.

Finds minimal feature-mutation sequences with Monte Carlo tree search
against a locally trained surrogate classifier, then measures how those
mutations transfer to a separately trained victim classifier.
"""

from .dtree import DecisionTreeModel, train_decision_tree
from .mcts import SearchConfig, SearchOutcome, search
from .metrics import evaluate, evaluate_scores, roc_auc
from .mlp import MlpConfig, MlpModel, train_mlp
from .mutations import (
    BudgetCaps,
    MutationBudget,
    MutationContext,
    MutationError,
    MutationKind,
    MutationPath,
    allowed_mutations,
    apply,
    apply_path,
    build_context,
)
from .pipeline import RecordClassifier
from .preprocess import PreprocessorModel, fit_preprocessor, transform
from .random_search import RandomSearchConfig, random_search
from .records import Label, SampleRecord, ingest_jsonl, write_jsonl
from .synthetic import generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "BudgetCaps",
    "DecisionTreeModel",
    "Label",
    "MlpConfig",
    "MlpModel",
    "MutationBudget",
    "MutationContext",
    "MutationError",
    "MutationKind",
    "MutationPath",
    "PreprocessorModel",
    "RandomSearchConfig",
    "RecordClassifier",
    "SampleRecord",
    "SearchConfig",
    "SearchOutcome",
    "allowed_mutations",
    "apply",
    "apply_path",
    "build_context",
    "evaluate",
    "evaluate_scores",
    "fit_preprocessor",
    "generate_synthetic",
    "ingest_jsonl",
    "random_search",
    "roc_auc",
    "search",
    "train_decision_tree",
    "train_mlp",
    "transform",
    "write_jsonl",
]
