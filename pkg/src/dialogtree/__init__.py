"""dialogtree: a decision-tree dialog manager for decision processes.

Learns a probabilistic decision tree from labeled cases, conducts
turn-minimizing question/answer dialogs that classify a case, tolerates
missing and volunteered answers, and refines the tree from supervisor-
verified dialogs.
"""

from .data import (
    CATEGORICAL,
    NUMERIC,
    MISSING,
    AttributeSchema,
    ClassCounts,
    Dataset,
    Example,
    SchemaConfig,
    SplitChoice,
    best_split,
    candidate_thresholds,
    entropy,
    information_gain,
    is_missing,
    load_dataset,
)
from .tree import (
    DecisionTree,
    InductionConfig,
    TreeNode,
    classify_example,
    induce_tree,
    prune_tree,
    retrain_with_feedback,
    training_accuracy,
)
from .dialog import (
    BELIEF,
    GREEDY,
    Classification,
    DialogSession,
    Question,
    Turn,
    classify_session,
    flag_novel,
    next_question,
    replay_transcript,
    start_session,
    submit_answer,
    transcript,
)
from .baselines import FINITE_STATE, FRAME, BaselinePolicy, run_baseline
from .evaluation import (
    SimulationReport,
    UserModel,
    generate_credit_dataset,
    record_satisfaction,
    simulate,
)
from .persistence import Store, VerificationRecord

__version__ = "0.1.0"

__all__ = [
    "AttributeSchema",
    "BaselinePolicy",
    "BELIEF",
    "CATEGORICAL",
    "Classification",
    "ClassCounts",
    "Dataset",
    "DecisionTree",
    "DialogSession",
    "Example",
    "FINITE_STATE",
    "FRAME",
    "GREEDY",
    "InductionConfig",
    "MISSING",
    "NUMERIC",
    "Question",
    "SchemaConfig",
    "SimulationReport",
    "SplitChoice",
    "Store",
    "TreeNode",
    "Turn",
    "UserModel",
    "VerificationRecord",
    "best_split",
    "candidate_thresholds",
    "classify_example",
    "classify_session",
    "entropy",
    "flag_novel",
    "generate_credit_dataset",
    "induce_tree",
    "information_gain",
    "is_missing",
    "load_dataset",
    "next_question",
    "prune_tree",
    "record_satisfaction",
    "replay_transcript",
    "retrain_with_feedback",
    "run_baseline",
    "simulate",
    "start_session",
    "submit_answer",
    "training_accuracy",
    "transcript",
]
