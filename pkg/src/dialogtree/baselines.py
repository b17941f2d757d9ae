"""Reference dialog managers the tree manager is measured against.

A finite-state manager holds the initiative at every turn and walks a fixed
question script; a frame manager fills the same slots but skips any the user
volunteered.  Both delegate the final decision to the shared decision tree so
the comparison isolates dialog policy, not classifier quality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .data import AttributeValue, MISSING, is_missing
from .tree import DecisionTree, classify_example

FINITE_STATE = "finite_state"
FRAME = "frame"


@dataclass(frozen=True)
class BaselinePolicy:
    kind: str
    question_order: tuple[str, ...]
    classifier: DecisionTree

    def __post_init__(self):
        if self.kind not in (FINITE_STATE, FRAME):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        schema_names = sorted(a.name for a in self.classifier.schema)
        if sorted(self.question_order) != schema_names:
            raise ValueError("question_order must be a permutation of the schema attributes")


def run_baseline(
    policy: BaselinePolicy,
    answers: Mapping[str, AttributeValue],
    volunteered: Optional[Mapping[str, AttributeValue]] = None,
) -> tuple[str, int]:
    """Run one scripted dialog; returns (class label, system-question count).

    `answers` is the user's answer oracle over the full schema (missing =
    cannot answer).  The finite-state script ignores volunteered values and
    always asks everything; the frame script skips volunteered slots.
    """
    volunteered = volunteered or {}
    values: dict[str, AttributeValue] = {}
    questions = 0
    for name in policy.question_order:
        if policy.kind == FRAME and name in volunteered:
            values[name] = volunteered[name]
            continue
        questions += 1
        answer = answers.get(name, MISSING)
        if not is_missing(answer):
            values[name] = answer
    label, _probability = classify_example(policy.classifier, values)
    return label, questions
