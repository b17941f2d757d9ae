"""Probabilistic decision-tree induction, pruning, feedback retraining and classification.

Internal nodes ask one attribute; edges carry the training support that
followed them, so every edge has a probability ``support / node total``.
Leaves carry full class distributions, which is what lets a dialog classify
under missing answers by propagating probability mass.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Optional, Sequence, Union

from .data import (
    CATEGORICAL,
    AttributeSchema,
    AttributeValue,
    ClassCounts,
    Dataset,
    Example,
    MISSING,
    best_split,
    is_missing,
    partition_categorical,
    partition_numeric,
)
from .errors import UnknownAttributeError, VerificationError

MISSING_EDGE = "?"


def categorical_edge(value: str) -> str:
    return "=" + value


def low_edge(threshold: float) -> str:
    return "<=" + repr(threshold)


def high_edge(threshold: float) -> str:
    return ">" + repr(threshold)


@dataclass(frozen=True)
class Leaf:
    majority_class: str


@dataclass(frozen=True)
class Internal:
    attribute: str
    threshold: Optional[float]  # None for categorical splits
    children: Mapping[str, "TreeNode"]  # edge key -> child
    edge_support: Mapping[str, int]


@dataclass(frozen=True)
class TreeNode:
    id: int
    counts: ClassCounts
    body: Union[Leaf, Internal]

    @property
    def is_leaf(self) -> bool:
        return isinstance(self.body, Leaf)

    def edge_probability(self, edge: str) -> float:
        assert isinstance(self.body, Internal)
        return self.body.edge_support[edge] / self.counts.total

    def class_distribution(self) -> dict[str, float]:
        return self.counts.proportions()

    def best_edge(self) -> str:
        """The maximal-support edge; ties go to the smallest edge key."""
        assert isinstance(self.body, Internal)
        support = self.body.edge_support
        return min(support, key=lambda e: (-support[e], e))


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    schema: tuple[AttributeSchema, ...]
    classes: tuple[str, ...]
    version: int
    source_fingerprint: str

    def attribute(self, name: str) -> AttributeSchema:
        for attr in self.schema:
            if attr.name == name:
                return attr
        raise UnknownAttributeError(f"unknown attribute {name!r}")

    def iter_nodes(self) -> Iterator[TreeNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                for key in sorted(node.body.children, reverse=True):
                    stack.append(node.body.children[key])

    def node(self, node_id: int) -> TreeNode:
        for node in self.iter_nodes():
            if node.id == node_id:
                return node
        raise KeyError(f"no node with id {node_id}")

    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def height(self) -> int:
        def h(node: TreeNode) -> int:
            if node.is_leaf:
                return 0
            return 1 + max(h(c) for c in node.body.children.values())

        return h(self.root)


@dataclass(frozen=True)
class InductionConfig:
    min_leaf_examples: int = 1
    max_depth: Optional[int] = None
    pruning: str = "none"  # "none" | "reduced_error"
    holdout_fraction: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.min_leaf_examples < 1:
            raise ValueError("min_leaf_examples must be positive")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.pruning not in ("none", "reduced_error"):
            raise ValueError(f"unknown pruning mode {self.pruning!r}")
        if self.pruning == "reduced_error":
            if self.holdout_fraction is None or not (0.0 < self.holdout_fraction < 1.0):
                raise ValueError("reduced_error pruning needs holdout_fraction in (0, 1)")
        elif self.holdout_fraction is not None:
            raise ValueError("holdout_fraction only applies to reduced_error pruning")


# ---------------------------------------------------------------------------
# induction
# ---------------------------------------------------------------------------

class _IdAllocator:
    def __init__(self):
        self.next_id = 0

    def take(self) -> int:
        node_id = self.next_id
        self.next_id += 1
        return node_id


def _make_leaf(ids: _IdAllocator, view: Sequence[Example]) -> TreeNode:
    counts = ClassCounts.from_examples(view)
    return TreeNode(id=ids.take(), counts=counts, body=Leaf(counts.majority_class()))


def _grow(
    ids: _IdAllocator,
    view: Sequence[Example],
    available: Sequence[AttributeSchema],
    depth: int,
    config: InductionConfig,
) -> TreeNode:
    counts = ClassCounts.from_examples(view)
    pure = len([c for c, k in counts.counts.items() if k]) <= 1
    budget_spent = config.max_depth is not None and depth >= config.max_depth
    if pure or budget_spent or len(view) < config.min_leaf_examples or not available:
        return _make_leaf(ids, view)
    choice = best_split(view, available)
    if choice is None:
        return _make_leaf(ids, view)

    node_id = ids.take()
    attr = choice.attribute
    if attr.kind == CATEGORICAL:
        parts, missing = partition_categorical(view, attr.name)
        branches = [(categorical_edge(v), parts[v]) for v in sorted(parts)]
        if missing:
            branches.append((MISSING_EDGE, missing))
        remaining = [a for a in available if a.name != attr.name]
        threshold = None
    else:
        threshold = choice.threshold
        low, high, missing = partition_numeric(view, attr.name, threshold)
        # Missing values ride along with the majority-support side (tie: low).
        if missing:
            (low if len(low) >= len(high) else high).extend(missing)
        branches = [(low_edge(threshold), low), (high_edge(threshold), high)]
        remaining = available

    children: dict[str, TreeNode] = {}
    edge_support: dict[str, int] = {}
    for edge, subset in branches:
        edge_support[edge] = len(subset)
        children[edge] = _grow(ids, subset, remaining, depth + 1, config)
    body = Internal(
        attribute=attr.name, threshold=threshold, children=children, edge_support=edge_support
    )
    return TreeNode(id=node_id, counts=counts, body=body)


def induce_tree(dataset: Dataset, config: InductionConfig = InductionConfig()) -> DecisionTree:
    """Greedy gain-maximizing construction over the whole dataset; version 1."""
    if not dataset.examples:
        raise ValueError("cannot induce a tree from an empty dataset")
    root = _grow(_IdAllocator(), list(dataset.examples), list(dataset.schema), 0, config)
    return DecisionTree(
        root=root,
        schema=dataset.schema,
        classes=dataset.classes,
        version=1,
        source_fingerprint=dataset.fingerprint(),
    )


# ---------------------------------------------------------------------------
# classification by mass propagation
# ---------------------------------------------------------------------------

def propagate_mass(
    tree: DecisionTree, values: Mapping[str, AttributeValue]
) -> tuple[dict[str, float], bool]:
    """Push unit probability mass from the root to the leaves.

    Known values follow their matching edge; missing values split mass across
    all children proportionally to edge probabilities; known-but-untrained
    categorical values take the maximal-probability edge and mark the result
    novel.  Returns (per-class probability, novel flag).
    """
    class_mass: dict[str, float] = {c: 0.0 for c in tree.classes}
    novel = False
    stack: list[tuple[TreeNode, float]] = [(tree.root, 1.0)]
    while stack:
        node, mass = stack.pop()
        if node.is_leaf:
            for label, p in node.class_distribution().items():
                class_mass[label] += mass * p
            continue
        body = node.body
        value = values.get(body.attribute, MISSING)
        if is_missing(value):
            for edge in sorted(body.children):
                stack.append((body.children[edge], mass * node.edge_probability(edge)))
            continue
        if body.threshold is None:
            edge = categorical_edge(value)
            if edge not in body.children:
                novel = True
                edge = node.best_edge()
        else:
            edge = low_edge(body.threshold) if value <= body.threshold else high_edge(body.threshold)
        stack.append((body.children[edge], mass))
    return class_mass, novel


def argmax_class(class_mass: Mapping[str, float]) -> tuple[str, float]:
    label = min(class_mass, key=lambda c: (-class_mass[c], c))
    return label, class_mass[label]


def classify_example(
    tree: DecisionTree, values: Mapping[str, AttributeValue]
) -> tuple[str, float]:
    """Most probable class for a (possibly partial) example, with its probability."""
    class_mass, _ = propagate_mass(tree, values)
    return argmax_class(class_mass)


def training_accuracy(tree: DecisionTree, dataset: Dataset) -> float:
    if not dataset.examples:
        return 0.0
    hits = sum(
        1 for e in dataset.examples if classify_example(tree, e.values)[0] == e.label
    )
    return hits / len(dataset.examples)


# ---------------------------------------------------------------------------
# reduced-error pruning
# ---------------------------------------------------------------------------

def _replace_with_leaf(node: TreeNode, target_id: int) -> TreeNode:
    if node.id == target_id:
        return TreeNode(id=node.id, counts=node.counts, body=Leaf(node.counts.majority_class()))
    if node.is_leaf:
        return node
    children = {
        edge: _replace_with_leaf(child, target_id) for edge, child in node.body.children.items()
    }
    return TreeNode(id=node.id, counts=node.counts, body=replace(node.body, children=children))


def _accuracy(tree: DecisionTree, examples: Sequence[Example]) -> float:
    hits = sum(1 for e in examples if classify_example(tree, e.values)[0] == e.label)
    return hits / len(examples)


def holdout_split(
    dataset: Dataset, fraction: float, seed: int
) -> tuple[list[Example], list[Example]]:
    """Deterministic (grow, holdout) split of the dataset's examples."""
    order = list(dataset.examples)
    random.Random(seed).shuffle(order)
    cut = int(round(len(order) * fraction))
    return order[cut:], order[:cut]


def prune_tree(tree: DecisionTree, dataset: Dataset, config: InductionConfig) -> DecisionTree:
    """Reduced-error pruning against a seeded holdout drawn from `dataset`.

    Bottom-up: an internal node becomes its majority leaf whenever holdout
    accuracy does not decrease, so the result never has more nodes and never
    scores worse on the holdout.
    """
    if config.pruning != "reduced_error":
        raise ValueError("prune_tree requires pruning = reduced_error")
    _, holdout = holdout_split(dataset, config.holdout_fraction, config.rng_seed)
    if not holdout:
        raise ValueError("holdout split leaves zero holdout examples")

    def depth_of(node: TreeNode, target_id: int, depth: int = 0) -> Optional[int]:
        if node.id == target_id:
            return depth
        if node.is_leaf:
            return None
        for child in node.body.children.values():
            found = depth_of(child, target_id, depth + 1)
            if found is not None:
                return found
        return None

    current = tree
    accuracy = _accuracy(current, holdout)
    while True:
        internals = [n for n in current.iter_nodes() if not n.is_leaf]
        # deepest first; ids break ties for a stable order
        internals.sort(key=lambda n: (-(depth_of(current.root, n.id) or 0), n.id))
        pruned_any = False
        for node in internals:
            candidate = replace(current, root=_replace_with_leaf(current.root, node.id))
            candidate_accuracy = _accuracy(candidate, holdout)
            if candidate_accuracy >= accuracy:
                current = candidate
                accuracy = candidate_accuracy
                pruned_any = True
                break  # node set changed; recompute the bottom-up order
        if not pruned_any:
            return current


# ---------------------------------------------------------------------------
# supervisor feedback
# ---------------------------------------------------------------------------

def verification_example(
    schema: Sequence[AttributeSchema],
    observed: Mapping[str, AttributeValue],
    label: str,
) -> Example:
    """A training example from a dialog's observed values; unanswered = missing."""
    values: dict[str, AttributeValue] = {}
    for attr in schema:
        value = observed.get(attr.name, MISSING)
        values[attr.name] = MISSING if is_missing(value) else attr.validate_value(value)
    return Example(values=values, label=label)


def retrain_with_feedback(
    dataset: Dataset,
    verifications: Sequence,
    config: InductionConfig,
    *,
    cases: Mapping[str, Mapping[str, AttributeValue]],
    previous_version: int,
) -> DecisionTree:
    """Fold supervisor-corrected dialogs into the dataset and rebuild the tree.

    `cases` maps each verified session id to the attribute values observed
    during that dialog (answered + volunteered).  The latest verification per
    session wins.  The new tree's version is previous_version + 1.
    """
    latest: dict[str, object] = {}
    for record in verifications:
        latest[record.session_id] = record
    extra: list[Example] = []
    for session_id in sorted(latest):
        record = latest[session_id]
        if session_id not in cases:
            raise VerificationError(f"verification references unknown session {session_id!r}")
        if record.corrected_label not in dataset.classes:
            raise VerificationError(
                f"corrected label {record.corrected_label!r} is not a known class"
            )
        extra.append(verification_example(dataset.schema, cases[session_id], record.corrected_label))
    augmented = dataset.with_examples(extra)
    tree = induce_tree(augmented, config)
    if config.pruning == "reduced_error":
        tree = prune_tree(tree, augmented, config)
    return replace(tree, version=previous_version + 1)
