"""Live question/answer sessions over a decision tree.

A session keeps a frontier of (node, probability-mass) pairs.  Greedy mode
always holds a single node and rides the highest-probability edge past
unanswerable questions; belief mode splits mass across children instead and
tracks every open path in parallel.  Answers the user volunteers are cached
and consumed silently, so they never cost a turn.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Mapping, Optional, Sequence, Union

from .data import AttributeValue, MISSING, is_missing
from .errors import (
    AttributeMismatchError,
    InvalidAnswerError,
    SchemaError,
    SessionClosedError,
)
from .tree import (
    DecisionTree,
    TreeNode,
    argmax_class,
    categorical_edge,
    high_edge,
    low_edge,
)

GREEDY = "greedy"
BELIEF = "belief"
MODES = (GREEDY, BELIEF)

ACTIVE = "active"
CLASSIFIED = "classified"

SYSTEM = "system"
USER = "user"

QUESTION = "question"
ANSWER = "answer"
UNKNOWN = "unknown"
CONFIRM = "confirm"

# Greedy mode has no mass to hedge with: answers below this confidence are
# handled as unknown.
GREEDY_CONFIDENCE_CUTOFF = 0.5

MASS_TOLERANCE = 1e-9


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Turn:
    index: int
    role: str  # system | user
    kind: str  # question | answer | unknown | confirm
    attribute: Optional[str] = None
    text: Optional[str] = None
    value: Optional[AttributeValue] = None
    confidence: Optional[float] = None
    volunteered: Optional[Mapping[str, AttributeValue]] = None
    at: str = ""


@dataclass(frozen=True)
class Question:
    attribute: str
    text: str


@dataclass(frozen=True)
class Classification:
    label: str
    probability: float


@dataclass
class DialogSession:
    id: str
    tree: DecisionTree
    mode: str
    frontier: list[tuple[TreeNode, float]]
    volunteered: dict[str, AttributeValue] = field(default_factory=dict)
    answered: dict[str, tuple[AttributeValue, float]] = field(default_factory=dict)
    transcript: list[Turn] = field(default_factory=list)
    status: str = ACTIVE
    result: Optional[tuple[str, float]] = None
    novel: bool = False
    pending: Optional[str] = None
    confirm_threshold: float = 0.5
    clock: Callable[[], str] = utc_now

    @property
    def tree_version(self) -> int:
        return self.tree.version

    def frontier_view(self) -> list[tuple[int, float]]:
        return [(node.id, mass) for node, mass in self.frontier]

    def system_question_count(self) -> int:
        return sum(1 for t in self.transcript if t.role == SYSTEM and t.kind == QUESTION)


def start_session(
    tree: DecisionTree,
    mode: str = GREEDY,
    *,
    session_id: Optional[str] = None,
    confirm_threshold: float = 0.5,
    clock: Callable[[], str] = utc_now,
) -> DialogSession:
    """Open a session at the root; degenerate single-leaf trees classify at once."""
    if mode not in MODES:
        raise ValueError(f"unknown dialog mode {mode!r}")
    session = DialogSession(
        id=session_id or uuid.uuid4().hex,
        tree=tree,
        mode=mode,
        frontier=[(tree.root, 1.0)],
        confirm_threshold=confirm_threshold,
        clock=clock,
    )
    if tree.root.is_leaf:
        _finalize(session)
    else:
        _pose_next(session)
    return session


def next_question(session: DialogSession) -> Union[Question, Classification]:
    """The pending question, advancing past cached answers; or the classification.

    Volunteered or previously answered attributes are consumed silently (no
    user turn, no question turn).  When every open path has resolved to a
    leaf the session is classified and the result returned.  Raises once the
    session is already classified.
    """
    if session.status == CLASSIFIED:
        raise SessionClosedError(f"session {session.id} is already classified")
    if session.pending is None:
        _pose_next(session)
    if session.status == CLASSIFIED:
        return Classification(*session.result)
    return Question(session.pending, session.tree.attribute(session.pending).question_text)


def submit_answer(
    session: DialogSession,
    attribute: str,
    value: AttributeValue = MISSING,
    *,
    confidence: float = 1.0,
    unknown: bool = False,
    extras: Optional[Mapping[str, AttributeValue]] = None,
) -> DialogSession:
    """Apply one user answer (or an "I cannot tell you that") to the frontier.

    Known answers follow matching edges; in belief mode a confidence c < 1
    sends mass c down the matching edge and spreads the rest over the other
    children by their edge probabilities.  Unknown answers ride the highest
    probability edge (greedy) or split across all children (belief).  Extras
    are volunteered values cached for later questions.
    """
    if session.status != ACTIVE:
        raise SessionClosedError(f"session {session.id} is already classified")
    if session.pending is None:
        raise AttributeMismatchError("no question is pending; call next_question first")
    if attribute != session.pending:
        raise AttributeMismatchError(
            f"pending question asks {session.pending!r}, not {attribute!r}"
        )
    schema = session.tree.attribute(attribute)
    if unknown or is_missing(value):
        unknown = True
        value = MISSING
        confidence = 1.0
    else:
        try:
            value = schema.validate_value(value)
        except SchemaError as exc:
            raise InvalidAnswerError(str(exc)) from exc
        if not 0.0 < confidence <= 1.0:
            raise InvalidAnswerError(f"confidence must be in (0, 1], got {confidence}")
    clean_extras: dict[str, AttributeValue] = {}
    if extras:
        for name, extra in extras.items():
            try:
                clean_extras[name] = session.tree.attribute(name).validate_value(extra)
            except SchemaError as exc:
                raise InvalidAnswerError(str(exc)) from exc

    _append_turn(
        session,
        role=USER,
        kind=UNKNOWN if unknown else ANSWER,
        attribute=attribute,
        value=None if unknown else value,
        confidence=None if unknown else confidence,
        volunteered=clean_extras or None,
    )
    session.volunteered.update(clean_extras)
    session.answered[attribute] = (value, confidence)
    session.pending = None
    _route_frontier(session, attribute, value, confidence)
    if not unknown and confidence < session.confirm_threshold:
        _append_turn(
            session,
            role=SYSTEM,
            kind=CONFIRM,
            attribute=attribute,
            text=f"Let me confirm: {attribute} = {value}.",
        )
    return session


def classify_session(session: DialogSession, force: bool = False) -> tuple[str, float]:
    """Aggregate leaf mass into the final (class, probability).

    With `force`, open internal nodes first push their mass to a leaf by
    repeated maximal-probability descent.  Idempotent on classified sessions.
    """
    if session.status == CLASSIFIED:
        return session.result
    if any(not node.is_leaf for node, _ in session.frontier):
        if not force:
            raise SessionClosedError(
                "frontier still holds open questions; pass force=True to classify early"
            )
        descended: list[tuple[TreeNode, float]] = []
        for node, mass in session.frontier:
            while not node.is_leaf:
                node = node.body.children[node.best_edge()]
            descended.append((node, mass))
        session.frontier = descended
    _finalize(session)
    return session.result


def flag_novel(session: DialogSession) -> bool:
    """True when the dialog ever crossed an edge with no training support."""
    return session.novel


def transcript(session: DialogSession) -> tuple[Turn, ...]:
    return tuple(session.transcript)


def observed_values(session: DialogSession) -> dict[str, AttributeValue]:
    """Attribute values this dialog established (volunteered + answered known)."""
    values = dict(session.volunteered)
    for attr, (value, _confidence) in session.answered.items():
        if is_missing(value):
            values.pop(attr, None)
        else:
            values[attr] = value
    return values


def replay_transcript(
    tree: DecisionTree,
    turns: Sequence[Turn],
    mode: str,
    *,
    session_id: Optional[str] = None,
    confirm_threshold: float = 0.5,
    clock: Callable[[], str] = utc_now,
) -> DialogSession:
    """Re-run a recorded dialog against a tree; used to audit determinism."""
    session = start_session(
        tree, mode, session_id=session_id, confirm_threshold=confirm_threshold, clock=clock
    )
    for turn in turns:
        if turn.role != USER:
            continue
        if turn.kind == UNKNOWN:
            submit_answer(session, turn.attribute, unknown=True, extras=turn.volunteered)
        else:
            submit_answer(
                session,
                turn.attribute,
                turn.value,
                confidence=turn.confidence if turn.confidence is not None else 1.0,
                extras=turn.volunteered,
            )
        if session.status == ACTIVE:
            next_question(session)
    return session


# ---------------------------------------------------------------------------
# internals
# ---------------------------------------------------------------------------

def _append_turn(session: DialogSession, **fields) -> None:
    session.transcript.append(
        Turn(index=len(session.transcript), at=session.clock(), **fields)
    )


def _select_target(session: DialogSession) -> Optional[TreeNode]:
    open_nodes = [(node, mass) for node, mass in session.frontier if not node.is_leaf]
    if not open_nodes:
        return None
    if session.mode == GREEDY:
        return open_nodes[0][0]
    return min(open_nodes, key=lambda nm: (-nm[1], nm[0].body.attribute, nm[0].id))[0]


def _pose_next(session: DialogSession) -> None:
    """Advance to the next fresh question, consuming cached answers silently."""
    while True:
        target = _select_target(session)
        if target is None:
            _finalize(session)
            return
        attribute = target.body.attribute
        if attribute in session.answered:
            value, confidence = session.answered[attribute]
            _route_frontier(session, attribute, value, confidence)
            continue
        if attribute in session.volunteered:
            _route_frontier(session, attribute, session.volunteered[attribute], 1.0)
            continue
        session.pending = attribute
        _append_turn(
            session,
            role=SYSTEM,
            kind=QUESTION,
            attribute=attribute,
            text=session.tree.attribute(attribute).question_text,
        )
        return


def _route_frontier(
    session: DialogSession, attribute: str, value: AttributeValue, confidence: float
) -> None:
    """Move the mass of every frontier node asking `attribute` down its edges."""
    merged: dict[int, tuple[TreeNode, float]] = {}

    def add(node: TreeNode, mass: float) -> None:
        if node.id in merged:
            merged[node.id] = (node, merged[node.id][1] + mass)
        else:
            merged[node.id] = (node, mass)

    for node, mass in session.frontier:
        if node.is_leaf or node.body.attribute != attribute:
            add(node, mass)
        else:
            _route_node(session, node, mass, value, confidence, add)
    entries = list(merged.values())
    total = sum(mass for _, mass in entries)
    session.frontier = [(node, mass / total) for node, mass in entries]


def _route_node(session, node: TreeNode, mass: float, value, confidence, add) -> None:
    body = node.body
    children = body.children
    if session.mode == GREEDY and not is_missing(value) and confidence < GREEDY_CONFIDENCE_CUTOFF:
        value = MISSING
    if is_missing(value):
        if session.mode == GREEDY:
            add(children[node.best_edge()], mass)
        else:
            for edge in sorted(children):
                add(children[edge], mass * node.edge_probability(edge))
        return
    if body.threshold is None:
        edge = categorical_edge(value)
        if edge not in children:
            # Valid per schema but never seen in training: guess the strongest
            # edge and flag the dialog for review.
            session.novel = True
            add(children[node.best_edge()], mass)
            return
    else:
        edge = low_edge(body.threshold) if value <= body.threshold else high_edge(body.threshold)
    if session.mode == GREEDY or confidence >= 1.0:
        add(children[edge], mass)
        return
    rest = [e for e in sorted(children) if e != edge]
    rest_support = sum(body.edge_support[e] for e in rest)
    if not rest or rest_support == 0:
        add(children[edge], mass)
        return
    add(children[edge], mass * confidence)
    for e in rest:
        add(children[e], mass * (1.0 - confidence) * body.edge_support[e] / rest_support)


def _finalize(session: DialogSession) -> None:
    class_mass = {c: 0.0 for c in session.tree.classes}
    for node, mass in session.frontier:
        for label, p in node.class_distribution().items():
            class_mass[label] += mass * p
    session.result = argmax_class(class_mass)
    session.status = CLASSIFIED
    session.pending = None
