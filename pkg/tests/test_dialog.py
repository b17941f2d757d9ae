import random

import pytest

from dialogtree.data import (
    CATEGORICAL,
    AttributeSchema,
    Dataset,
    Example,
    is_missing,
)
from dialogtree.dialog import (
    ACTIVE,
    BELIEF,
    CLASSIFIED,
    GREEDY,
    Classification,
    Question,
    classify_session,
    flag_novel,
    next_question,
    observed_values,
    replay_transcript,
    start_session,
    submit_answer,
    transcript,
)
from dialogtree.errors import (
    AttributeMismatchError,
    InvalidAnswerError,
    SessionClosedError,
)
from dialogtree.evaluation import generate_credit_dataset
from dialogtree.tree import classify_example, induce_tree

from conftest import run_session


def two_leaf_tree(positive=7, negative=3):
    """Root asks one yes/no attribute; the edges carry positive:negative support."""
    attr = AttributeSchema("flag", CATEGORICAL, ("a", "b"), None, "Flag?")
    examples = tuple(Example({"flag": "a"}, "y") for _ in range(positive)) + tuple(
        Example({"flag": "b"}, "n") for _ in range(negative)
    )
    ds = Dataset(schema=(attr,), classes=("n", "y"), examples=examples)
    return induce_tree(ds)


def single_leaf_tree():
    attr = AttributeSchema("x", CATEGORICAL, ("a",), None, "x?")
    ds = Dataset(
        schema=(attr,), classes=("y",), examples=tuple(Example({"x": "a"}, "y") for _ in range(3))
    )
    return induce_tree(ds)


@pytest.fixture(scope="module")
def credit_tree():
    return induce_tree(generate_credit_dataset(500, 7))


@pytest.fixture(scope="module")
def credit_examples():
    # complete cases only (row 2 carries the missing Years cell)
    ds = generate_credit_dataset(500, 7)
    return [
        e
        for e in ds.examples
        if not any(is_missing(v) for v in e.values.values())
    ]


class TestStartSession:
    def test_single_leaf_is_born_classified(self):
        session = start_session(single_leaf_tree())
        assert session.status == CLASSIFIED
        assert session.result == ("y", 1.0)
        assert transcript(session) == ()

    def test_first_question_is_the_root_attribute(self, fig1_tree):
        session = start_session(fig1_tree, GREEDY)
        question = next_question(session)
        assert question == Question("Bankruptcy", "Did you ever declare bankruptcy?")
        assert session.transcript[0].role == "system"
        assert session.transcript[0].text == "Did you ever declare bankruptcy?"

    def test_sessions_are_independent(self, fig1_tree):
        a = start_session(fig1_tree)
        b = start_session(fig1_tree)
        assert a.id != b.id
        submit_answer(a, "Bankruptcy", "no")
        assert b.frontier_view() == [(fig1_tree.root.id, 1.0)]
        assert b.transcript[-1].role == "system"

    def test_unknown_mode_rejected(self, fig1_tree):
        with pytest.raises(ValueError):
            start_session(fig1_tree, "psychic")


class TestNextQuestion:
    def test_classification_returned_once_mass_sits_on_leaves(self):
        session = start_session(two_leaf_tree())
        submit_answer(session, "flag", "a")
        step = next_question(session)
        assert step == Classification("y", 1.0)
        assert session.status == CLASSIFIED

    def test_error_after_classification(self):
        session = start_session(single_leaf_tree())
        with pytest.raises(SessionClosedError):
            next_question(session)

    def test_volunteered_attribute_skipped_silently(self, fig1_tree):
        session = start_session(fig1_tree, GREEDY)
        question = next_question(session)
        assert question.attribute == "Bankruptcy"
        submit_answer(session, "Bankruptcy", "yes", extras={"Savings": 100000.0})
        step = next_question(session)
        # Savings was volunteered: the dialog never asks it and finishes
        assert step == Classification("yes", 1.0)
        assert session.system_question_count() == 1

    def test_repeat_call_is_stable_while_awaiting_answer(self, fig1_tree):
        session = start_session(fig1_tree)
        first = next_question(session)
        again = next_question(session)
        assert first == again
        assert session.system_question_count() == 1


class TestSubmitAnswer:
    def test_figure3_greedy_path(self, credit_tree):
        answers = {"Bankruptcy": "no", "Savings": 15000.0}
        session = run_session(credit_tree, answers, GREEDY)
        label, probability = session.result
        assert label == "yes"
        assert probability > 0.5
        assert session.system_question_count() <= 4
        asked = [t.attribute for t in session.transcript if t.kind == "question"]
        assert "Employment" in asked  # answered unknown, traversal proceeded anyway

    def test_belief_unknown_splits_by_edge_probabilities(self):
        session = start_session(two_leaf_tree(7, 3), BELIEF)
        submit_answer(session, "flag", unknown=True)
        masses = sorted(m for _, m in session.frontier_view())
        assert masses == [pytest.approx(0.3), pytest.approx(0.7)]
        assert sum(masses) == pytest.approx(1.0, abs=1e-9)

    def test_confidence_mass_split_at_even_node(self):
        session = start_session(two_leaf_tree(2, 2), BELIEF)
        submit_answer(session, "flag", "a", confidence=0.8)
        masses = sorted(m for _, m in session.frontier_view())
        assert masses == [pytest.approx(0.2), pytest.approx(0.8)]
        assert classify_session(session) == ("y", pytest.approx(0.8))

    def test_greedy_low_confidence_is_treated_as_unknown(self):
        tree = two_leaf_tree(7, 3)
        session = start_session(tree, GREEDY)
        submit_answer(session, "flag", "b", confidence=0.4)
        # 0.4 < 0.5: greedy ignores the answer and follows the strongest edge (=a)
        assert next_question(session) == Classification("y", 1.0)

    def test_greedy_confident_answer_is_followed(self):
        session = start_session(two_leaf_tree(7, 3), GREEDY)
        submit_answer(session, "flag", "b", confidence=0.9)
        assert session.result is None  # not yet classified; frontier moved to the leaf
        assert next_question(session) == Classification("n", 1.0)

    def test_confirm_turn_emitted_below_threshold(self):
        session = start_session(two_leaf_tree(), BELIEF, confirm_threshold=0.6)
        submit_answer(session, "flag", "a", confidence=0.55)
        kinds = [t.kind for t in session.transcript]
        assert kinds == ["question", "answer", "confirm"]
        assert session.system_question_count() == 1  # confirm is not a question

    def test_attribute_mismatch(self, fig1_tree):
        session = start_session(fig1_tree)
        with pytest.raises(AttributeMismatchError):
            submit_answer(session, "Savings", 10.0)

    def test_invalid_value(self, fig1_tree):
        session = start_session(fig1_tree)
        with pytest.raises(InvalidAnswerError):
            submit_answer(session, "Bankruptcy", "maybe")

    def test_invalid_confidence(self, fig1_tree):
        session = start_session(fig1_tree)
        for confidence in (0.0, -0.2, 1.5):
            with pytest.raises(InvalidAnswerError):
                submit_answer(session, "Bankruptcy", "no", confidence=confidence)

    def test_closed_session_rejected(self):
        session = start_session(single_leaf_tree())
        with pytest.raises(SessionClosedError):
            submit_answer(session, "x", "a")

    def test_invalid_volunteered_value_rejected(self, fig1_tree):
        session = start_session(fig1_tree)
        with pytest.raises(InvalidAnswerError):
            submit_answer(session, "Bankruptcy", "no", extras={"Employment": "maybe"})

    def test_explicit_answer_overrides_volunteered(self, fig1_tree):
        session = start_session(fig1_tree, GREEDY)
        # volunteer Savings while answering Bankruptcy; Savings never re-asked
        submit_answer(session, "Bankruptcy", "yes", extras={"Savings": 2000.0})
        assert observed_values(session)["Savings"] == 2000.0
        step = next_question(session)
        assert isinstance(step, Classification)


class TestClassifySession:
    def test_single_pure_leaf(self):
        session = start_session(two_leaf_tree())
        submit_answer(session, "flag", "a")
        assert classify_session(session) == ("y", 1.0)
        assert session.status == CLASSIFIED

    def test_weighted_argmax_over_two_leaves(self):
        session = start_session(two_leaf_tree(6, 4), BELIEF)
        submit_answer(session, "flag", unknown=True)
        label, probability = classify_session(session)
        assert label == "y"
        assert probability == pytest.approx(0.6, abs=1e-9)

    def test_forced_early_uses_max_probability_descent(self, credit_tree):
        session = start_session(credit_tree, GREEDY)
        result = classify_session(session, force=True)
        # the forced result equals classifying with every value missing, greedily
        node = credit_tree.root
        while not node.is_leaf:
            node = node.body.children[node.best_edge()]
        assert result[0] == node.body.majority_class

    def test_requires_force_while_questions_remain(self, credit_tree):
        session = start_session(credit_tree, GREEDY)
        with pytest.raises(SessionClosedError):
            classify_session(session)

    def test_idempotent_once_classified(self):
        session = start_session(single_leaf_tree())
        assert classify_session(session) == session.result


class TestFlagNovel:
    def test_trained_edges_not_novel(self, fig1_tree):
        session = run_session(fig1_tree, {"Bankruptcy": "no"})
        assert flag_novel(session) is False

    def test_unseen_value_is_novel(self):
        attr = AttributeSchema("x", CATEGORICAL, ("a", "b", "c"), None, "x?")
        other = AttributeSchema("z", CATEGORICAL, ("p", "q"), None, "z?")
        examples = (
            Example({"x": "a", "z": "p"}, "y"),
            Example({"x": "a", "z": "q"}, "y"),
            Example({"x": "b", "z": "p"}, "n"),
        )
        ds = Dataset(schema=(attr, other), classes=("n", "y"), examples=examples)
        tree = induce_tree(ds)
        session = run_session(tree, {"x": "c", "z": "p"})
        assert flag_novel(session) is True

    def test_unknown_answers_alone_are_not_novel(self, credit_tree):
        session = run_session(credit_tree, {})  # every question answered "unknown"
        assert session.status == CLASSIFIED
        assert flag_novel(session) is False


class TestTranscript:
    def test_empty_for_degenerate_tree(self):
        assert transcript(start_session(single_leaf_tree())) == ()

    def test_alternates_question_and_answer(self, credit_tree, credit_examples):
        session = run_session(credit_tree, credit_examples[5].values, BELIEF)
        qa = [t for t in transcript(session) if t.kind in ("question", "answer", "unknown")]
        for i, turn in enumerate(qa):
            assert turn.role == ("system" if i % 2 == 0 else "user")

    def test_volunteering_strictly_reduces_questions(self, credit_tree, credit_examples):
        example = credit_examples[4]
        base = run_session(credit_tree, example.values, GREEDY)
        asked = [t.attribute for t in transcript(base) if t.kind == "question"]
        volunteered = {asked[-1]: example.values[asked[-1]]}
        skipped = run_session(credit_tree, example.values, GREEDY, extras_first=volunteered)
        assert skipped.system_question_count() < base.system_question_count()
        assert skipped.result == base.result


class TestSessionInvariants:
    def test_turn_bound(self, credit_tree, credit_examples):
        n_attrs = len(credit_tree.schema)
        height = credit_tree.height()
        rng = random.Random(2)
        for i in range(50):
            example = rng.choice(credit_examples)
            answers = {
                k: v for k, v in example.values.items() if rng.random() > 0.4
            }
            greedy = run_session(credit_tree, answers, GREEDY)
            belief = run_session(credit_tree, answers, BELIEF)
            assert greedy.system_question_count() <= min(n_attrs, height)
            assert belief.system_question_count() <= n_attrs

    def test_frontier_mass_stays_normalized(self, credit_tree, credit_examples):
        rng = random.Random(3)
        for _ in range(60):
            example = rng.choice(credit_examples)
            session = start_session(credit_tree, BELIEF)
            while session.status == ACTIVE:
                step = next_question(session)
                if isinstance(step, Classification):
                    break
                total = sum(m for _, m in session.frontier_view())
                assert total == pytest.approx(1.0, abs=1e-9)
                value = example.values[step.attribute]
                if rng.random() < 0.35 or is_missing(value):
                    submit_answer(session, step.attribute, unknown=True)
                elif rng.random() < 0.3:
                    submit_answer(session, step.attribute, value, confidence=rng.uniform(0.3, 1.0))
                else:
                    submit_answer(session, step.attribute, value)
                total = sum(m for _, m in session.frontier_view())
                assert total == pytest.approx(1.0, abs=1e-9)

    def test_greedy_and_belief_agree_when_fully_answered(self, credit_tree, credit_examples):
        for example in credit_examples[:100]:
            greedy = run_session(credit_tree, example.values, GREEDY)
            belief = run_session(credit_tree, example.values, BELIEF)
            g_questions = [t.attribute for t in transcript(greedy) if t.kind == "question"]
            b_questions = [t.attribute for t in transcript(belief) if t.kind == "question"]
            assert g_questions == b_questions
            assert greedy.result == belief.result

    def test_asked_attributes_never_repeat(self, credit_tree, credit_examples):
        rng = random.Random(9)
        for _ in range(40):
            example = rng.choice(credit_examples)
            answers = {k: v for k, v in example.values.items() if rng.random() > 0.5}
            session = run_session(credit_tree, answers, BELIEF)
            asked = [t.attribute for t in transcript(session) if t.kind == "question"]
            assert len(asked) == len(set(asked))

    def test_belief_session_matches_classify_example(self, credit_tree, credit_examples):
        rng = random.Random(4)
        for _ in range(60):
            example = rng.choice(credit_examples)
            known = {k: v for k, v in example.values.items() if rng.random() > 0.4}
            session = run_session(credit_tree, known, BELIEF)
            expected = classify_example(credit_tree, known)
            assert session.result[0] == expected[0]
            assert session.result[1] == pytest.approx(expected[1], abs=1e-9)

    def test_replay_reproduces_session_state(self, credit_tree, credit_examples, fixed_clock):
        rng = random.Random(6)
        for _ in range(20):
            example = rng.choice(credit_examples)
            answers = {k: v for k, v in example.values.items() if rng.random() > 0.3}
            extras = {}
            for name, value in list(answers.items())[:2]:
                if rng.random() < 0.5:
                    extras[name] = value
            original = run_session(
                credit_tree, answers, BELIEF, extras_first=extras, clock=fixed_clock
            )
            replayed = replay_transcript(
                credit_tree,
                transcript(original),
                BELIEF,
                session_id=original.id,
                clock=fixed_clock,
            )
            assert replayed.status == original.status
            assert replayed.result == original.result
            assert replayed.novel == original.novel
            assert replayed.frontier_view() == original.frontier_view()
            assert transcript(replayed) == transcript(original)
            assert replayed.answered == original.answered
            assert replayed.volunteered == original.volunteered
