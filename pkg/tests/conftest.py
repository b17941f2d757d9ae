import random

import pytest

from dialogtree.data import (
    CATEGORICAL,
    NUMERIC,
    AttributeSchema,
    Dataset,
    Example,
    MISSING,
    SchemaConfig,
    is_missing,
    load_dataset,
)
from dialogtree.dialog import ACTIVE, Classification, next_question, start_session, submit_answer
from dialogtree.tree import induce_tree

# The three anchor rows of the credit-approvals table (Years unknown in row 2).
FIG1_CSV = """Employment,Years,Savings,Bankruptcy,Credit
no,10,100000,yes,yes
no,?,5000,yes,no
yes,1,2000,no,yes
"""

# Values frozen from tests/oracle.py (independent brute-force evaluation).
FIG1_ENTROPY = 0.9182958340544896
FIG1_GAIN_BANKRUPTCY = 0.2516291673878229


def fig1_schema() -> tuple[AttributeSchema, ...]:
    return (
        AttributeSchema("Employment", CATEGORICAL, ("yes", "no"), None, "Are you employed?"),
        AttributeSchema(
            "Years", NUMERIC, (), "years", "How many years have you lived at your current address?"
        ),
        AttributeSchema("Savings", NUMERIC, (), "USD", "How much do you have in savings?"),
        AttributeSchema("Bankruptcy", CATEGORICAL, ("yes", "no"), None, "Did you ever declare bankruptcy?"),
    )


@pytest.fixture
def fig1_config() -> SchemaConfig:
    return SchemaConfig(attributes=fig1_schema(), label_column="Credit", classes=("no", "yes"))


@pytest.fixture
def fig1_dataset(fig1_config) -> Dataset:
    return load_dataset(FIG1_CSV, fig1_config)


@pytest.fixture
def fig1_tree(fig1_dataset):
    return induce_tree(fig1_dataset)


@pytest.fixture
def fixed_clock():
    return lambda: "2026-01-01T00:00:00Z"


def run_session(tree, answers, mode="greedy", extras_first=None, clock=None, confidences=None):
    """Drive a session from an answer oracle; unknown where no answer exists."""
    kwargs = {"clock": clock} if clock else {}
    session = start_session(tree, mode, **kwargs)
    extras = dict(extras_first or {})
    confidences = confidences or {}
    while session.status == ACTIVE:
        step = next_question(session)
        if isinstance(step, Classification):
            break
        answer = answers.get(step.attribute, MISSING)
        if is_missing(answer):
            submit_answer(session, step.attribute, unknown=True, extras=extras or None)
        else:
            submit_answer(
                session,
                step.attribute,
                answer,
                confidence=confidences.get(step.attribute, 1.0),
                extras=extras or None,
            )
        extras = {}
    return session


def random_small_dataset(rng: random.Random):
    """A tiny random dataset plus its oracle-side row representation.

    Up to 4 attributes (categorical and numeric, with missing values) and 8
    examples over 2-3 classes; mirrors the shapes the gain oracle understands.
    """
    n_attrs = rng.randint(1, 4)
    schema = []
    kinds = {}
    for i in range(n_attrs):
        name = f"a{i}"
        if rng.random() < 0.5:
            values = tuple(f"v{j}" for j in range(rng.randint(2, 3)))
            schema.append(AttributeSchema(name, CATEGORICAL, values, None, f"{name}?"))
            kinds[name] = "categorical"
        else:
            schema.append(AttributeSchema(name, NUMERIC, (), None, f"{name}?"))
            kinds[name] = "numeric"
    classes = tuple(f"c{j}" for j in range(rng.randint(2, 3)))
    examples = []
    rows = []
    for _ in range(rng.randint(1, 8)):
        values = {}
        row = {}
        for attr in schema:
            if rng.random() < 0.15:
                values[attr.name] = MISSING
                row[attr.name] = None
            elif attr.kind == CATEGORICAL:
                v = rng.choice(attr.values)
                values[attr.name] = v
                row[attr.name] = v
            else:
                v = float(rng.randint(0, 5))
                values[attr.name] = v
                row[attr.name] = v
        label = rng.choice(classes)
        examples.append(Example(values=values, label=label))
        row["label"] = label
        rows.append(row)
    dataset = Dataset(schema=tuple(schema), classes=classes, examples=tuple(examples))
    return dataset, rows, kinds
