"""Synthetic credit-screening data and batch dialog simulation.

The generator produces a 26-attribute credit dataset whose labels follow a
hidden rule over three attributes (bankruptcy, employment, savings); the
other attributes are label-independent noise.  The simulator replays seeded
user models against every dialog manager and aggregates turn counts and
accuracy into a reproducible report.
"""

from __future__ import annotations

import math
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .baselines import FINITE_STATE, FRAME, BaselinePolicy, run_baseline
from .data import (
    CATEGORICAL,
    NUMERIC,
    AttributeSchema,
    AttributeValue,
    Dataset,
    Example,
    MISSING,
    is_missing,
)
from .dialog import ACTIVE, Classification, next_question, start_session, submit_answer
from .tree import DecisionTree, InductionConfig, induce_tree, prune_tree

TREE_GREEDY = "tree-greedy"
TREE_BELIEF = "tree-belief"
ALL_MANAGERS = (FINITE_STATE, FRAME, TREE_BELIEF, TREE_GREEDY)

GRANT = "yes"
DENY = "no"


def _yes_no(name: str, question: str) -> AttributeSchema:
    return AttributeSchema(name=name, kind=CATEGORICAL, values=("yes", "no"), question_text=question)


def _numeric(name: str, question: str, unit: Optional[str] = None) -> AttributeSchema:
    return AttributeSchema(name=name, kind=NUMERIC, unit=unit, question_text=question)


def credit_schema() -> tuple[AttributeSchema, ...]:
    """The 26-attribute credit screening schema."""
    return (
        _yes_no("Employment", "Are you employed?"),
        _numeric("Years", "How many years have you lived at your current address?", "years"),
        _numeric("Savings", "How much do you have in savings?", "USD"),
        _yes_no("Bankruptcy", "Did you ever declare bankruptcy?"),
        _numeric("Salary", "What is your current salary?", "USD"),
        _numeric("Age", "What is your age?", "years"),
        _yes_no("DefaultedLoan", "Have you ever defaulted on a loan?"),
        _numeric("OtherCreditCards", "How many other credit cards do you have?"),
        _yes_no("SavingsAccount", "Do you have a savings account?"),
        _yes_no("HomeOwner", "Do you own your home?"),
        _yes_no("CarOwner", "Do you own a car?"),
        AttributeSchema(
            name="MaritalStatus",
            kind=CATEGORICAL,
            values=("single", "married", "divorced", "widowed"),
            question_text="What is your marital status?",
        ),
        _numeric("Dependents", "How many dependents do you have?"),
        _numeric("MonthsAtJob", "How many months have you been at your current job?", "months"),
        AttributeSchema(
            name="Education",
            kind=CATEGORICAL,
            values=("none", "highschool", "college", "graduate"),
            question_text="What is your highest education level?",
        ),
        _yes_no("PhoneService", "Do you have phone service in your name?"),
        _yes_no("CheckingAccount", "Do you have a checking account?"),
        _numeric("MonthlyRent", "How much is your monthly rent or mortgage payment?", "USD"),
        _numeric("ExistingLoans", "How many loans are you currently repaying?"),
        _numeric("CreditInquiries", "How many credit inquiries were made about you this year?"),
        AttributeSchema(
            name="Region",
            kind=CATEGORICAL,
            values=("north", "south", "east", "west"),
            question_text="Which region do you live in?",
        ),
        AttributeSchema(
            name="EmployerType",
            kind=CATEGORICAL,
            values=("private", "public", "self", "none"),
            question_text="What type of employer do you work for?",
        ),
        _yes_no("PriorCustomer", "Have you banked with us before?"),
        _yes_no("Cosigner", "Do you have a cosigner?"),
        _numeric("MonthlyExpenses", "How much are your monthly expenses?", "USD"),
        _yes_no("InvestmentAccount", "Do you have an investment account?"),
    )


def credit_ground_truth(values: Mapping[str, AttributeValue]) -> str:
    """The hidden labeling rule; documented so experiments are reproducible.

    Grant iff: past bankruptcy needs savings >= 50000; a clean record needs
    savings >= 1000 when employed, or savings >= 20000 otherwise.
    """
    savings = values["Savings"]
    if is_missing(savings):
        return DENY
    if values["Bankruptcy"] == "yes":
        return GRANT if savings >= 50000 else DENY
    if values["Employment"] == "yes":
        return GRANT if savings >= 1000 else DENY
    return GRANT if savings >= 20000 else DENY


# The three rows printed in the source dataset table: Employment, Years,
# Savings, Bankruptcy -> label.  Row 2's Years is unknown.
FIGURE1_ROWS: tuple[tuple[AttributeValue, AttributeValue, AttributeValue, str, str], ...] = (
    ("no", 10.0, 100000.0, "yes", GRANT),
    ("no", MISSING, 5000.0, "yes", DENY),
    ("yes", 1.0, 2000.0, "no", GRANT),
)


def _figure1_example(schema: Sequence[AttributeSchema], row) -> Example:
    employment, years, savings, bankruptcy, label = row
    anchors = {"Employment": employment, "Years": years, "Savings": savings, "Bankruptcy": bankruptcy}
    values: dict[str, AttributeValue] = {}
    for attr in schema:
        if attr.name in anchors:
            values[attr.name] = anchors[attr.name]
        elif attr.kind == CATEGORICAL:
            values[attr.name] = attr.values[0]
        else:
            values[attr.name] = 1.0
    return Example(values=values, label=label)


def _log_uniform(rng: random.Random, low: float, high: float) -> float:
    return math.exp(rng.uniform(math.log(low), math.log(high)))


def _sample_row(rng: random.Random) -> dict[str, AttributeValue]:
    return {
        "Employment": "yes" if rng.random() < 0.62 else "no",
        "Years": float(rng.randint(0, 40)),
        "Savings": round(_log_uniform(rng, 200, 200000) / 100) * 100.0,
        "Bankruptcy": "yes" if rng.random() < 0.25 else "no",
        "Salary": round(_log_uniform(rng, 15000, 250000) / 500) * 500.0,
        "Age": float(rng.randint(18, 80)),
        "DefaultedLoan": "yes" if rng.random() < 0.18 else "no",
        "OtherCreditCards": float(rng.randint(0, 8)),
        "SavingsAccount": "yes" if rng.random() < 0.7 else "no",
        "HomeOwner": "yes" if rng.random() < 0.45 else "no",
        "CarOwner": "yes" if rng.random() < 0.7 else "no",
        "MaritalStatus": rng.choice(("single", "married", "divorced", "widowed")),
        "Dependents": float(rng.randint(0, 5)),
        "MonthsAtJob": float(rng.randint(0, 240)),
        "Education": rng.choice(("none", "highschool", "college", "graduate")),
        "PhoneService": "yes" if rng.random() < 0.9 else "no",
        "CheckingAccount": "yes" if rng.random() < 0.85 else "no",
        "MonthlyRent": round(rng.uniform(300, 4000) / 10) * 10.0,
        "ExistingLoans": float(rng.randint(0, 4)),
        "CreditInquiries": float(rng.randint(0, 10)),
        "Region": rng.choice(("north", "south", "east", "west")),
        "EmployerType": rng.choice(("private", "public", "self", "none")),
        "PriorCustomer": "yes" if rng.random() < 0.3 else "no",
        "Cosigner": "yes" if rng.random() < 0.15 else "no",
        "MonthlyExpenses": round(rng.uniform(500, 6000) / 10) * 10.0,
        "InvestmentAccount": "yes" if rng.random() < 0.25 else "no",
    }


def generate_credit_dataset(n: int, seed: int, label_noise: float = 0.0) -> Dataset:
    """A deterministic synthetic credit dataset of n examples.

    The first three examples are always the anchor rows from the source
    dataset table (seed-independent); the rest are seeded samples labeled by
    :func:`credit_ground_truth`, with labels flipped at rate `label_noise`.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 <= label_noise <= 1.0:
        raise ValueError("label_noise must be in [0, 1]")
    schema = credit_schema()
    examples = [_figure1_example(schema, row) for row in FIGURE1_ROWS[: min(n, 3)]]
    rng = random.Random(f"credit:{seed}")
    for _ in range(n - len(examples)):
        values = _sample_row(rng)
        label = credit_ground_truth(values)
        # the flip draw is consumed unconditionally so the value stream is
        # identical across noise settings
        if rng.random() < label_noise:
            label = GRANT if label == DENY else DENY
        examples.append(Example(values=values, label=label))
    return Dataset(schema=schema, classes=(DENY, GRANT), examples=tuple(examples))


# ---------------------------------------------------------------------------
# user models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UserModel:
    """A simulated user built around one held-out case.

    The user knows the case's values, cannot answer a seeded fraction of
    questions (missing_rate) and volunteers a seeded fraction of what they
    know (volunteer_rate).
    """

    answer_source: Example
    missing_rate: float
    volunteer_rate: float
    rng_seed: int

    def __post_init__(self):
        if not 0.0 <= self.missing_rate <= 1.0:
            raise ValueError("missing_rate must be in [0, 1]")
        if not 0.0 <= self.volunteer_rate <= 1.0:
            raise ValueError("volunteer_rate must be in [0, 1]")

    def realize(
        self, schema: Sequence[AttributeSchema]
    ) -> tuple[dict[str, AttributeValue], dict[str, AttributeValue]]:
        """Draw (answer oracle, volunteered values) for this user."""
        rng = random.Random(self.rng_seed)
        answers: dict[str, AttributeValue] = {}
        volunteered: dict[str, AttributeValue] = {}
        for attr in schema:
            cannot_answer = rng.random() < self.missing_rate
            volunteers = rng.random() < self.volunteer_rate
            value = self.answer_source.values.get(attr.name, MISSING)
            if is_missing(value) or cannot_answer:
                answers[attr.name] = MISSING
                continue
            answers[attr.name] = value
            if volunteers:
                volunteered[attr.name] = value
        return answers, volunteered


# ---------------------------------------------------------------------------
# managers
# ---------------------------------------------------------------------------

def run_tree_dialog(
    tree: DecisionTree,
    mode: str,
    answers: Mapping[str, AttributeValue],
    volunteered: Optional[Mapping[str, AttributeValue]] = None,
) -> tuple[str, int, bool]:
    """Drive one tree-managed session from an answer oracle.

    Volunteered values ride along with the first answer (the mixed-initiative
    path).  Returns (label, system-question count, novel flag).
    """
    session = start_session(tree, mode)
    extras = dict(volunteered or {})
    while session.status == ACTIVE:
        step = next_question(session)
        if isinstance(step, Classification):
            break
        answer = answers.get(step.attribute, MISSING)
        if is_missing(answer):
            submit_answer(session, step.attribute, unknown=True, extras=extras or None)
        else:
            submit_answer(session, step.attribute, answer, extras=extras or None)
        extras = {}
    label, _probability = session.result
    return label, session.system_question_count(), session.novel


def _run_manager(
    manager: str,
    tree: DecisionTree,
    answers: Mapping[str, AttributeValue],
    volunteered: Mapping[str, AttributeValue],
) -> tuple[str, int]:
    if manager in (TREE_GREEDY, TREE_BELIEF):
        mode = "greedy" if manager == TREE_GREEDY else "belief"
        label, questions, _novel = run_tree_dialog(tree, mode, answers, volunteered)
        return label, questions
    policy = BaselinePolicy(
        kind=manager,
        question_order=tuple(a.name for a in tree.schema),
        classifier=tree,
    )
    return run_baseline(policy, answers, volunteered)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManagerStats:
    manager: str
    sessions: int
    mean_questions: float
    std_questions: float
    accuracy: float


@dataclass(frozen=True)
class SimulationReport:
    managers: tuple[ManagerStats, ...]
    runs: int
    seed: int
    missing_rate: float
    volunteer_rate: float
    train_fraction: float
    tree_version: int
    dataset_fingerprint: str


def simulate(
    managers: Sequence[str],
    dataset: Dataset,
    runs: int,
    *,
    missing_rate: float = 0.0,
    volunteer_rate: float = 0.0,
    seed: int = 0,
    train_fraction: float = 0.7,
    config: InductionConfig = InductionConfig(),
    parallel: bool = False,
) -> SimulationReport:
    """Train once, then measure every manager on the same seeded user sequence.

    The dataset splits deterministically into train/held-out parts; each run
    samples a held-out case and realizes a user model from the run's own RNG
    stream, so results do not depend on execution order.
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    for manager in managers:
        if manager not in ALL_MANAGERS:
            raise ValueError(f"unknown manager {manager!r}")
    order = list(dataset.examples)
    random.Random(f"split:{seed}").shuffle(order)
    cut = max(1, int(round(len(order) * train_fraction)))
    train, heldout = order[:cut], order[cut:]
    if not heldout:
        raise ValueError("dataset too small to hold out evaluation cases")
    train_set = Dataset(schema=dataset.schema, classes=dataset.classes, examples=tuple(train))
    tree = induce_tree(train_set, config)
    if config.pruning == "reduced_error":
        tree = prune_tree(tree, train_set, config)

    def one_run(index: int) -> dict[str, tuple[str, int, str]]:
        case_rng = random.Random(f"sim:{seed}:{index}")
        example = heldout[case_rng.randrange(len(heldout))]
        user = UserModel(
            answer_source=example,
            missing_rate=missing_rate,
            volunteer_rate=volunteer_rate,
            rng_seed=case_rng.getrandbits(63),
        )
        answers, volunteered = user.realize(dataset.schema)
        outcome: dict[str, tuple[str, int, str]] = {}
        for manager in managers:
            label, questions = _run_manager(manager, tree, answers, volunteered)
            outcome[manager] = (label, questions, example.label)
        return outcome

    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(one_run, range(runs)))
    else:
        results = [one_run(i) for i in range(runs)]

    stats = []
    for manager in sorted(managers):
        questions = [r[manager][1] for r in results]
        hits = sum(1 for r in results if r[manager][0] == r[manager][2])
        stats.append(
            ManagerStats(
                manager=manager,
                sessions=runs,
                mean_questions=statistics.fmean(questions),
                std_questions=statistics.pstdev(questions),
                accuracy=hits / runs,
            )
        )
    return SimulationReport(
        managers=tuple(stats),
        runs=runs,
        seed=seed,
        missing_rate=missing_rate,
        volunteer_rate=volunteer_rate,
        train_fraction=train_fraction,
        tree_version=tree.version,
        dataset_fingerprint=dataset.fingerprint(),
    )


def report_to_json(report: SimulationReport) -> str:
    """The report as a stable structured document (sorted keys, 2-space indent)."""
    import json

    doc = {
        "runs": report.runs,
        "seed": report.seed,
        "missing_rate": report.missing_rate,
        "volunteer_rate": report.volunteer_rate,
        "train_fraction": report.train_fraction,
        "tree_version": report.tree_version,
        "dataset_fingerprint": report.dataset_fingerprint,
        "managers": [
            {
                "manager": m.manager,
                "sessions": m.sessions,
                "mean_questions": m.mean_questions,
                "std_questions": m.std_questions,
                "accuracy": m.accuracy,
            }
            for m in report.managers
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def report_to_csv(report: SimulationReport) -> str:
    """Flat summary table, one row per manager, suitable for plotting."""
    lines = ["manager,sessions,mean_questions,std_questions,accuracy"]
    for m in report.managers:
        lines.append(
            f"{m.manager},{m.sessions},{m.mean_questions!r},{m.std_questions!r},{m.accuracy!r}"
        )
    return "\n".join(lines) + "\n"


def record_satisfaction(store, session_id: str, score: int):
    """Persist a 1-5 post-dialog satisfaction score (latest per session wins)."""
    return store.record_satisfaction(session_id, score)
