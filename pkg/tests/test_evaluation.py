import pytest

from dialogtree.data import ClassCounts, is_missing
from dialogtree.evaluation import (
    ALL_MANAGERS,
    FIGURE1_ROWS,
    UserModel,
    credit_ground_truth,
    credit_schema,
    generate_credit_dataset,
    report_to_csv,
    report_to_json,
    simulate,
)


class TestGenerator:
    def test_schema_has_26_attributes_with_the_named_ones(self):
        schema = credit_schema()
        assert len(schema) == 26
        names = {a.name for a in schema}
        for required in (
            "Years",  # period lived at the current address
            "Salary",
            "SavingsAccount",
            "Age",
            "DefaultedLoan",
            "OtherCreditCards",
            "Bankruptcy",
        ):
            assert required in names
        assert all(a.question_text for a in schema)

    def test_n3_is_exactly_the_anchor_rows_for_any_seed(self):
        for seed in (0, 7, 12345):
            ds = generate_credit_dataset(3, seed)
            assert len(ds.examples) == 3
            for example, row in zip(ds.examples, FIGURE1_ROWS):
                employment, years, savings, bankruptcy, label = row
                assert example.values["Employment"] == employment
                assert example.values["Savings"] == savings
                assert example.values["Bankruptcy"] == bankruptcy
                if is_missing(years):
                    assert is_missing(example.values["Years"])
                else:
                    assert example.values["Years"] == years
                assert example.label == label
        assert generate_credit_dataset(3, 1) == generate_credit_dataset(3, 2)

    def test_anchor_labels_agree_with_the_hidden_rule(self):
        ds = generate_credit_dataset(3, 0)
        for example in ds.examples:
            assert credit_ground_truth(example.values) == example.label

    def test_determinism(self):
        assert generate_credit_dataset(200, 42) == generate_credit_dataset(200, 42)
        assert generate_credit_dataset(200, 42) != generate_credit_dataset(200, 43)

    def test_class_balance_contract(self):
        ds = generate_credit_dataset(1000, 42)
        proportions = ClassCounts.from_examples(ds.examples).proportions()
        assert 0.2 <= proportions["yes"] <= 0.8

    def test_label_noise_flips_sampled_labels_only(self):
        clean = generate_credit_dataset(300, 5)
        noisy = generate_credit_dataset(300, 5, label_noise=0.3)
        assert [e.values for e in clean.examples] == [e.values for e in noisy.examples]
        flips = sum(
            1 for a, b in zip(clean.examples, noisy.examples) if a.label != b.label
        )
        assert 40 <= flips <= 140
        for a, b in zip(clean.examples[:3], noisy.examples[:3]):
            assert a.label == b.label  # anchors stay verbatim


class TestUserModel:
    def test_rates_validated(self):
        ds = generate_credit_dataset(5, 0)
        with pytest.raises(ValueError):
            UserModel(ds.examples[0], -0.1, 0.0, 1)
        with pytest.raises(ValueError):
            UserModel(ds.examples[0], 0.0, 1.2, 1)

    def test_reproducible_draws(self):
        ds = generate_credit_dataset(5, 0)
        user = UserModel(ds.examples[3], 0.4, 0.3, rng_seed=99)
        assert user.realize(ds.schema) == user.realize(ds.schema)

    def test_volunteered_is_a_subset_of_known_answers(self):
        ds = generate_credit_dataset(20, 1)
        user = UserModel(ds.examples[5], 0.5, 0.8, rng_seed=7)
        answers, volunteered = user.realize(ds.schema)
        for name, value in volunteered.items():
            assert answers[name] == value
            assert not is_missing(value)


class TestSimulate:
    def test_turn_count_shape(self):
        ds = generate_credit_dataset(300, 7)
        report = simulate(list(ALL_MANAGERS), ds, 20, seed=7)
        by_name = {m.manager: m for m in report.managers}
        assert [m.manager for m in report.managers] == sorted(ALL_MANAGERS)
        assert by_name["finite_state"].mean_questions == 26.0
        assert by_name["frame"].mean_questions == 26.0  # nothing volunteered
        assert by_name["tree-greedy"].mean_questions < 26.0
        assert by_name["tree-greedy"].sessions == 20

    def test_frame_mean_is_26_minus_mean_volunteered(self):
        ds = generate_credit_dataset(300, 7)
        report = simulate(
            ["frame", "finite_state"], ds, 30, seed=11, volunteer_rate=0.25
        )
        by_name = {m.manager: m for m in report.managers}
        assert by_name["finite_state"].mean_questions == 26.0
        assert by_name["frame"].mean_questions < 26.0

        # reconstruct the volunteered counts from the same seeded user models
        import random

        order = list(ds.examples)
        random.Random("split:11").shuffle(order)
        heldout = order[int(round(len(order) * 0.7)):]
        total_volunteered = 0
        for i in range(30):
            case_rng = random.Random(f"sim:11:{i}")
            example = heldout[case_rng.randrange(len(heldout))]
            user = UserModel(example, 0.0, 0.25, rng_seed=case_rng.getrandbits(63))
            _, volunteered = user.realize(ds.schema)
            total_volunteered += len(volunteered)
        expected = 26.0 - total_volunteered / 30
        assert by_name["frame"].mean_questions == pytest.approx(expected, abs=1e-9)

    def test_missing_rate_one_still_completes(self):
        ds = generate_credit_dataset(300, 7)
        report = simulate(["tree-greedy"], ds, 10, seed=3, missing_rate=1.0)
        stats = report.managers[0]
        assert stats.sessions == 10
        from dialogtree.tree import induce_tree

        assert stats.mean_questions <= induce_tree(ds).height()

    def test_reports_reproducible_and_order_independent(self):
        ds = generate_credit_dataset(300, 7)
        kwargs = dict(missing_rate=0.2, volunteer_rate=0.1, seed=13)
        a = simulate(list(ALL_MANAGERS), ds, 15, **kwargs)
        b = simulate(list(ALL_MANAGERS), ds, 15, **kwargs)
        c = simulate(list(ALL_MANAGERS), ds, 15, parallel=True, **kwargs)
        assert report_to_json(a) == report_to_json(b) == report_to_json(c)

    def test_unknown_manager_rejected(self):
        ds = generate_credit_dataset(50, 0)
        with pytest.raises(ValueError):
            simulate(["psychic"], ds, 5, seed=0)
        with pytest.raises(ValueError):
            simulate(["tree-greedy"], ds, 0, seed=0)

    def test_csv_table_has_one_row_per_manager(self):
        ds = generate_credit_dataset(200, 7)
        report = simulate(list(ALL_MANAGERS), ds, 5, seed=2)
        table = report_to_csv(report)
        lines = table.strip().splitlines()
        assert lines[0] == "manager,sessions,mean_questions,std_questions,accuracy"
        assert len(lines) == 1 + len(ALL_MANAGERS)

    def test_information_monotonicity_at_population_level(self):
        ds = generate_credit_dataset(800, 19)
        full = simulate(["tree-greedy"], ds, 500, seed=19, missing_rate=0.0)
        half = simulate(["tree-greedy"], ds, 500, seed=19, missing_rate=0.5)
        assert full.managers[0].accuracy >= half.managers[0].accuracy


class TestSatisfaction:
    def test_store_roundtrip(self, tmp_path, fixed_clock, fig1_dataset, fig1_tree):
        from dialogtree.evaluation import record_satisfaction
        from dialogtree.persistence import Store
        from conftest import run_session

        store = Store(tmp_path, clock=fixed_clock)
        session = run_session(fig1_tree, {"Bankruptcy": "no"}, clock=fixed_clock)
        store.append_session_log(session)
        record_satisfaction(store, session.id, 5)
        assert store.satisfaction_mean() == 5.0
        record_satisfaction(store, session.id, 3)  # latest wins
        assert store.satisfaction_mean() == 3.0

    def test_score_out_of_range(self, tmp_path, fixed_clock, fig1_tree):
        from dialogtree.evaluation import record_satisfaction
        from dialogtree.persistence import Store
        from conftest import run_session

        store = Store(tmp_path, clock=fixed_clock)
        session = run_session(fig1_tree, {"Bankruptcy": "no"}, clock=fixed_clock)
        store.append_session_log(session)
        for score in (0, 6, 2.5, "five"):
            with pytest.raises(ValueError):
                record_satisfaction(store, session.id, score)

    def test_unknown_session(self, tmp_path, fixed_clock):
        from dialogtree.errors import NotFoundError
        from dialogtree.evaluation import record_satisfaction
        from dialogtree.persistence import Store

        store = Store(tmp_path, clock=fixed_clock)
        with pytest.raises(NotFoundError):
            record_satisfaction(store, "ghost", 4)
