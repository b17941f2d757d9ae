"""The human-in-the-loop refinement cycle, end to end on disk.

Starts from the original three-row credit-approvals table, denies an
applicant whose answers duplicate the table's denial row, lets the operator
correct that outcome twice, retrains, and replays the identical dialog to
show the decision flip — with satisfaction scores and the stored audit trail.
Run:  python3 demos/04_supervisor_loop.py
"""

import tempfile

from dialogtree import (
    AttributeSchema,
    CATEGORICAL,
    Classification,
    InductionConfig,
    NUMERIC,
    SchemaConfig,
    Store,
    induce_tree,
    load_dataset,
    next_question,
    record_satisfaction,
    retrain_with_feedback,
    start_session,
    submit_answer,
)

CSV = """Employment,Years,Savings,Bankruptcy,Credit
no,10,100000,yes,yes
no,?,5000,yes,no
yes,1,2000,no,yes
"""

SCHEMA = SchemaConfig(
    attributes=(
        AttributeSchema("Employment", CATEGORICAL, ("yes", "no"), None, "Are you employed?"),
        AttributeSchema("Years", NUMERIC, (), "years", "How many years have you lived at your current address?"),
        AttributeSchema("Savings", NUMERIC, (), "USD", "How much do you have in savings?"),
        AttributeSchema("Bankruptcy", CATEGORICAL, ("yes", "no"), None, "Did you ever declare bankruptcy?"),
    ),
    label_column="Credit",
    classes=("no", "yes"),
)

# The applicant mirrors the table's denial row: bankruptcy yes, 5000 saved,
# volunteers being unemployed, cannot say how long at the current address.
ANSWERS = {"Bankruptcy": "yes", "Savings": 5000.0}
VOLUNTEERED = {"Employment": "no"}


def run_dialog(tree):
    session = start_session(tree, "greedy")
    extras = dict(VOLUNTEERED)
    while session.status == "active":
        step = next_question(session)
        if isinstance(step, Classification):
            break
        value = ANSWERS.get(step.attribute)
        if value is None:
            submit_answer(session, step.attribute, unknown=True, extras=extras or None)
        else:
            submit_answer(session, step.attribute, value, extras=extras or None)
        extras = {}
    return session


def main():
    workdir = tempfile.mkdtemp(prefix="dialogtree-demo-")
    store = Store(workdir)
    dataset = load_dataset(CSV, SCHEMA)
    tree = induce_tree(dataset)
    store.save_dataset("train", dataset, "Credit")
    store.save_tree(tree)
    print(f"store: {workdir}")
    print(f"tree v{tree.version} trained on the original {len(dataset.examples)}-row table\n")

    print("two identical applications come in; both are denied:")
    session_ids = []
    for i in (1, 2):
        session = run_dialog(tree)
        store.append_session_log(session)
        record_satisfaction(store, session.id, 2)  # denied people are not thrilled
        label, p = session.result
        print(f"  dialog {i}: {label} (p={p:.3f}, {session.system_question_count()} questions)")
        session_ids.append(session.id)

    print("\nthe supervisor reviews both transcripts and corrects them to 'yes':")
    for sid in session_ids:
        record = store.record_verification(sid, "supervisor-7", "yes")
        print(f"  recorded {record.original_label} -> {record.corrected_label} for {sid[:8]}…")

    pending = store.pending_verifications()
    cases = {sid: store.session_observed_values(sid) for sid in session_ids}
    new_tree = retrain_with_feedback(
        dataset, pending, InductionConfig(), cases=cases, previous_version=tree.version
    )
    store.save_tree(new_tree)
    applied = store.mark_verifications_applied(new_tree.version)
    print(f"\nretrained: tree v{new_tree.version}, {applied} verifications folded in")
    print("(the corrected dialogs now outvote the original denial row 2:1 at its leaf)")

    replay = run_dialog(store.load_tree(new_tree.version))
    store.append_session_log(replay)
    record_satisfaction(store, replay.id, 5)
    label, p = replay.result
    print(f"the identical dialog now ends: {label} (p={p:.3f})\n")

    print("what the store remembers:")
    for summary in store.list_sessions():
        print(
            f"  session {summary.id[:8]}… v{summary.tree_version} "
            f"-> {summary.result[0]} ({summary.questions} questions)"
        )
    print(f"  satisfaction mean: {store.satisfaction_mean():.2f}")
    print(f"  tree versions on disk: {store.tree_versions()}")


if __name__ == "__main__":
    main()
