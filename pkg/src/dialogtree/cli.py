"""Command-line entry points: train, ask, simulate, retrain, serve.

Thin adapters only — all behavior lives in the library modules.  Commands
exit 0 on success and 1 with a one-line error otherwise; `--seed` makes
every command deterministic.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from .data import NUMERIC, Dataset, load_dataset
from .dialog import (
    ACTIVE,
    Classification,
    classify_session,
    next_question,
    start_session,
    submit_answer,
)
from .errors import DialogTreeError
from .evaluation import ALL_MANAGERS, generate_credit_dataset, report_to_csv, simulate
from .persistence import Store, schema_config_from_json
from .service import ServiceConfig, create_app
from .tree import InductionConfig, induce_tree, prune_tree, retrain_with_feedback, training_accuracy


def _induction_config(args) -> InductionConfig:
    if args.prune:
        return InductionConfig(
            min_leaf_examples=args.min_leaf,
            max_depth=args.max_depth,
            pruning="reduced_error",
            holdout_fraction=args.holdout,
            rng_seed=args.seed,
        )
    return InductionConfig(
        min_leaf_examples=args.min_leaf, max_depth=args.max_depth, rng_seed=args.seed
    )


def _load_training_data(args) -> tuple[Dataset, str]:
    if args.data:
        if not args.schema:
            raise DialogTreeError("--data needs --schema (the schema config document)")
        config = schema_config_from_json(Path(args.schema).read_text(encoding="utf-8"))
        dataset = load_dataset(Path(args.data).read_text(encoding="utf-8"), config)
        return dataset, config.label_column
    if args.synthetic:
        return generate_credit_dataset(args.synthetic, args.seed), "Credit"
    raise DialogTreeError("provide either --data <csv> --schema <config> or --synthetic <n>")


def cmd_train(args) -> int:
    dataset, label_column = _load_training_data(args)
    config = _induction_config(args)
    tree = induce_tree(dataset, config)
    if config.pruning == "reduced_error":
        tree = prune_tree(tree, dataset, config)
    store = Store(args.data_dir)
    store.save_dataset("train", dataset, label_column)
    store.save_tree(tree)
    accuracy = training_accuracy(tree, dataset)
    print(
        f"tree v{tree.version}: {tree.node_count()} nodes, depth {tree.height()}, "
        f"training accuracy {accuracy:.4f}"
    )
    return 0


def _parse_answer_line(line: str, schema):
    """Split "k=v,k2=v2 answer" into (extras dict, answer text)."""
    line = line.strip()
    extras_text = None
    answer = line
    tokens = line.split()
    if tokens and "=" in tokens[0]:
        parts = line.split(None, 1)
        extras_text = parts[0]
        answer = parts[1].strip() if len(parts) > 1 else ""
    extras = {}
    if extras_text:
        for pair in extras_text.split(","):
            name, _, raw = pair.partition("=")
            if not name or not raw:
                raise ValueError(f"bad volunteered pair {pair!r} (want name=value)")
            attr = next((a for a in schema if a.name == name), None)
            if attr is None:
                raise ValueError(f"unknown attribute {name!r}")
            extras[name] = float(raw) if attr.kind == NUMERIC else raw
    return extras, answer


def cmd_ask(args) -> int:
    store = Store(args.data_dir)
    version = args.tree if args.tree is not None else store.latest_tree_version()
    if version is None:
        raise DialogTreeError("no trained tree in the data directory; run `train` first")
    tree = store.load_tree(version)
    session = start_session(tree, args.mode, confirm_threshold=args.confirm_threshold)
    print(f"session {session.id} (tree v{tree.version}, {args.mode} mode)")
    while session.status == ACTIVE:
        step = next_question(session)
        if isinstance(step, Classification):
            break
        attr = tree.attribute(step.attribute)
        prompt = f"{step.text} "
        try:
            line = input(prompt)
        except EOFError:
            print()
            classify_session(session, force=True)
            break
        line = line.strip()
        if not line:
            continue
        if line == "?":
            submit_answer(session, step.attribute, unknown=True)
            continue
        try:
            extras, answer = _parse_answer_line(line, tree.schema)
        except ValueError as exc:
            print(f"  ! {exc}", file=sys.stderr)
            continue
        if not answer:
            print("  ! volunteered values noted; please also answer the question", file=sys.stderr)
            continue
        if answer == "?":
            submit_answer(session, step.attribute, unknown=True, extras=extras or None)
            continue
        try:
            value = float(answer) if attr.kind == NUMERIC else answer
        except ValueError:
            print(f"  ! {attr.name} expects a number", file=sys.stderr)
            continue
        try:
            submit_answer(session, step.attribute, value, extras=extras or None)
        except DialogTreeError as exc:
            print(f"  ! {exc}", file=sys.stderr)
    label, probability = session.result
    print(f"classification: {label} (probability {probability:.4f})")
    print(f"system questions: {session.system_question_count()}")
    print(f"novel case: {'yes' if session.novel else 'no'}")
    store.append_session_log(session)
    print(f"logged session {session.id}")
    return 0


def cmd_simulate(args) -> int:
    if args.data:
        dataset, _ = _load_training_data(args)
    else:
        dataset = generate_credit_dataset(args.synthetic, args.seed)
    managers = args.managers.split(",") if args.managers else list(ALL_MANAGERS)
    report = simulate(
        managers,
        dataset,
        args.runs,
        missing_rate=args.missing,
        volunteer_rate=args.volunteer,
        seed=args.seed,
        train_fraction=args.train_fraction,
    )
    sys.stdout.write(report_to_csv(report))
    return 0


def cmd_retrain(args) -> int:
    store = Store(args.data_dir)
    version = store.latest_tree_version()
    if version is None:
        raise DialogTreeError("no trained tree in the data directory; run `train` first")
    dataset = store.load_dataset("train")
    pending = store.pending_verifications()
    cases = {r.session_id: store.session_observed_values(r.session_id) for r in pending}
    config = _induction_config(args)
    tree = retrain_with_feedback(
        dataset, pending, config, cases=cases, previous_version=version
    )
    store.save_tree(tree)
    applied = store.mark_verifications_applied(tree.version)
    print(f"tree v{tree.version}: applied {applied} verifications")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        raise DialogTreeError(f"--addr must look like host:port, got {args.addr!r}")
    store = Store(args.data_dir)
    config = ServiceConfig(
        default_mode=args.mode, confirm_threshold=args.confirm_threshold
    )
    app = create_app(store, config, console_dir=args.console)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialogtree", description="decision-tree dialog manager"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_induction=True):
        p.add_argument("--data-dir", default="data", help="store directory (default: data)")
        p.add_argument("--seed", type=int, default=0, help="deterministic seed")
        if with_induction:
            p.add_argument("--prune", action="store_true", help="reduced-error pruning")
            p.add_argument("--holdout", type=float, default=0.2, help="pruning holdout fraction")
            p.add_argument("--min-leaf", type=int, default=1, help="minimum examples per node")
            p.add_argument("--max-depth", type=int, default=None, help="depth limit")

    p_train = sub.add_parser("train", help="induce a tree and initialize the store")
    p_train.add_argument("--data", help="training CSV")
    p_train.add_argument("--schema", help="schema config JSON")
    p_train.add_argument("--synthetic", type=int, help="use n synthetic credit cases instead")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_ask = sub.add_parser("ask", help="interactive terminal dialog")
    p_ask.add_argument("--tree", type=int, default=None, help="tree version (default: latest)")
    p_ask.add_argument("--mode", choices=["greedy", "belief"], default="greedy")
    p_ask.add_argument("--confirm-threshold", type=float, default=0.5)
    common(p_ask, with_induction=False)
    p_ask.set_defaults(func=cmd_ask)

    p_sim = sub.add_parser("simulate", help="batch-simulate all dialog managers")
    p_sim.add_argument("--data", help="dataset CSV")
    p_sim.add_argument("--schema", help="schema config JSON")
    p_sim.add_argument("--synthetic", type=int, default=500, help="synthetic dataset size")
    p_sim.add_argument("--runs", type=int, required=True)
    p_sim.add_argument("--missing", type=float, default=0.0, help="per-question unknown rate")
    p_sim.add_argument("--volunteer", type=float, default=0.0, help="per-slot volunteering rate")
    p_sim.add_argument("--managers", help="comma-separated subset of managers")
    p_sim.add_argument("--train-fraction", type=float, default=0.7)
    common(p_sim, with_induction=False)
    p_sim.set_defaults(func=cmd_simulate)

    p_re = sub.add_parser("retrain", help="apply pending verifications and bump the tree")
    common(p_re)
    p_re.set_defaults(func=cmd_retrain)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--addr", default="127.0.0.1:8000")
    p_serve.add_argument("--mode", choices=["greedy", "belief"], default="greedy")
    p_serve.add_argument("--confirm-threshold", type=float, default=0.5)
    p_serve.add_argument("--console", help="directory with the built operator console")
    common(p_serve, with_induction=False)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DialogTreeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
