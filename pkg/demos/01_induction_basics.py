"""Entropy, information gain, and growing the credit-screening tree.

Walks the three-row credit-approvals table from first principles: class
entropy, per-attribute gains, the greedy split choice, and the tree that
falls out.  Run:  python3 demos/01_induction_basics.py
"""

from dialogtree import (
    AttributeSchema,
    CATEGORICAL,
    ClassCounts,
    NUMERIC,
    SchemaConfig,
    best_split,
    candidate_thresholds,
    entropy,
    induce_tree,
    information_gain,
    load_dataset,
    training_accuracy,
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


def render(node, indent=0):
    pad = "    " * indent
    if node.is_leaf:
        print(f"{pad}-> {node.body.majority_class}  (counts {dict(node.counts.counts)})")
        return
    body = node.body
    print(f"{pad}[{body.attribute}]")
    for edge in sorted(body.children):
        p = node.edge_probability(edge)
        print(f"{pad}  {edge}  (p={p:.2f})")
        render(body.children[edge], indent + 1)


def main():
    dataset = load_dataset(CSV, SCHEMA)
    examples = list(dataset.examples)
    print(f"{len(examples)} training dialogs, classes {dataset.classes}\n")

    counts = ClassCounts.from_examples(examples)
    print(f"class counts: {dict(counts.counts)}")
    print(f"entropy: {entropy(counts):.6f} bits\n")

    print("information gain per attribute:")
    for attr in dataset.schema:
        if attr.kind == CATEGORICAL:
            gain = information_gain(examples, attr)
            print(f"  {attr.name:<12} {gain:.6f}")
        else:
            for t in candidate_thresholds(examples, attr):
                gain = information_gain(examples, attr, t)
                print(f"  {attr.name:<12} {gain:.6f}  (threshold {t})")

    choice = best_split(examples, list(dataset.schema))
    print(f"\ngreedy pick: {choice.attribute.name} (gain {choice.gain:.6f})")
    print("note: Employment ties Bankruptcy; the lexicographic rule keeps it deterministic\n")

    tree = induce_tree(dataset)
    print("induced tree:")
    render(tree.root)
    print(f"\nnodes: {tree.node_count()}, height: {tree.height()}, "
          f"training accuracy: {training_accuracy(tree, dataset):.2f}")


if __name__ == "__main__":
    main()
