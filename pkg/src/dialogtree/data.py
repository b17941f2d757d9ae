"""Labeled tabular datasets and the entropy / information-gain primitives.

A dataset is an ordered attribute schema, an ordered class set and a list of
examples.  Attribute values are plain Python values: ``str`` for categories,
``float`` for numerics and the :data:`MISSING` marker for absent answers.
Everything here is immutable after construction and safe to share.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, TextIO, Union

from .errors import DatasetFormatError, SchemaError, UnknownAttributeError

CATEGORICAL = "categorical"
NUMERIC = "numeric"

#: Cell token that parses to the missing marker.
MISSING_TOKEN = "?"

# Gains this close to zero count as "no informative split".
GAIN_EPSILON = 1e-12


class _Missing:
    """Unit marker for an absent attribute value (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self


MISSING = _Missing()

AttributeValue = Union[str, float, _Missing]


def is_missing(value: AttributeValue) -> bool:
    return value is MISSING


@dataclass(frozen=True)
class AttributeSchema:
    """One askable attribute: its kind, allowed values and question text."""

    name: str
    kind: str
    values: tuple[str, ...] = ()
    unit: Optional[str] = None
    question_text: str = ""

    def __post_init__(self):
        if not self.name:
            raise SchemaError("attribute name must be non-empty")
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise SchemaError(f"unknown attribute kind {self.kind!r} for {self.name!r}")
        if self.kind == CATEGORICAL:
            if not self.values:
                raise SchemaError(f"categorical attribute {self.name!r} needs at least one allowed value")
            if self.unit is not None:
                raise SchemaError(f"categorical attribute {self.name!r} cannot carry a unit")
            if MISSING_TOKEN in self.values:
                raise SchemaError(f"{MISSING_TOKEN!r} is reserved for missing values ({self.name!r})")
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"duplicate allowed values for {self.name!r}")
        else:
            if self.values:
                raise SchemaError(f"numeric attribute {self.name!r} cannot enumerate values")
        if not self.question_text:
            raise SchemaError(f"attribute {self.name!r} needs a question text")

    def validate_value(self, value: AttributeValue) -> AttributeValue:
        """Check (and normalize) a known value against this schema entry."""
        if is_missing(value):
            return value
        if self.kind == CATEGORICAL:
            if not isinstance(value, str) or value not in self.values:
                raise SchemaError(
                    f"{value!r} is not an allowed value for {self.name!r} (allowed: {', '.join(self.values)})"
                )
            return value
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{value!r} is not a number for numeric attribute {self.name!r}")
        return float(value)


@dataclass(frozen=True)
class Example:
    """One labeled case: a full attribute-value mapping plus a class label."""

    values: Mapping[str, AttributeValue]
    label: str


@dataclass(frozen=True)
class SchemaConfig:
    """Declares how to read a tabular source: attributes, label column, classes."""

    attributes: tuple[AttributeSchema, ...]
    label_column: str = "label"
    classes: tuple[str, ...] = ()

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            dupe = next(n for n in names if names.count(n) > 1)
            raise DatasetFormatError(f"duplicate attribute name {dupe!r} in schema", row=0)
        if self.label_column in names:
            raise SchemaError(f"label column {self.label_column!r} collides with an attribute")


@dataclass(frozen=True)
class Dataset:
    """Immutable training data: schema + class set + examples."""

    schema: tuple[AttributeSchema, ...]
    classes: tuple[str, ...]
    examples: tuple[Example, ...]

    def __post_init__(self):
        if not self.classes:
            raise SchemaError("a dataset needs at least one class label")
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute names in dataset schema")
        by_name = {a.name: a for a in self.schema}
        class_set = set(self.classes)
        for i, example in enumerate(self.examples):
            if example.label not in class_set:
                raise SchemaError(f"example {i} has unknown label {example.label!r}")
            if set(example.values) != set(by_name):
                raise SchemaError(f"example {i} does not cover the schema attributes exactly")
            for name, value in example.values.items():
                by_name[name].validate_value(value)

    def attribute(self, name: str) -> AttributeSchema:
        for attr in self.schema:
            if attr.name == name:
                return attr
        raise UnknownAttributeError(f"unknown attribute {name!r}")

    def with_examples(self, extra: Iterable[Example]) -> "Dataset":
        """A new dataset with `extra` appended (used by feedback retraining)."""
        return Dataset(self.schema, self.classes, self.examples + tuple(extra))

    def fingerprint(self) -> str:
        """Stable content digest over schema, classes and rows."""
        doc = {
            "classes": list(self.classes),
            "schema": [schema_to_dict(a) for a in self.schema],
            "rows": [
                [e.label] + [value_to_json(e.values[a.name]) for a in self.schema]
                for e in self.examples
            ],
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ClassCounts:
    """Per-class example counts with their total."""

    counts: Mapping[str, int]
    total: int

    def __post_init__(self):
        if any(v < 0 for v in self.counts.values()):
            raise ValueError("class counts must be non-negative")
        if self.total != sum(self.counts.values()):
            raise ValueError("total must equal the sum of the counts")

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "ClassCounts":
        counts: dict[str, int] = {}
        total = 0
        for label in labels:
            counts[label] = counts.get(label, 0) + 1
            total += 1
        return cls(counts, total)

    @classmethod
    def from_examples(cls, examples: Iterable[Example]) -> "ClassCounts":
        return cls.from_labels(e.label for e in examples)

    def majority_class(self) -> str:
        """The label with the maximal count; ties go to the smallest label."""
        if not self.counts:
            raise ValueError("no classes counted")
        return min(self.counts, key=lambda c: (-self.counts[c], c))

    def proportions(self) -> dict[str, float]:
        if self.total == 0:
            return {c: 0.0 for c in self.counts}
        return {c: k / self.total for c, k in self.counts.items()}


# ---------------------------------------------------------------------------
# schema / value serialization helpers (file formats are pinned in persistence)
# ---------------------------------------------------------------------------

def value_to_json(value: AttributeValue):
    if is_missing(value):
        return None
    return value


def value_from_json(raw) -> AttributeValue:
    if raw is None:
        return MISSING
    if isinstance(raw, bool):
        raise SchemaError("boolean is not a valid attribute value")
    if isinstance(raw, (int, float)):
        return float(raw)
    return raw


def schema_to_dict(attr: AttributeSchema) -> dict:
    doc = {"name": attr.name, "kind": attr.kind, "question": attr.question_text}
    if attr.kind == CATEGORICAL:
        doc["values"] = list(attr.values)
    if attr.unit is not None:
        doc["unit"] = attr.unit
    return doc


def schema_from_dict(doc: Mapping) -> AttributeSchema:
    return AttributeSchema(
        name=doc["name"],
        kind=doc["kind"],
        values=tuple(doc.get("values", ())),
        unit=doc.get("unit"),
        question_text=doc["question"],
    )


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def load_dataset(source: Union[str, TextIO], config: SchemaConfig) -> Dataset:
    """Parse delimiter-separated text with a header row into a Dataset.

    The header must name every schema attribute plus the label column (any
    order).  ``?`` cells parse to the missing marker, numeric cells to floats.
    Malformed rows, unknown categories and non-numeric text raise
    :class:`DatasetFormatError` with row/column positions (header = row 1).
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetFormatError("source has no header row", row=1)
    header = [h.strip() for h in header]
    seen: set[str] = set()
    for col in header:
        if col in seen:
            raise DatasetFormatError(f"duplicate column name {col!r}", row=1, column=col)
        seen.add(col)

    by_name = {a.name: a for a in config.attributes}
    expected = set(by_name) | {config.label_column}
    if set(header) != expected:
        missing_cols = sorted(expected - set(header))
        extra_cols = sorted(set(header) - expected)
        parts = []
        if missing_cols:
            parts.append(f"missing columns: {', '.join(missing_cols)}")
        if extra_cols:
            parts.append(f"unexpected columns: {', '.join(extra_cols)}")
        raise DatasetFormatError("header does not match schema; " + "; ".join(parts), row=1)

    label_idx = header.index(config.label_column)
    examples: list[Example] = []
    labels_seen: list[str] = []
    for row_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # ignore blank lines
        if len(row) != len(header):
            raise DatasetFormatError(
                f"expected {len(header)} cells, found {len(row)}", row=row_no
            )
        values: dict[str, AttributeValue] = {}
        for idx, cell in enumerate(row):
            cell = cell.strip()
            if idx == label_idx:
                continue
            attr = by_name[header[idx]]
            if cell == MISSING_TOKEN:
                values[attr.name] = MISSING
            elif attr.kind == CATEGORICAL:
                if cell not in attr.values:
                    raise DatasetFormatError(
                        f"value {cell!r} is not allowed for {attr.name!r}",
                        row=row_no,
                        column=attr.name,
                    )
                values[attr.name] = cell
            else:
                try:
                    values[attr.name] = float(cell.replace(",", ""))
                except ValueError:
                    raise DatasetFormatError(
                        f"non-numeric value {cell!r} for {attr.name!r}",
                        row=row_no,
                        column=attr.name,
                    )
        label = row[label_idx].strip()
        labels_seen.append(label)
        examples.append(Example(values=values, label=label))

    classes = config.classes
    if not classes:
        classes = tuple(sorted(set(labels_seen)))
    if not classes:
        raise DatasetFormatError("no classes declared and no data rows to infer them from")
    for row_no, label in enumerate(labels_seen, start=2):
        if label not in classes:
            raise DatasetFormatError(
                f"label {label!r} is not in the class set", row=row_no, column=config.label_column
            )
    return Dataset(schema=config.attributes, classes=classes, examples=tuple(examples))


# ---------------------------------------------------------------------------
# entropy and information gain
# ---------------------------------------------------------------------------

def entropy(counts: ClassCounts) -> float:
    """Impurity of a class distribution in bits; Entropy(empty) = 0."""
    if counts.total == 0:
        return 0.0
    h = 0.0
    for label in sorted(counts.counts):
        k = counts.counts[label]
        if k:
            p = k / counts.total
            h -= p * math.log2(p)
    return h


def partition_categorical(
    view: Sequence[Example], attribute: str
) -> tuple[dict[str, list[Example]], list[Example]]:
    """Split a view by a categorical attribute's values; missings come back separately."""
    parts: dict[str, list[Example]] = {}
    missing: list[Example] = []
    for example in view:
        value = example.values[attribute]
        if is_missing(value):
            missing.append(example)
        else:
            parts.setdefault(value, []).append(example)
    return parts, missing


def partition_numeric(
    view: Sequence[Example], attribute: str, threshold: float
) -> tuple[list[Example], list[Example], list[Example]]:
    """Split a view at ``<= threshold`` / ``> threshold``; missings come back separately."""
    low: list[Example] = []
    high: list[Example] = []
    missing: list[Example] = []
    for example in view:
        value = example.values[attribute]
        if is_missing(value):
            missing.append(example)
        elif value <= threshold:
            low.append(example)
        else:
            high.append(example)
    return low, high, missing


def information_gain(
    view: Sequence[Example],
    attribute: AttributeSchema,
    threshold: Optional[float] = None,
) -> float:
    """Expected entropy reduction of splitting `view` on `attribute`, in bits.

    Categorical splits partition by value with a dedicated branch for missing
    values.  Numeric splits compare against `threshold` over the examples whose
    value is known; missing-valued examples do not take part in the numeric
    gain.
    """
    if not view:
        raise ValueError("information gain needs a non-empty view")
    if attribute.kind == CATEGORICAL:
        if threshold is not None:
            raise SchemaError(f"threshold supplied for categorical attribute {attribute.name!r}")
        parts, missing = partition_categorical(view, attribute.name)
        base = entropy(ClassCounts.from_examples(view))
        total = len(view)
        weighted = 0.0
        for value in sorted(parts):
            subset = parts[value]
            weighted += len(subset) / total * entropy(ClassCounts.from_examples(subset))
        if missing:
            weighted += len(missing) / total * entropy(ClassCounts.from_examples(missing))
        return base - weighted
    if threshold is None:
        raise SchemaError(f"numeric attribute {attribute.name!r} needs a threshold")
    low, high, _missing = partition_numeric(view, attribute.name, threshold)
    known = len(low) + len(high)
    if known == 0:
        return 0.0
    base = entropy(ClassCounts.from_labels(e.label for e in low + high))
    weighted = len(low) / known * entropy(ClassCounts.from_examples(low))
    weighted += len(high) / known * entropy(ClassCounts.from_examples(high))
    return base - weighted


def candidate_thresholds(view: Sequence[Example], attribute: AttributeSchema) -> list[float]:
    """Midpoints between consecutive distinct known values of a numeric attribute."""
    if attribute.kind != NUMERIC:
        raise SchemaError(f"{attribute.name!r} is not numeric")
    values = sorted(
        {e.values[attribute.name] for e in view if not is_missing(e.values[attribute.name])}
    )
    return [(a + b) / 2.0 for a, b in zip(values, values[1:])]


@dataclass(frozen=True)
class SplitChoice:
    """Outcome of best_split: the winning attribute, threshold (numeric) and gain."""

    attribute: AttributeSchema
    threshold: Optional[float]
    gain: float


def best_split(
    view: Sequence[Example], available: Sequence[AttributeSchema]
) -> Optional[SplitChoice]:
    """The gain-maximizing split over `available`, or None when nothing is informative.

    Ties break to the lexicographically smallest attribute name; equal-gain
    thresholds of one attribute break to the smallest threshold.
    """
    if not view:
        raise ValueError("best_split needs a non-empty view")
    if not available:
        raise ValueError("best_split needs at least one available attribute")
    best: Optional[SplitChoice] = None
    for attr in sorted(available, key=lambda a: a.name):
        if attr.kind == CATEGORICAL:
            options = [(information_gain(view, attr), None)]
        else:
            options = [
                (information_gain(view, attr, t), t) for t in candidate_thresholds(view, attr)
            ]
        for gain, t in options:
            if best is None or gain > best.gain:
                best = SplitChoice(attribute=attr, threshold=t, gain=gain)
    if best is None or best.gain <= GAIN_EPSILON:
        return None
    return best
