"""Confusion matrix, detection/false-alarm rates and report rendering.

Rates are exact `Fraction`s so that TNR + FAR == 1 and accuracy * total ==
trace hold without rounding. Rounding happens only when a rate is printed.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from src.config import ACCEPTANCE, BENIGN
from src.errors import InputError

REPORT_HEADER = "flowstack.report v1"


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are actual classes, columns predicted ones, both in `labels` order."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != (len(self.labels), len(self.labels)):
            raise InputError(f"Counts of shape {counts.shape} do not fit {len(self.labels)} labels")
        if (counts < 0).any():
            raise InputError("Confusion counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def actual(self, label: str) -> int:
        return int(self.counts[self.index(label)].sum())

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"Label '{label}' is not in the confusion vocabulary") from None

    @property
    def attack_labels(self) -> tuple[str, ...]:
        return tuple(label for label in self.labels if label != BENIGN)


def confusion(predictions: Sequence[str], truths: Sequence[str], labels: Sequence[str]) -> ConfusionMatrix:
    if len(predictions) != len(truths):
        raise InputError(f"{len(predictions)} predictions but {len(truths)} true labels")
    position = {label: i for i, label in enumerate(labels)}
    unknown = sorted({label for label in (*predictions, *truths) if label not in position})
    if unknown:
        raise InputError(f"Labels {unknown} are not in the vocabulary {list(labels)}")
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    actual = np.fromiter((position[t] for t in truths), dtype=np.int64, count=len(truths))
    predicted = np.fromiter((position[p] for p in predictions), dtype=np.int64, count=len(predictions))
    np.add.at(counts, (actual, predicted), 1)
    return ConfusionMatrix(tuple(labels), counts)


# --- Scores ---


def dr_per_class(cm: ConfusionMatrix, label: str) -> Fraction | None:
    """Detection rate of one class; None when the class has no actual rows."""
    i = cm.index(label)
    row = int(cm.counts[i].sum())
    if row == 0:
        return None
    return Fraction(int(cm.counts[i, i]), row)


def _benign_row(cm: ConfusionMatrix) -> tuple[int, int]:
    if BENIGN not in cm.labels:
        raise InputError(f"No {BENIGN} class in the confusion vocabulary")
    i = cm.labels.index(BENIGN)
    tn = int(cm.counts[i, i])
    fp = int(cm.counts[i].sum()) - tn
    if tn + fp == 0:
        raise InputError(f"No actual {BENIGN} rows; TNR and FAR are undefined")
    return tn, fp


def tnr(cm: ConfusionMatrix) -> Fraction:
    tn, fp = _benign_row(cm)
    return Fraction(tn, tn + fp)


def far(cm: ConfusionMatrix) -> Fraction:
    tn, fp = _benign_row(cm)
    return Fraction(fp, tn + fp)


def dr_overall(cm: ConfusionMatrix) -> Fraction:
    """Exactly classified attack rows over all attack rows."""
    rows = [cm.index(label) for label in cm.attack_labels]
    total = int(cm.counts[rows].sum()) if rows else 0
    if total == 0:
        raise InputError("No actual attack rows; overall detection rate is undefined")
    return Fraction(sum(int(cm.counts[i, i]) for i in rows), total)


def accuracy(cm: ConfusionMatrix) -> Fraction:
    if cm.total == 0:
        raise InputError("Accuracy of an empty confusion matrix is undefined")
    return Fraction(cm.trace, cm.total)


# --- Report ---


@dataclass(frozen=True)
class MetricsReport:
    labels: tuple[str, ...]
    counts: Mapping[str, int]
    total: int
    tnr: Fraction | None
    far: Fraction | None
    dr: Mapping[str, Fraction | None]
    dr_overall: Fraction | None
    accuracy: Fraction
    train_seconds: float | None = None
    test_seconds: float | None = None
    extra: Mapping[str, str] = field(default_factory=dict)


def _maybe(fn, cm: ConfusionMatrix) -> Fraction | None:
    try:
        return fn(cm)
    except InputError:
        return None


def build_report(
    cm: ConfusionMatrix, train_seconds: float | None = None, test_seconds: float | None = None
) -> MetricsReport:
    return MetricsReport(
        labels=cm.labels,
        counts={label: cm.actual(label) for label in cm.labels},
        total=cm.total,
        tnr=_maybe(tnr, cm),
        far=_maybe(far, cm),
        dr={label: dr_per_class(cm, label) for label in cm.attack_labels},
        dr_overall=_maybe(dr_overall, cm),
        accuracy=accuracy(cm),
        train_seconds=train_seconds,
        test_seconds=test_seconds,
    )


def format_percent(rate: Fraction | None) -> str:
    """Percentage with 3 decimals, rounded half up; "n/a" for an absent rate."""
    if rate is None:
        return "n/a"
    thousandths = math.floor(Fraction(rate) * 100000 + Fraction(1, 2))
    return f"{thousandths // 1000}.{thousandths % 1000:03d}%"


def report_rows(report: MetricsReport) -> list[tuple[str, str]]:
    """(row name, value) in detection-table order, then summary-table order."""
    rows = [("TNR (BENIGN)", format_percent(report.tnr))]
    # without attack classes only the benign row is meaningful
    if report.dr:
        rows += [(f"DR {label}", format_percent(rate)) for label, rate in report.dr.items()]
        rows += [
            ("FAR", format_percent(report.far)),
            ("DR (Overall)", format_percent(report.dr_overall)),
            ("Accuracy", format_percent(report.accuracy)),
        ]
    if report.train_seconds is not None:
        rows.append(("Training Time", f"{report.train_seconds:.2f} s"))
    if report.test_seconds is not None:
        rows.append(("Test Time", f"{report.test_seconds:.2f} s"))
    return rows


def _fraction_text(rate: Fraction | None) -> str:
    return "absent" if rate is None else f"{rate.numerator}/{rate.denominator}"


def _parse_fraction(text: str) -> Fraction | None:
    return None if text == "absent" else Fraction(text)


def emit_report(report: MetricsReport, fmt: str = "table", reference: Mapping[str, float] | None = None) -> bytes:
    if fmt == "kv":
        return _emit_kv(report)
    if fmt == "table":
        return _emit_table(report, reference)
    raise InputError(f"Unknown report format '{fmt}'. Choose from: ['table', 'kv']")


def _emit_kv(report: MetricsReport) -> bytes:
    lines = [
        REPORT_HEADER,
        f"labels = {json.dumps(list(report.labels))}",
        f"total = {report.total}",
    ]
    lines += [f"count.{label} = {n}" for label, n in report.counts.items()]
    lines += [f"tnr = {_fraction_text(report.tnr)}", f"far = {_fraction_text(report.far)}"]
    lines += [f"dr.{label} = {_fraction_text(rate)}" for label, rate in report.dr.items()]
    lines += [
        f"dr_overall = {_fraction_text(report.dr_overall)}",
        f"accuracy = {_fraction_text(report.accuracy)}",
    ]
    if report.train_seconds is not None:
        lines.append(f"train_seconds = {report.train_seconds!r}")
    if report.test_seconds is not None:
        lines.append(f"test_seconds = {report.test_seconds!r}")
    lines += [f"extra.{key} = {value}" for key, value in report.extra.items()]
    return ("\n".join(lines) + "\n").encode("utf-8")


def _emit_table(report: MetricsReport, reference: Mapping[str, float] | None) -> bytes:
    rows = report_rows(report)
    name_width = max(len("Metric"), *(len(name) for name, _ in rows))
    value_width = max(len("Measured"), *(len(value) for _, value in rows))
    header = f"{'Metric':<{name_width}}  {'Measured':>{value_width}}"
    if reference is not None:
        header += f"  {'Published':>9}"
    lines = [header, "-" * len(header)]
    for name, value in rows:
        line = f"{name:<{name_width}}  {value:>{value_width}}"
        if reference is not None:
            line += f"  {_reference_cell(name, reference.get(name)):>9}"
        lines.append(line)
    lines.append(f"{'Records':<{name_width}}  {report.total:>{value_width}}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _reference_cell(name: str, value: float | None) -> str:
    if value is None:
        return ""
    unit = " s" if name.endswith("Time") else "%"
    return f"{value:g}{unit}"


def parse_report(data: bytes | str) -> MetricsReport:
    """Inverse of the "kv" rendering."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines or lines[0] != REPORT_HEADER:
        raise InputError("Not a flowstack report (bad or missing header)")
    entries = {}
    for line in lines[1:]:
        key, sep, value = line.partition(" = ")
        if not sep:
            raise InputError(f"Malformed report line: {line!r}")
        entries[key] = value
    try:
        labels = tuple(json.loads(entries["labels"]))
        attack_labels = [label for label in labels if label != BENIGN]
        return MetricsReport(
            labels=labels,
            counts={label: int(entries[f"count.{label}"]) for label in labels},
            total=int(entries["total"]),
            tnr=_parse_fraction(entries["tnr"]),
            far=_parse_fraction(entries["far"]),
            dr={label: _parse_fraction(entries[f"dr.{label}"]) for label in attack_labels},
            dr_overall=_parse_fraction(entries["dr_overall"]),
            accuracy=Fraction(entries["accuracy"]),
            train_seconds=float(entries["train_seconds"]) if "train_seconds" in entries else None,
            test_seconds=float(entries["test_seconds"]) if "test_seconds" in entries else None,
            extra={k.removeprefix("extra."): v for k, v in entries.items() if k.startswith("extra.")},
        )
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise InputError(f"Malformed report: {e}") from None


# --- Acceptance ---


def check_acceptance(report: MetricsReport, thresholds: Mapping = ACCEPTANCE) -> list[tuple[str, bool]]:
    """One (description, passed) pair per reproduction threshold; absent rates fail."""

    def at_least(rate, bound):
        return rate is not None and rate >= Fraction(str(bound))

    def at_most(rate, bound):
        return rate is not None and rate <= Fraction(str(bound))

    checks = [
        (f"Accuracy >= {thresholds['accuracy_min']:.1%}", at_least(report.accuracy, thresholds["accuracy_min"])),
        (f"FAR <= {thresholds['far_max']:.1%}", at_most(report.far, thresholds["far_max"])),
        (
            f"DR (Overall) >= {thresholds['dr_overall_min']:.1%}",
            at_least(report.dr_overall, thresholds["dr_overall_min"]),
        ),
    ]
    for label, bound in thresholds["dr_min"].items():
        checks.append((f"DR {label} >= {bound:.1%}", at_least(report.dr.get(label), bound)))
    return checks


def confusion_csv(cm: ConfusionMatrix) -> str:
    """Matrix as CSV: header row of predicted labels, one row per actual label."""
    frame = pd.DataFrame(cm.counts, index=list(cm.labels), columns=list(cm.labels))
    return frame.to_csv(index_label="actual\\predicted", lineterminator="\n")
