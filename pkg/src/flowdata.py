"""Flow-record ingestion and preparation: load, clean, prune, relabel, split, normalize.

Datasets are immutable. Every transform returns a new Dataset whose provenance
gains one line describing what was done, so a split file can always be traced
back to its source CSVs and seed.
"""

import csv
import logging
import os
import re
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.config import (
    ATTACK,
    BENIGN,
    CATEGORY_LABELS,
    CATEGORY_OF,
    FINE_LABELS,
    INFINITY_MARKERS,
    LABEL_ALIASES,
    LABEL_COLUMN,
    MARKER_FEATURE,
    NAN_MARKERS,
    SPLIT_PRESETS,
)
from src.errors import ConfigError, InputError, SchemaMismatchError, SplitShortfallError

logger = logging.getLogger(__name__)

PRNG_NAME = "PCG64"
NUMERIC = "numeric"
CATEGORICAL = "categorical"


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Seeded PCG64 generator; `stream` derives independent sub-streams."""
    if seed < 0:
        raise ConfigError(f"Seed must be an unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))


# --- Types ---


@dataclass(frozen=True)
class DatasetSchema:
    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    label_column: str = LABEL_COLUMN
    fine_labels: tuple[str, ...] = tuple(FINE_LABELS)
    cicids_layout: bool = False

    def __post_init__(self):
        if len(self.feature_names) != len(self.feature_kinds):
            raise InputError("feature_names and feature_kinds differ in length")
        if any(not name for name in self.feature_names):
            raise InputError("Feature names must be non-empty")
        if len(set(self.feature_names)) != len(self.feature_names):
            dupes = sorted({n for n in self.feature_names if self.feature_names.count(n) > 1})
            raise InputError(f"Duplicate feature names: {dupes}")
        if self.label_column in self.feature_names:
            raise InputError(f"Label column '{self.label_column}' is also listed as a feature")
        if self.cicids_layout:
            missing = [label for label in FINE_LABELS if label not in self.fine_labels]
            if missing:
                raise InputError(f"CICIDS2017 vocabulary lacks {missing}")

    @property
    def width(self) -> int:
        return len(self.feature_names)

    def index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise InputError(f"Unknown feature '{name}'") from None

    def select(self, names: Sequence[str]) -> "DatasetSchema":
        kinds = tuple(self.feature_kinds[self.index(n)] for n in names)
        return replace(self, feature_names=tuple(names), feature_kinds=kinds)


class FlowRecord(NamedTuple):
    values: tuple[float, ...]
    fine_label: int


class ViewKind(str, Enum):
    BINARY = "binary"
    CATEGORY = "category"
    FINE = "fine"


@dataclass(frozen=True)
class LabelView:
    kind: ViewKind
    mapping: Mapping[str, str]
    vocabulary: tuple[str, ...]

    def map(self, fine_label: str) -> str:
        try:
            return self.mapping[fine_label]
        except KeyError:
            raise InputError(f"Label '{fine_label}' has no {self.kind.value} mapping") from None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "mapping": dict(self.mapping), "vocabulary": list(self.vocabulary)}

    @classmethod
    def from_dict(cls, data: dict) -> "LabelView":
        return cls(ViewKind(data["kind"]), dict(data["mapping"]), tuple(data["vocabulary"]))


def binary_view(fine_labels: Sequence[str]) -> LabelView:
    mapping = {f: BENIGN if f == BENIGN else ATTACK for f in fine_labels}
    return LabelView(ViewKind.BINARY, mapping, (BENIGN, ATTACK))


def category_view(fine_labels: Sequence[str]) -> LabelView:
    """Group fine labels into attack categories; unknown labels keep their own name."""
    mapping = {f: CATEGORY_OF.get(f, f) for f in fine_labels}
    vocabulary = list(CATEGORY_LABELS)
    vocabulary += [c for c in dict.fromkeys(mapping.values()) if c not in vocabulary]
    return LabelView(ViewKind.CATEGORY, mapping, tuple(vocabulary))


def fine_view(fine_labels: Sequence[str]) -> LabelView:
    return LabelView(ViewKind.FINE, {f: f for f in fine_labels}, tuple(fine_labels))


def make_view(kind: str | ViewKind, fine_labels: Sequence[str]) -> LabelView:
    builders = {ViewKind.BINARY: binary_view, ViewKind.CATEGORY: category_view, ViewKind.FINE: fine_view}
    try:
        return builders[ViewKind(kind)](fine_labels)
    except ValueError:
        raise ConfigError(f"Unknown label view '{kind}'. Choose from: {[k.value for k in ViewKind]}") from None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus fine labels; `view` (if any) decides what `targets` holds."""

    schema: DatasetSchema
    values: np.ndarray
    fine: np.ndarray
    provenance: tuple[str, ...] = ()
    view: LabelView | None = None

    def __post_init__(self):
        fine = np.asarray(self.fine, dtype=np.int64).reshape(-1).view()
        values = np.asarray(self.values, dtype=np.float64).view()
        if values.size == 0:
            values = values.reshape(fine.shape[0], self.schema.width)
        if values.ndim != 2 or values.shape[1] != self.schema.width:
            raise SchemaMismatchError(f"Values of shape {values.shape} do not fit {self.schema.width} features")
        if values.shape[0] != fine.shape[0]:
            raise InputError(f"{values.shape[0]} value rows but {fine.shape[0]} labels")
        if fine.size and (fine.min() < 0 or fine.max() >= len(self.schema.fine_labels)):
            raise InputError("Fine label index outside the schema vocabulary")
        values.setflags(write=False)
        fine.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "fine", fine)

    def __len__(self) -> int:
        return self.fine.shape[0]

    @property
    def labels(self) -> tuple[str, ...]:
        return self.view.vocabulary if self.view else self.schema.fine_labels

    @cached_property
    def targets(self) -> np.ndarray:
        if self.view is None:
            return self.fine
        lookup = np.full(len(self.schema.fine_labels), -1, dtype=np.int64)
        for i in np.unique(self.fine):
            lookup[i] = self.view.vocabulary.index(self.view.map(self.schema.fine_labels[i]))
        targets = lookup[self.fine]
        targets.setflags(write=False)
        return targets

    @property
    def records(self) -> list[FlowRecord]:
        """Row-by-row view: feature tuple and fine-label index."""
        return [FlowRecord(tuple(row), int(label)) for row, label in zip(self.values.tolist(), self.fine)]

    def take(self, rows: np.ndarray, note: str | None = None) -> "Dataset":
        provenance = self.provenance + ((note,) if note else ())
        return replace(self, values=self.values[rows], fine=self.fine[rows], provenance=provenance)


@dataclass(frozen=True)
class NormalizationStats:
    feature_names: tuple[str, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if any(lo > hi for lo, hi in zip(self.mins, self.maxs)):
            raise InputError("Normalization minimum exceeds maximum")

    def to_dict(self) -> dict:
        return {"features": list(self.feature_names), "mins": list(self.mins), "maxs": list(self.maxs)}

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationStats":
        return cls(tuple(data["features"]), tuple(data["mins"]), tuple(data["maxs"]))


class SelectionPolicy(str, Enum):
    FIRST_ROWS = "first"
    RANDOM = "random"


@dataclass(frozen=True)
class SplitSpec:
    counts: Mapping[str, tuple[int, int]]
    seed: int
    train_policy: SelectionPolicy = SelectionPolicy.FIRST_ROWS
    test_policy: SelectionPolicy = SelectionPolicy.RANDOM

    def __post_init__(self):
        for label, (train_count, test_count) in self.counts.items():
            if train_count < 0 or test_count < 0:
                raise ConfigError(f"Negative split count for '{label}'")

    @property
    def totals(self) -> tuple[int, int]:
        return sum(c[0] for c in self.counts.values()), sum(c[1] for c in self.counts.values())


def preset_split_spec(name: str, seed: int) -> SplitSpec:
    if name not in SPLIT_PRESETS:
        raise ConfigError(f"Unknown split preset '{name}'. Choose from: {list(SPLIT_PRESETS)}")
    return SplitSpec(dict(SPLIT_PRESETS[name]), seed)


def dataset_from_arrays(
    values,
    labels: Sequence[str],
    feature_names: Sequence[str] | None = None,
    fine_labels: Sequence[str] | None = None,
) -> Dataset:
    """Build an in-memory dataset with a generic (non-CICIDS) schema."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise InputError("values must be a 2-D array")
    names = tuple(feature_names) if feature_names else tuple(f"f{i + 1}" for i in range(values.shape[1]))
    vocabulary = tuple(fine_labels) if fine_labels else _vocabulary(labels)
    schema = DatasetSchema(names, (NUMERIC,) * len(names), fine_labels=vocabulary)
    fine = [_label_index(vocabulary, label, row) for row, label in enumerate(labels, start=1)]
    return Dataset(schema, values, np.asarray(fine, dtype=np.int64), ("arrays: in-memory construction",))


# --- Loading ---


def canonical_label(raw: str) -> str:
    label = raw.strip()
    if label in LABEL_ALIASES:
        return LABEL_ALIASES[label]
    m = re.match(r"^Web Attack\s*[^\w\s]\s*(.+)$", label)
    if m:
        return f"Web Attack - {m.group(1).strip()}"
    return label


def _vocabulary(labels: Iterable[str]) -> tuple[str, ...]:
    found = set(labels)
    rest = sorted(found - {BENIGN})
    return ((BENIGN,) if BENIGN in found else ()) + tuple(rest)


def _label_index(vocabulary: Sequence[str], label: str, row: int) -> int:
    try:
        return vocabulary.index(label)
    except ValueError:
        raise InputError(f"Unknown label value '{label}' at row {row}") from None


def _raw_header(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8-sig", errors="replace", newline="") as f:
        return next(csv.reader(f, skipinitialspace=True), [])


def _read_frame(path: str) -> pd.DataFrame:
    # pandas renames exact duplicates ("a", "a.1"), so names come from the raw header
    try:
        header = _raw_header(path)
        df = pd.read_csv(
            path,
            dtype=None,
            keep_default_na=False,
            na_values=list(NAN_MARKERS),
            skipinitialspace=True,
            encoding="utf-8",
            encoding_errors="replace",
            low_memory=False,
        )
    except FileNotFoundError:
        raise InputError(f"Input file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise InputError(f"{path}: file is empty (no header row)") from None
    except pd.errors.ParserError as e:
        raise InputError(f"{path}: header/row arity mismatch: {e}") from None
    except (OSError, UnicodeError) as e:
        raise InputError(f"Cannot read {path}: {e}") from None

    stripped = [c.strip() for c in header]
    if len(set(stripped)) != len(stripped):
        dupes = sorted({c for c in stripped if stripped.count(c) > 1})
        raise InputError(f"{path}: duplicate header names after trimming: {dupes}")
    if len(stripped) != len(df.columns):
        raise InputError(f"{path}: header/row arity mismatch")
    df.columns = stripped
    return df


def _numeric_column(series: pd.Series, name: str, path: str, row_numbers: np.ndarray) -> np.ndarray:
    if pd.api.types.is_numeric_dtype(series):
        return series.to_numpy(dtype=np.float64)

    text = series.astype(str).str.strip()
    result = pd.to_numeric(text.where(~text.isin(INFINITY_MARKERS + NAN_MARKERS)), errors="coerce")
    result = result.to_numpy(dtype=np.float64)
    result[text.isin(("Infinity", "inf", "+Infinity")).to_numpy()] = np.inf
    result[text.isin(("-Infinity", "-inf")).to_numpy()] = -np.inf
    is_nan_marker = (text.isin(NAN_MARKERS) | series.isna()).to_numpy()
    bad = np.isnan(result) & ~is_nan_marker
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        value = text.iloc[i]
        what = "missing value" if value == "" else f"non-numeric value '{value}'"
        raise InputError(f"{path}: {what} in feature '{name}' at row {row_numbers[i]}")
    return result


def load_csv(path: str | Sequence[str], schema_hint: DatasetSchema | None = None) -> Dataset:
    """Load one CSV or the concatenation of several, in the order given.

    Header names are whitespace-trimmed. The label column is the last one unless
    `schema_hint` names another. "Infinity" and "NaN" values are kept as
    inf/nan so that `clean` can act on them; any other missing value is an error.
    """
    paths = [path] if isinstance(path, (str, os.PathLike)) else list(path)
    if not paths:
        raise InputError("No input files given")

    frames, notes = [], []
    label_column, feature_names = None, None
    for p in tqdm(paths, desc="Loading CSVs", disable=None if len(paths) > 1 else True):
        df = _read_frame(str(p))
        file_label = schema_hint.label_column if schema_hint else df.columns[-1]
        if file_label not in df.columns:
            raise InputError(f"{p}: label column '{file_label}' not found")
        features = [c for c in df.columns if c != file_label]
        if schema_hint is not None:
            missing = [f for f in schema_hint.feature_names if f not in features]
            if missing:
                raise SchemaMismatchError(f"{p}: features {missing} missing from header")
            features = list(schema_hint.feature_names)
        if feature_names is None:
            label_column, feature_names = file_label, features
        elif features != feature_names or file_label != label_column:
            raise InputError(f"{p}: header differs from {paths[0]}")

        row_numbers = np.arange(2, len(df) + 2)
        short = df[file_label].isna().to_numpy()
        if short.any():
            raise InputError(f"{p}: header/row arity mismatch at row {row_numbers[short][0]}")

        labels = df[file_label].astype(str).str.strip()
        repeated = (labels == file_label).to_numpy()
        if repeated.any():
            df, labels, row_numbers = df[~repeated], labels[~repeated], row_numbers[~repeated]

        values = np.column_stack(
            [_numeric_column(df[name], name, str(p), row_numbers) for name in feature_names]
        ) if feature_names else np.empty((len(df), 0))
        frames.append((values, labels.map(canonical_label).to_numpy(), row_numbers, str(p)))
        notes.append(f"load: {p} ({len(df)} rows" + (f", {int(repeated.sum())} repeated headers dropped)" if repeated.any() else ")"))
        logger.info("Loaded %s: %d rows, %d features", p, len(df), len(feature_names))

    cicids = MARKER_FEATURE in feature_names
    if schema_hint is not None:
        schema = replace(schema_hint, feature_names=tuple(feature_names), label_column=label_column)
    else:
        all_labels = np.concatenate([f[1] for f in frames]) if frames else np.array([])
        vocabulary = tuple(FINE_LABELS) if cicids else _vocabulary(all_labels.tolist())
        schema = DatasetSchema(
            tuple(feature_names),
            (NUMERIC,) * len(feature_names),
            label_column=label_column,
            fine_labels=vocabulary,
            cicids_layout=cicids,
        )

    lookup = {label: i for i, label in enumerate(schema.fine_labels)}
    fine_parts = []
    for _, labels, row_numbers, p in frames:
        codes = np.fromiter((lookup.get(label, -1) for label in labels), dtype=np.int64, count=len(labels))
        if (codes < 0).any():
            i = int(np.flatnonzero(codes < 0)[0])
            raise InputError(f"{p}: unknown label value '{labels[i]}' at row {row_numbers[i]}")
        fine_parts.append(codes)

    values = np.vstack([f[0] for f in frames])
    return Dataset(schema, values, np.concatenate(fine_parts), tuple(notes))


def load_features_csv(path: str, feature_names: Sequence[str]) -> tuple[list[str], list[list[str]], np.ndarray, list[str]]:
    """Read rows for inference without requiring a label column.

    Returns (header, raw rows, value matrix in `feature_names` order, per-row errors).
    Rows with an arity problem or a non-numeric/missing value are listed in the
    error list and get a NaN row in the matrix.
    """
    try:
        with open(path, "r", encoding="utf-8", errors="replace", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None:
                raise InputError(f"{path}: file is empty (no header row)")
            rows = list(reader)
    except OSError as e:
        raise InputError(f"Cannot read {path}: {e}") from None

    names = [h.strip() for h in header]
    missing = [n for n in feature_names if n not in names]
    if missing:
        raise SchemaMismatchError(f"{path}: features {missing} missing from header")
    columns = [names.index(n) for n in feature_names]

    values = np.full((len(rows), len(columns)), np.nan)
    errors = []
    for i, row in enumerate(rows):
        line = i + 2
        if len(row) != len(header):
            errors.append(f"row {line}: expected {len(header)} fields, found {len(row)}")
            continue
        try:
            parsed = [float(row[c]) for c in columns]
        except ValueError:
            errors.append(f"row {line}: missing or non-numeric feature value")
            continue
        if not np.all(np.isfinite(parsed)):
            errors.append(f"row {line}: Infinity/NaN feature value")
            continue
        values[i] = parsed
    return header, rows, values, errors


# --- Cleaning and pruning ---


def clean(d: Dataset) -> Dataset:
    """Drop rows holding an Infinity/NaN marker.

    CICIDS-shaped schemas look at "Flow Packets/s" only; generic schemas look at
    every feature. Any marker left elsewhere after the CICIDS pass is removed as
    well (and logged) so cleaned data never carries markers.
    """
    if d.schema.cicids_layout:
        if MARKER_FEATURE not in d.schema.feature_names:
            raise InputError(f"CICIDS2017 schema lacks the '{MARKER_FEATURE}' feature")
        column = d.values[:, d.schema.index(MARKER_FEATURE)]
        bad = ~np.isfinite(column)
        scope = f"'{MARKER_FEATURE}'"
    else:
        bad = ~np.isfinite(d.values).all(axis=1)
        scope = "any feature"

    residual = ~np.isfinite(d.values).all(axis=1) & ~bad
    if residual.any():
        logger.warning("%d rows carry markers outside %s; removing them too", int(residual.sum()), scope)

    keep = np.flatnonzero(~(bad | residual))
    if keep.size == len(d):
        return d
    note = f"clean: removed {int(bad.sum())} rows with Infinity/NaN in {scope}"
    if residual.any():
        note += f", {int(residual.sum())} rows with markers elsewhere"
    logger.info(note)
    return d.take(keep, note)


def drop_constant_features(d: Dataset, explicit: Sequence[str] | None = None) -> Dataset:
    if explicit is not None:
        names = list(dict.fromkeys(explicit))
        if len(names) != len(explicit):
            logger.warning("Explicit drop list repeats names; dropping %d unique features", len(names))
        for name in names:
            d.schema.index(name)
        how = "explicit"
    else:
        if len(d) == 0:
            return d
        constant = np.all(d.values == d.values[0], axis=0)
        names = [n for n, c in zip(d.schema.feature_names, constant) if c]
        how = "auto"

    if not names:
        return d
    keep = [n for n in d.schema.feature_names if n not in names]
    columns = [d.schema.index(n) for n in keep]
    logger.info("Dropping %d constant features (%s)", len(names), how)
    return replace(
        d,
        schema=d.schema.select(keep),
        values=d.values[:, columns],
        provenance=d.provenance + (f"drop_constant_features ({how}): {', '.join(names)}",),
    )


def relabel(d: Dataset, view: LabelView) -> Dataset:
    """Switch the label column to `view`; fine labels stay available as `d.fine`."""
    relabelled = replace(d, view=view, provenance=d.provenance + (f"relabel: {view.kind.value} view",))
    relabelled.targets  # raises on an unmapped fine label
    return relabelled


def select_features(d: Dataset, names: Sequence[str]) -> Dataset:
    """Restrict (and reorder) the dataset to `names`; missing names are a schema mismatch."""
    missing = [n for n in names if n not in d.schema.feature_names]
    if missing:
        raise SchemaMismatchError(f"Features {missing} are missing from the data")
    if tuple(names) == d.schema.feature_names:
        return d
    columns = [d.schema.index(n) for n in names]
    return replace(d, schema=d.schema.select(names), values=d.values[:, columns])


# --- Splitting ---


def split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Per fine label, pick train rows then test rows from what is left.

    Labels are visited in vocabulary order with one seeded generator, so the
    same (data, spec) always yields the same subsets. Both subsets keep the
    dataset's row order.
    """
    unknown = [label for label in spec.counts if label not in d.schema.fine_labels]
    if unknown:
        raise InputError(f"Split names labels absent from the vocabulary: {unknown}")

    rng = make_rng(spec.seed)
    shortfalls = {}
    train_rows, test_rows = [], []
    for k, label in enumerate(d.schema.fine_labels):
        train_count, test_count = spec.counts.get(label, (0, 0))
        rows = np.flatnonzero(d.fine == k)
        if train_count + test_count > rows.size:
            shortfalls[label] = (train_count + test_count, int(rows.size))
            continue
        train = _select(rows, train_count, spec.train_policy, rng)
        rest = np.setdiff1d(rows, train, assume_unique=True)
        test = _select(rest, test_count, spec.test_policy, rng)
        train_rows.append(train)
        test_rows.append(test)

    if shortfalls:
        raise SplitShortfallError(shortfalls)

    train_idx = np.sort(np.concatenate(train_rows)) if train_rows else np.array([], dtype=np.int64)
    test_idx = np.sort(np.concatenate(test_rows)) if test_rows else np.array([], dtype=np.int64)
    note = (
        f"split: seed={spec.seed} prng={PRNG_NAME} train_policy={spec.train_policy.value} "
        f"test_policy={spec.test_policy.value}"
    )
    logger.info("Split into %d train / %d test rows", train_idx.size, test_idx.size)
    return (
        d.take(train_idx, f"{note} subset=train rows={train_idx.size}"),
        d.take(test_idx, f"{note} subset=test rows={test_idx.size}"),
    )


def _select(rows: np.ndarray, count: int, policy: SelectionPolicy, rng: np.random.Generator) -> np.ndarray:
    if policy is SelectionPolicy.FIRST_ROWS:
        return rows[:count]
    return np.sort(rng.choice(rows, size=count, replace=False))


def label_counts(d: Dataset) -> dict[str, int]:
    counts = np.bincount(d.fine, minlength=len(d.schema.fine_labels))
    return {label: int(c) for label, c in zip(d.schema.fine_labels, counts)}


# --- Normalization ---


def fit_normalizer(train: Dataset) -> NormalizationStats:
    if len(train) == 0:
        raise InputError("Cannot fit normalization on an empty dataset")
    non_numeric = [n for n, k in zip(train.schema.feature_names, train.schema.feature_kinds) if k != NUMERIC]
    if non_numeric:
        raise InputError(f"Normalization needs numeric features; got {non_numeric}")
    if not np.isfinite(train.values).all():
        raise InputError("Training data still holds Infinity/NaN values; run clean first")
    return NormalizationStats(
        train.schema.feature_names,
        tuple(train.values.min(axis=0).tolist()),
        tuple(train.values.max(axis=0).tolist()),
    )


def normalize_values(values: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Scale columns (already in stats order) to [0, 1]; constant features map to 0."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != len(stats.feature_names):
        raise SchemaMismatchError(f"Expected {len(stats.feature_names)} features, got {values.shape[-1]}")
    mins = np.asarray(stats.mins)
    span = np.asarray(stats.maxs) - mins
    scaled = np.divide(values - mins, span, out=np.zeros_like(values), where=span > 0)
    return np.clip(scaled, 0.0, 1.0)


def apply_normalizer(d: Dataset, stats: NormalizationStats) -> Dataset:
    unknown = [n for n in d.schema.feature_names if n not in stats.feature_names]
    if unknown:
        raise SchemaMismatchError(f"Features {unknown} have no normalization statistics")
    d = select_features(d, stats.feature_names)
    return replace(
        d,
        values=normalize_values(d.values, stats),
        provenance=d.provenance + ("apply_normalizer: min-max scaling clamped to [0, 1]",),
    )


# --- Output ---


def write_csv(d: Dataset, path: str) -> None:
    """Write features plus the current label column; reloading gives the same data."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    df = pd.DataFrame(d.values, columns=list(d.schema.feature_names))
    df[d.schema.label_column] = np.asarray(d.labels, dtype=object)[d.targets] if len(d) else []
    df.to_csv(path, index=False, lineterminator="\n")


def write_provenance(d: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in d.provenance:
            f.write(line + "\n")
