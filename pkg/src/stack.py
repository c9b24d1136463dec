"""The three-stage hierarchy: binary tree, category rules, then a forest that
also sees the first two stages' predictions as two extra columns.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from src import forestpa, reptree, ripper
from src.config import MODEL2_LABELS, MODEL3_LABELS
from src.errors import ConfigError, InputError, SchemaMismatchError, StageError
from src.flowdata import (
    CATEGORICAL,
    Dataset,
    LabelView,
    NormalizationStats,
    ViewKind,
    apply_normalizer,
    binary_view,
    fit_normalizer,
    make_view,
    normalize_values,
    relabel,
    select_features,
)
from src.forestpa import ForestPaModel, PaTreeParams
from src.modelio import digest, dump_document, load_document, read_text, write_text
from src.reptree import RepTreeModel, RepTreeParams
from src.ripper import RipperParams, RuleSet

logger = logging.getLogger(__name__)

AUGMENT_COLUMNS = ("stage1_prediction", "stage2_prediction")
PREDICT_CHUNK_ROWS = 4096
LABEL_SPACES = ("category", "fine")


# --- Prediction codes ---


def encode_prediction(label: str, table: Sequence[str]) -> float:
    """Position of `label` in `table`, scaled to [0, 1]."""
    try:
        index = list(table).index(label)
    except ValueError:
        raise InputError(f"Label '{label}' is not in code table {list(table)}") from None
    if len(table) == 1:
        return 0.0
    return index / (len(table) - 1)


def decode_prediction(code: float, table: Sequence[str]) -> str:
    if len(table) == 1:
        index = 0
    else:
        index = int(round(code * (len(table) - 1)))
    if not 0 <= index < len(table) or encode_prediction(table[index], table) != code:
        raise InputError(f"Code {code} does not belong to table {list(table)}")
    return table[index]


@dataclass(frozen=True)
class AugmentCodes:
    stage1: tuple[str, ...]
    stage2: tuple[str, ...]

    def columns(self, idx1: np.ndarray, idx2: np.ndarray) -> np.ndarray:
        """Coded stage outputs for label-index arrays, shape (rows, 2)."""
        code1 = np.array([encode_prediction(label, self.stage1) for label in self.stage1])
        code2 = np.array([encode_prediction(label, self.stage2) for label in self.stage2])
        return np.column_stack([code1[idx1], code2[idx2]])


def augment(record: Sequence[float], out1: str, out2: str, codes: AugmentCodes) -> tuple[float, ...]:
    return tuple(record) + (encode_prediction(out1, codes.stage1), encode_prediction(out2, codes.stage2))


def augment_batch(values: np.ndarray, idx1: np.ndarray, idx2: np.ndarray, codes: AugmentCodes) -> np.ndarray:
    return np.hstack([np.asarray(values, dtype=np.float64), codes.columns(idx1, idx2)])


def augmented_dataset(norm: Dataset, idx1: np.ndarray, idx2: np.ndarray, codes: AugmentCodes) -> Dataset:
    schema = replace(
        norm.schema,
        feature_names=norm.schema.feature_names + AUGMENT_COLUMNS,
        feature_kinds=norm.schema.feature_kinds + (CATEGORICAL, CATEGORICAL),
    )
    return Dataset(
        schema,
        augment_batch(norm.values, idx1, idx2, codes),
        norm.fine,
        norm.provenance + ("augment: appended stage 1 and stage 2 prediction codes",),
        norm.view,
    )


# --- Model ---


@dataclass(frozen=True)
class StackParams:
    reptree: RepTreeParams = field(default_factory=RepTreeParams)
    ripper: RipperParams = field(default_factory=RipperParams)
    forest: PaTreeParams = field(default_factory=PaTreeParams)
    model2_labels: str = MODEL2_LABELS
    model3_labels: str = MODEL3_LABELS

    def __post_init__(self):
        for name in ("model2_labels", "model3_labels"):
            if getattr(self, name) not in LABEL_SPACES:
                raise ConfigError(f"{name} must be one of {list(LABEL_SPACES)}, got {getattr(self, name)!r}")

    @classmethod
    def seeded(cls, seed: int, **kwargs) -> "StackParams":
        """Parameters with every learner seeded from one master seed."""
        params = cls(**kwargs)
        return replace(
            params,
            reptree=replace(params.reptree, seed=seed),
            ripper=replace(params.ripper, seed=seed),
            forest=replace(params.forest, seed=seed),
        )


@dataclass(frozen=True)
class HierarchicalModel:
    model1: RepTreeModel
    model2: RuleSet
    model3: ForestPaModel
    stats: NormalizationStats
    views: tuple[LabelView, LabelView, LabelView]
    codes: AugmentCodes

    def __post_init__(self):
        width = len(self.stats.feature_names)
        if self.model3.width != width + 2:
            raise SchemaMismatchError(f"Stage 3 expects {self.model3.width} features, base width is {width}")
        if self.model1.width != width or self.model2.width != width:
            raise SchemaMismatchError("Stages 1 and 2 must share the normalization feature set")
        if not set(self.model1.classes) <= set(self.codes.stage1):
            raise InputError("Stage 1 classes missing from its code table")
        if not set(self.model2.classes) <= set(self.codes.stage2):
            raise InputError("Stage 2 classes missing from its code table")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.stats.feature_names


def _run_stage(stage: str, fn: Callable, *args):
    started = time.perf_counter()
    try:
        result = fn(*args)
    except StageError:
        raise
    except Exception as e:
        raise StageError(stage, e) from e
    logger.info("stage %s finished in %.2f s", stage, time.perf_counter() - started)
    return result


def _train_stage1(norm: Dataset, view: LabelView, params: RepTreeParams) -> RepTreeModel:
    return reptree.train_rep_tree(relabel(norm, view), params)


def _train_stage2(norm: Dataset, view: LabelView, params: RipperParams) -> RuleSet:
    return ripper.train_ripper(relabel(norm, view), params)


def _train_stage3(
    norm: Dataset,
    model1: RepTreeModel,
    model2: RuleSet,
    codes: AugmentCodes,
    view: LabelView,
    params: PaTreeParams,
    threads: int | None,
) -> ForestPaModel:
    # resubstitution: stages 1 and 2 label their own training rows
    idx1 = reptree.predict_batch(model1, norm.values)
    idx2 = ripper.predict_batch(model2, norm.values)
    stacked = relabel(augmented_dataset(norm, idx1, idx2, codes), view)
    return forestpa.train_forest(stacked, params, threads)


def train_hierarchy(train: Dataset, params: StackParams = StackParams(), threads: int | None = None) -> HierarchicalModel:
    """Normalize once, train stages 1 and 2 side by side, then stage 3 on augmented rows."""
    if len(train) == 0:
        raise InputError("Cannot train the hierarchy on an empty dataset")

    stats = _run_stage("normalize", fit_normalizer, train)
    norm = _run_stage("normalize", apply_normalizer, train, stats)
    fine_labels = train.schema.fine_labels
    views = (
        binary_view(fine_labels),
        _run_stage("configure", make_view, params.model2_labels, fine_labels),
        _run_stage("configure", make_view, params.model3_labels, fine_labels),
    )

    with ThreadPoolExecutor(max_workers=min(2, threads or 2)) as pool:
        first = pool.submit(_run_stage, "model1", _train_stage1, norm, views[0], params.reptree)
        second = pool.submit(_run_stage, "model2", _train_stage2, norm, views[1], params.ripper)
        model1, model2 = first.result(), second.result()

    codes = AugmentCodes(model1.classes, model2.classes)
    model3 = _run_stage("model3", _train_stage3, norm, model1, model2, codes, views[2], params.forest, threads)

    return HierarchicalModel(model1, model2, model3, stats, views, codes)


# --- Inference ---


class StagePrediction(NamedTuple):
    stage1: str
    stage2: str
    final: str


class BatchPrediction(NamedTuple):
    stage1: list[str]
    stage2: list[str]
    final: list[str]


def _check_width(model: HierarchicalModel, width: int) -> None:
    if width != len(model.feature_names):
        raise SchemaMismatchError(f"Record has {width} features, hierarchy expects {len(model.feature_names)}")


def predict_hierarchy(model: HierarchicalModel, record: Sequence[float]) -> StagePrediction:
    """Raw record through normalize, stage 1, stage 2, augment and stage 3."""
    _check_width(model, len(record))
    x = normalize_values(np.asarray(record, dtype=np.float64), model.stats)
    out1, _ = reptree.predict(model.model1, x)
    out2 = ripper.predict(model.model2, x)
    out3, _ = forestpa.predict(model.model3, augment(x, out1, out2, model.codes))
    return StagePrediction(out1, out2, out3)


def labelled_inputs(model: HierarchicalModel, data: Dataset) -> tuple[np.ndarray, list[str]]:
    """Raw values in model feature order, plus true labels in the final stage's label space."""
    if len(data) == 0:
        raise InputError("No records to evaluate")
    data = select_features(data, model.feature_names)
    if not np.isfinite(data.values).all():
        raise InputError("Infinity/NaN values present; run clean first")
    view = model.views[2]
    return data.values, [view.map(data.schema.fine_labels[i]) for i in data.fine]


def _predict_chunk(model: HierarchicalModel, raw: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = normalize_values(raw, model.stats)
    idx1 = reptree.predict_batch(model.model1, x)
    idx2 = ripper.predict_batch(model.model2, x)
    idx3 = forestpa.predict_batch(model.model3, augment_batch(x, idx1, idx2, model.codes))
    return idx1, idx2, idx3


def predict_hierarchy_batch(
    model: HierarchicalModel,
    values: np.ndarray,
    threads: int | None = None,
    chunk_rows: int = PREDICT_CHUNK_ROWS,
) -> BatchPrediction:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise InputError("Batch prediction needs a 2-D array")
    _check_width(model, values.shape[1])
    chunks = [values[i : i + chunk_rows] for i in range(0, values.shape[0], chunk_rows)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda chunk: _predict_chunk(model, chunk), chunks))

    def labels(stage: int, classes: Sequence[str]) -> list[str]:
        if not parts:
            return []
        idx = np.concatenate([p[stage] for p in parts])
        return np.asarray(classes, dtype=object)[idx].tolist()

    return BatchPrediction(
        labels(0, model.model1.classes),
        labels(1, model.model2.classes),
        labels(2, model.model3.classes),
    )


# --- Hierarchy file ---


def dumps(model: HierarchicalModel) -> str:
    components = {
        "model1": reptree.dumps(model.model1),
        "model2": ripper.dumps(model.model2),
        "model3": forestpa.dumps(model.model3),
    }
    return dump_document(
        "hierarchy",
        {
            "components": components,
            "manifest": {name: digest(text) for name, text in components.items()},
            "stats": model.stats.to_dict(),
            "views": [view.to_dict() for view in model.views],
            "codes": {"stage1": list(model.codes.stage1), "stage2": list(model.codes.stage2)},
        },
    )


def loads(text: str) -> HierarchicalModel:
    doc = load_document(text, "hierarchy")
    try:
        components, manifest = doc["components"], doc["manifest"]
        for name, body in components.items():
            if manifest.get(name) != digest(body):
                raise InputError(f"Hierarchy component '{name}' does not match its manifest hash")
        views = tuple(LabelView.from_dict(v) for v in doc["views"])
        if len(views) != 3 or views[0].kind is not ViewKind.BINARY:
            raise InputError("First hierarchy stage must use the binary label view")
        return HierarchicalModel(
            reptree.loads(components["model1"]),
            ripper.loads(components["model2"]),
            forestpa.loads(components["model3"]),
            NormalizationStats.from_dict(doc["stats"]),
            views,
            AugmentCodes(tuple(doc["codes"]["stage1"]), tuple(doc["codes"]["stage2"])),
        )
    except (KeyError, TypeError) as e:
        raise InputError(f"Malformed hierarchy file: {e}") from None


def save(model: HierarchicalModel, path: str) -> str:
    """Write the hierarchy file and return its sha256."""
    text = dumps(model)
    write_text(path, text)
    return digest(text)


def load(path: str) -> HierarchicalModel:
    return loads(read_text(path))
