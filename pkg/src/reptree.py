"""Classifier 1: information-gain decision tree with reduced-error pruning.

Splits are binary thresholds on numeric features (value <= threshold goes
left). The grow/split primitives here are shared with the penalized forest.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from src.config import REPTREE_MIN_LEAF, REPTREE_PRUNE_FRACTION
from src.errors import ConfigError, InputError, NoSplitError, SchemaMismatchError
from src.flowdata import Dataset, make_rng
from src.modelio import dump_document, load_document

logger = logging.getLogger(__name__)

GAIN_EPSILON = 1e-12


# --- Node types ---


@dataclass(frozen=True)
class Leaf:
    distribution: tuple[int, ...]

    @property
    def label(self) -> int:
        return int(np.argmax(self.distribution))


@dataclass(frozen=True)
class Internal:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    distribution: tuple[int, ...]

    @property
    def label(self) -> int:
        return int(np.argmax(self.distribution))


TreeNode = Leaf | Internal


@dataclass(frozen=True)
class RepTreeParams:
    min_leaf: int = REPTREE_MIN_LEAF
    max_depth: int | None = None
    prune_fraction: float = REPTREE_PRUNE_FRACTION
    pruning: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.prune_fraction < 1:
            raise ConfigError(f"prune_fraction must lie in (0, 1), got {self.prune_fraction}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")


@dataclass(frozen=True)
class RepTreeModel:
    root: TreeNode
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    params: RepTreeParams
    grow_size: int
    prune_size: int

    @property
    def width(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class SplitChoice:
    feature: int
    threshold: float
    gain: float
    merit: float


# --- Split primitives ---


def entropy(counts) -> float:
    """Shannon entropy in bits of a class-count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size == 0 or counts.sum() <= 0:
        raise ValueError("entropy needs at least one positive count")
    return float(_entropy_rows(counts))


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=-1, keepdims=True)
    p = np.divide(counts, totals, out=np.zeros_like(counts, dtype=np.float64), where=totals > 0)
    logs = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logs).sum(axis=-1)


def _class_counts(targets: np.ndarray, n_classes: int) -> np.ndarray:
    return np.bincount(targets, minlength=n_classes)


def _prefix_counts(targets: np.ndarray, n_classes: int) -> np.ndarray:
    """Row i holds the class counts of the first i + 1 entries of `targets`."""
    onehot = np.zeros((targets.size, n_classes), dtype=np.int64)
    onehot[np.arange(targets.size), targets] = 1
    return np.cumsum(onehot, axis=0)


def _midpoint(low: np.ndarray, high: np.ndarray) -> np.ndarray:
    mid = (low + high) / 2
    # adjacent floats can round the midpoint up onto the higher value
    return np.where(mid >= high, low, mid)


def best_numeric_split(
    values: np.ndarray,
    targets: np.ndarray,
    feature: int,
    n_classes: int,
    min_leaf: int = 1,
) -> tuple[float, float]:
    """Best midpoint threshold of one feature and its information gain.

    Ties are broken by the smallest threshold. Raises NoSplitError when the
    feature is constant on these records or no threshold leaves `min_leaf`
    records on both sides.
    """
    column = values[:, feature]
    n = column.size
    if n < 2:
        raise NoSplitError("fewer than two records")

    order = np.argsort(column, kind="stable")
    xs, ys = column[order], targets[order]
    boundaries = np.flatnonzero(xs[1:] > xs[:-1])
    left_sizes = boundaries + 1
    admissible = (left_sizes >= min_leaf) & (n - left_sizes >= min_leaf)
    boundaries, left_sizes = boundaries[admissible], left_sizes[admissible]
    if boundaries.size == 0:
        raise NoSplitError(f"feature {feature} offers no admissible threshold")

    prefix = _prefix_counts(ys, n_classes)
    total = prefix[-1]
    left = prefix[boundaries]
    right = total - left
    gains = (
        _entropy_rows(total.astype(np.float64))
        - (left_sizes / n) * _entropy_rows(left.astype(np.float64))
        - ((n - left_sizes) / n) * _entropy_rows(right.astype(np.float64))
    )
    best = int(np.flatnonzero(gains >= gains.max() - GAIN_EPSILON)[0])
    threshold = _midpoint(xs[boundaries[best]], xs[boundaries[best] + 1])
    return float(threshold), max(float(gains[best]), 0.0)


def choose_split(
    values: np.ndarray,
    targets: np.ndarray,
    n_classes: int,
    min_leaf: int = 1,
    merit: Callable[[float, int], float] | None = None,
    allow_zero_gain: bool = False,
) -> SplitChoice | None:
    """Scan every feature and keep the split with the highest merit.

    Merit defaults to the raw gain; the forest passes a weighted merit. Only
    splits with positive gain qualify unless `allow_zero_gain` is set, in which
    case any admissible threshold does when nothing better exists. Ties go to
    the lowest feature index.
    """
    best = None
    for feature in range(values.shape[1]):
        try:
            threshold, gain = best_numeric_split(values, targets, feature, n_classes, min_leaf)
        except NoSplitError:
            continue
        if gain <= GAIN_EPSILON and not allow_zero_gain:
            continue
        score = gain if merit is None else merit(gain, feature)
        if best is None or score > best.merit + GAIN_EPSILON:
            best = SplitChoice(feature, threshold, gain, score)
    return best


# --- Growing and pruning ---


def grow_tree(
    values: np.ndarray,
    targets: np.ndarray,
    n_classes: int,
    min_leaf: int = 1,
    max_depth: int | None = None,
    merit: Callable[[float, int], float] | None = None,
    zero_gain_splits: bool = False,
) -> TreeNode:
    """Recursive best-merit splitting until purity, size, depth or gain stops it.

    With `zero_gain_splits` an impure node that has no positive-gain split
    still splits on its first admissible threshold. With min_leaf 1 and no
    depth cap, only identical feature vectors then share a leaf.
    """
    if targets.size == 0:
        raise InputError("Cannot grow a tree on an empty record set")
    return _grow(values, targets, n_classes, min_leaf, max_depth, merit, zero_gain_splits, depth=0)


def _grow(values, targets, n_classes, min_leaf, max_depth, merit, zero_gain_splits, depth) -> TreeNode:
    counts = _class_counts(targets, n_classes)
    distribution = tuple(int(c) for c in counts)
    if (
        np.count_nonzero(counts) <= 1
        or targets.size < 2 * min_leaf
        or (max_depth is not None and depth >= max_depth)
    ):
        return Leaf(distribution)

    choice = choose_split(values, targets, n_classes, min_leaf, merit, zero_gain_splits)
    if choice is None:
        return Leaf(distribution)

    goes_left = values[:, choice.feature] <= choice.threshold
    settings = (n_classes, min_leaf, max_depth, merit, zero_gain_splits)
    return Internal(
        choice.feature,
        choice.threshold,
        _grow(values[goes_left], targets[goes_left], *settings, depth + 1),
        _grow(values[~goes_left], targets[~goes_left], *settings, depth + 1),
        distribution,
    )


def reduced_error_prune(root: TreeNode, values: np.ndarray, targets: np.ndarray) -> TreeNode:
    """Bottom-up: collapse a subtree into its majority leaf unless that adds prune-set errors."""
    if targets.size == 0:
        raise InputError("Pruning needs a non-empty prune set")
    pruned, _ = _prune(root, values, targets)
    return pruned


def _prune(node: TreeNode, values: np.ndarray, targets: np.ndarray) -> tuple[TreeNode, int]:
    if isinstance(node, Leaf):
        return node, int(np.count_nonzero(targets != node.label))

    goes_left = values[:, node.feature] <= node.threshold
    left, left_errors = _prune(node.left, values[goes_left], targets[goes_left])
    right, right_errors = _prune(node.right, values[~goes_left], targets[~goes_left])
    subtree_errors = left_errors + right_errors
    leaf_errors = int(np.count_nonzero(targets != node.label))
    if leaf_errors <= subtree_errors:
        return Leaf(node.distribution), leaf_errors
    return Internal(node.feature, node.threshold, left, right, node.distribution), subtree_errors


def count_errors(root: TreeNode, values: np.ndarray, targets: np.ndarray) -> int:
    return int(np.count_nonzero(route(root, values) != targets))


def train_rep_tree(train: Dataset, params: RepTreeParams = RepTreeParams()) -> RepTreeModel:
    """Shuffle, grow on the first part, prune on the held-out remainder."""
    n = len(train)
    if n == 0:
        raise InputError("Cannot train a REP tree on an empty dataset")

    order = make_rng(params.seed).permutation(n)
    prune_size = int(n * params.prune_fraction) if params.pruning else 0
    if prune_size >= n:
        prune_size = 0
    grow_rows, prune_rows = order[: n - prune_size], order[n - prune_size :]

    values, targets = train.values, train.targets
    n_classes = len(train.labels)
    # unpruned trees fit every consistent grow set
    root = grow_tree(
        values[grow_rows],
        targets[grow_rows],
        n_classes,
        params.min_leaf,
        params.max_depth,
        zero_gain_splits=not params.pruning,
    )
    if prune_size:
        root = reduced_error_prune(root, values[prune_rows], targets[prune_rows])

    logger.info(
        "REP tree trained: %d nodes, grow=%d prune=%d", node_count(root), n - prune_size, prune_size
    )
    return RepTreeModel(root, train.labels, train.schema.feature_names, params, n - prune_size, prune_size)


# --- Prediction ---


def route(root: TreeNode, values: np.ndarray) -> np.ndarray:
    """Leaf label of every row of `values`."""
    out = np.empty(values.shape[0], dtype=np.int64)
    _route(root, values, np.arange(values.shape[0]), out)
    return out


def _route(node: TreeNode, values: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
    if rows.size == 0:
        return
    if isinstance(node, Leaf):
        out[rows] = node.label
        return
    goes_left = values[rows, node.feature] <= node.threshold
    _route(node.left, values, rows[goes_left], out)
    _route(node.right, values, rows[~goes_left], out)


def leaf_for(root: TreeNode, record: Sequence[float]) -> Leaf:
    node = root
    while isinstance(node, Internal):
        node = node.left if record[node.feature] <= node.threshold else node.right
    return node


def _check_width(model: RepTreeModel, width: int) -> None:
    if width != model.width:
        raise SchemaMismatchError(f"Record has {width} features, model expects {model.width}")


def predict(model: RepTreeModel, record: Sequence[float]) -> tuple[str, np.ndarray]:
    """Class label and normalized leaf distribution for one record."""
    _check_width(model, len(record))
    leaf = leaf_for(model.root, record)
    counts = np.asarray(leaf.distribution, dtype=np.float64)
    return model.classes[leaf.label], counts / counts.sum()


def predict_batch(model: RepTreeModel, values: np.ndarray) -> np.ndarray:
    """Class indices (into `model.classes`) for a matrix of records."""
    values = np.asarray(values, dtype=np.float64)
    _check_width(model, values.shape[1])
    return route(model.root, values)


# --- Inspection and serialization ---


def node_count(root: TreeNode) -> int:
    if isinstance(root, Leaf):
        return 1
    return 1 + node_count(root.left) + node_count(root.right)


def tested_depths(root: TreeNode) -> dict[int, int]:
    """Minimum depth (root = 1) at which each tested feature appears."""
    depths: dict[int, int] = {}
    stack = [(root, 1)]
    while stack:
        node, depth = stack.pop()
        if isinstance(node, Internal):
            depths[node.feature] = min(depth, depths.get(node.feature, depth))
            stack.append((node.left, depth + 1))
            stack.append((node.right, depth + 1))
    return depths


def tree_to_records(root: TreeNode) -> list[dict]:
    """Flatten a tree into pre-order node records with explicit child ids."""
    records: list[dict] = []

    def visit(node: TreeNode) -> int:
        node_id = len(records)
        record = {"id": node_id, "distribution": list(node.distribution)}
        records.append(record)
        if isinstance(node, Internal):
            record["feature"] = node.feature
            record["threshold"] = node.threshold
            record["left"] = visit(node.left)
            record["right"] = visit(node.right)
        return node_id

    visit(root)
    return records


def tree_from_records(records: list[dict]) -> TreeNode:
    by_id = {r["id"]: r for r in records}

    def build(node_id: int) -> TreeNode:
        r = by_id[node_id]
        distribution = tuple(int(c) for c in r["distribution"])
        if "feature" not in r:
            return Leaf(distribution)
        return Internal(int(r["feature"]), float(r["threshold"]), build(r["left"]), build(r["right"]), distribution)

    try:
        return build(0)
    except KeyError as e:
        raise InputError(f"Tree records reference missing node {e}") from None


def dumps(model: RepTreeModel) -> str:
    return dump_document(
        "reptree",
        {
            "classes": list(model.classes),
            "features": list(model.feature_names),
            "params": asdict(model.params),
            "grow_size": model.grow_size,
            "prune_size": model.prune_size,
            "nodes": tree_to_records(model.root),
        },
    )


def loads(text: str) -> RepTreeModel:
    doc = load_document(text, "reptree")
    return RepTreeModel(
        tree_from_records(doc["nodes"]),
        tuple(doc["classes"]),
        tuple(doc["features"]),
        RepTreeParams(**doc["params"]),
        doc["grow_size"],
        doc["prune_size"],
    )
