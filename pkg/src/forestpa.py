"""Classifier 3: bagged unpruned trees with attribute-penalizing split merit.

Each tree picks splits by gain x weight. After a tree is grown, every feature
it tests gets a fresh weight drawn from a range that depends on the shallowest
depth it was tested at (root use is penalized hardest); every feature it does
not test recovers a fraction of its distance to 1.

Bootstrap samples depend only on the per-tree seed, so they are drawn on a
thread pool. Growth stays sequential because each tree needs the weights left
by the one before it.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from tqdm import tqdm

from src.config import (
    FOREST_MIN_LEAF,
    FOREST_MIN_WEIGHT,
    FOREST_TREE_COUNT,
    FOREST_WEIGHT_INCREMENT,
)
from src.errors import ConfigError, InputError, SchemaMismatchError
from src.flowdata import PRNG_NAME, Dataset, make_rng
from src.modelio import dump_document, load_document
from src.reptree import TreeNode, grow_tree, leaf_for, route, tested_depths, tree_from_records, tree_to_records

logger = logging.getLogger(__name__)

# sub-stream of a tree's seed used for its weight draws
WEIGHT_STREAM = 1


@dataclass(frozen=True)
class AttributeWeights:
    weights: tuple[float, ...]
    last_tested_depth: tuple[int | None, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.last_tested_depth):
            raise InputError("weights and last_tested_depth differ in length")
        bad = [w for w in self.weights if not 0 < w <= 1]
        if bad:
            raise InputError(f"Attribute weights must lie in (0, 1], got {bad}")

    @classmethod
    def initial(cls, width: int) -> "AttributeWeights":
        return cls((1.0,) * width, (None,) * width)


@dataclass(frozen=True)
class PaTreeParams:
    tree_count: int = FOREST_TREE_COUNT
    min_leaf: int = FOREST_MIN_LEAF
    max_depth: int | None = None
    weight_increment_rate: float = FOREST_WEIGHT_INCREMENT
    seed: int = 0

    def __post_init__(self):
        if self.tree_count < 1:
            raise ConfigError(f"tree_count must be >= 1, got {self.tree_count}")
        if not 0 < self.weight_increment_rate < 1:
            raise ConfigError(f"weight_increment_rate must lie in (0, 1), got {self.weight_increment_rate}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")


@dataclass(frozen=True)
class ForestPaModel:
    trees: tuple[TreeNode, ...]
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    tree_seeds: tuple[int, ...]
    weights: AttributeWeights
    # weight vector in force when each tree was grown, plus the final one
    weight_trace: tuple[tuple[float, ...], ...]
    params: PaTreeParams

    @property
    def width(self) -> int:
        return len(self.feature_names)


# --- Bagging ---


def bootstrap_indices(n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise InputError("Cannot bootstrap an empty dataset")
    return make_rng(seed).integers(0, n, size=n)


def bootstrap_sample(train: Dataset, seed: int) -> Dataset:
    rows = bootstrap_indices(len(train), seed)
    return train.take(rows, f"bootstrap_sample: seed={seed} prng={PRNG_NAME} draws={len(rows)}")


# --- Attribute penalties ---


def weighted_split_merit(gain: float, weight: float) -> float:
    if gain < 0:
        raise ValueError(f"gain must be >= 0, got {gain}")
    if not 0 < weight <= 1:
        raise ValueError(f"weight must lie in (0, 1], got {weight}")
    return gain * weight


def depth_range(depth: int) -> tuple[float, float]:
    """Half-open weight range for a feature first tested at `depth` (root = 1)."""
    return (depth - 1) / (depth + 1), depth / (depth + 1)


def penalize_and_refresh(
    weights: AttributeWeights,
    tree: TreeNode,
    rng: np.random.Generator,
    eta: float = FOREST_WEIGHT_INCREMENT,
) -> AttributeWeights:
    """Weights for the next tree. Draws happen in feature order."""
    depths = tested_depths(tree)
    new_weights, new_depths = [], []
    for feature, w in enumerate(weights.weights):
        depth = depths.get(feature)
        if depth is None:
            w = w + eta * (1 - w)
            new_depths.append(weights.last_tested_depth[feature])
        else:
            w = float(rng.uniform(*depth_range(depth)))
            new_depths.append(depth)
        new_weights.append(min(max(w, FOREST_MIN_WEIGHT), 1.0))
    return AttributeWeights(tuple(new_weights), tuple(new_depths))


# --- Training ---


def train_forest(train: Dataset, params: PaTreeParams = PaTreeParams(), threads: int | None = None) -> ForestPaModel:
    n = len(train)
    if n == 0:
        raise InputError("Cannot train a forest on an empty dataset")

    values, targets = train.values, train.targets
    n_classes = len(train.labels)
    seeds = tuple(params.seed + i for i in range(1, params.tree_count + 1))
    weights = AttributeWeights.initial(train.schema.width)
    trace = [weights.weights]
    trees = []

    with ThreadPoolExecutor(max_workers=threads) as pool:
        samples = pool.map(lambda s: bootstrap_indices(n, s), seeds)
        for seed, rows in tqdm(zip(seeds, samples), total=len(seeds), desc="Forest PA", unit="tree", disable=None):
            current = weights.weights
            root = grow_tree(
                values[rows],
                targets[rows],
                n_classes,
                params.min_leaf,
                params.max_depth,
                merit=lambda gain, f: weighted_split_merit(gain, current[f]),
            )
            trees.append(root)
            weights = penalize_and_refresh(
                weights, root, make_rng(seed, WEIGHT_STREAM), params.weight_increment_rate
            )
            trace.append(weights.weights)
            logger.debug("tree seed=%d tested %s", seed, sorted(tested_depths(root).items()))

    logger.info("Forest PA trained: %d trees on %d rows", len(trees), n)
    return ForestPaModel(
        tuple(trees), train.labels, train.schema.feature_names, seeds, weights, tuple(trace), params
    )


# --- Prediction ---


def _check_width(model: ForestPaModel, width: int) -> None:
    if width != model.width:
        raise SchemaMismatchError(f"Record has {width} features, forest expects {model.width}")


def votes(model: ForestPaModel, values: np.ndarray) -> np.ndarray:
    """Per-row vote counts, shape (rows, classes)."""
    values = np.asarray(values, dtype=np.float64)
    _check_width(model, values.shape[1])
    tally = np.zeros((values.shape[0], len(model.classes)), dtype=np.int64)
    rows = np.arange(values.shape[0])
    for root in model.trees:
        np.add.at(tally, (rows, route(root, values)), 1)
    return tally


def predict(model: ForestPaModel, record: Sequence[float]) -> tuple[str, np.ndarray]:
    """Majority label (lowest class index on ties) and the vote counts."""
    _check_width(model, len(record))
    tally = np.zeros(len(model.classes), dtype=np.int64)
    for root in model.trees:
        tally[leaf_for(root, record).label] += 1
    return model.classes[int(np.argmax(tally))], tally


def predict_batch(model: ForestPaModel, values: np.ndarray) -> np.ndarray:
    return np.argmax(votes(model, values), axis=1)


# --- Serialization ---


def dumps(model: ForestPaModel) -> str:
    return dump_document(
        "forestpa",
        {
            "classes": list(model.classes),
            "features": list(model.feature_names),
            "params": asdict(model.params),
            "tree_seeds": list(model.tree_seeds),
            "weights": {
                "final": list(model.weights.weights),
                "last_tested_depth": list(model.weights.last_tested_depth),
                "trace": [list(w) for w in model.weight_trace],
            },
            "trees": [tree_to_records(root) for root in model.trees],
        },
    )


def loads(text: str) -> ForestPaModel:
    doc = load_document(text, "forestpa")
    try:
        weights = doc["weights"]
        return ForestPaModel(
            tuple(tree_from_records(records) for records in doc["trees"]),
            tuple(doc["classes"]),
            tuple(doc["features"]),
            tuple(doc["tree_seeds"]),
            AttributeWeights(tuple(weights["final"]), tuple(weights["last_tested_depth"])),
            tuple(tuple(w) for w in weights["trace"]),
            PaTreeParams(**doc["params"]),
        )
    except (KeyError, TypeError) as e:
        raise InputError(f"Malformed forest file: {e}") from None
