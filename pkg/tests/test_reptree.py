import itertools

import numpy as np
import pytest

from src import reptree
from src.errors import ConfigError, NoSplitError, SchemaMismatchError
from src.flowdata import dataset_from_arrays
from src.reptree import (
    Internal,
    Leaf,
    RepTreeParams,
    best_numeric_split,
    count_errors,
    entropy,
    grow_tree,
    reduced_error_prune,
    route,
    tested_depths,
    train_rep_tree,
)


def walk(node, record):
    while isinstance(node, Internal):
        node = node.left if record[node.feature] <= node.threshold else node.right
    return node.label


def consistent_grid_data(seed, n=30, width=3, levels=3, n_classes=3):
    """Integer features with labels a fixed function of the whole row."""
    rng = np.random.default_rng(seed)
    values = rng.integers(0, levels, size=(n, width))
    table = rng.integers(0, n_classes, size=levels**width)
    targets = table[values @ (levels ** np.arange(width))]
    return values.astype(float), targets


def brute_force_split(column, targets, n_classes):
    """Every midpoint of distinct adjacent values, scored directly."""
    parent = entropy(np.bincount(targets, minlength=n_classes))
    distinct = np.unique(column)
    best = None
    for low, high in zip(distinct[:-1], distinct[1:]):
        threshold = (low + high) / 2
        left = targets[column <= threshold]
        right = targets[column > threshold]
        gain = (
            parent
            - left.size / targets.size * entropy(np.bincount(left, minlength=n_classes))
            - right.size / targets.size * entropy(np.bincount(right, minlength=n_classes))
        )
        if best is None or gain > best[1] + 1e-12:
            best = (threshold, gain)
    return best


class TestEntropy:
    def test_known_values(self):
        assert entropy([4, 4]) == pytest.approx(1.0)
        assert entropy([8, 0]) == 0.0
        assert entropy([1, 3]) == pytest.approx(0.811278, abs=1e-6)

    def test_empty_counts(self):
        with pytest.raises(ValueError):
            entropy([0, 0])


class TestBestNumericSplit:
    def test_clean_separation(self):
        values = np.array([[1.0], [2.0], [9.0], [10.0]])
        targets = np.array([0, 0, 1, 1])
        threshold, gain = best_numeric_split(values, targets, 0, 2)
        assert threshold == 5.5
        assert gain == pytest.approx(1.0)

    def test_constant_feature(self):
        with pytest.raises(NoSplitError):
            best_numeric_split(np.ones((5, 1)), np.array([0, 1, 0, 1, 0]), 0, 2)

    def test_min_leaf_rules_out_every_threshold(self):
        values = np.array([[1.0], [2.0], [3.0]])
        with pytest.raises(NoSplitError):
            best_numeric_split(values, np.array([0, 1, 0]), 0, 2, min_leaf=2)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force_on_small_sets(self, seed):
        rng = np.random.default_rng(seed)
        column = rng.integers(0, 6, size=12).astype(float)
        if np.unique(column).size < 2:
            column[0] = column[1] + 1
        targets = rng.integers(0, 3, size=12)
        threshold, gain = best_numeric_split(column.reshape(-1, 1), targets, 0, 3)
        expected_threshold, expected_gain = brute_force_split(column, targets, 3)
        assert gain == pytest.approx(expected_gain, abs=1e-12)
        assert threshold == expected_threshold


class TestGrowTree:
    def test_single_class_is_a_leaf(self):
        root = grow_tree(np.random.default_rng(0).uniform(size=(20, 3)), np.zeros(20, dtype=np.int64), 2)
        assert root == Leaf((20, 0))

    @pytest.mark.parametrize("seed", range(20))
    def test_unpruned_tree_fits_consistent_data(self, seed):
        rng = np.random.default_rng(seed)
        values = rng.uniform(size=(60, 4))
        targets = rng.integers(0, 3, size=60)
        root = grow_tree(values, targets, 3, zero_gain_splits=True)
        assert np.array_equal(route(root, values), targets)

    def test_xor_needs_a_zero_gain_first_split(self):
        values = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        targets = np.array([0, 1, 1, 0])
        assert grow_tree(values, targets, 2) == Leaf((2, 2))
        root = grow_tree(values, targets, 2, zero_gain_splits=True)
        assert np.array_equal(route(root, values), targets)
        assert (root.feature, root.threshold) == (0, 0.5)

    @pytest.mark.parametrize("seed", range(20))
    def test_zero_gain_splits_fit_discrete_consistent_data(self, seed):
        values, targets = consistent_grid_data(seed)
        root = grow_tree(values, targets, 3, zero_gain_splits=True)
        assert np.array_equal(route(root, values), targets)

    @pytest.mark.slow
    def test_zero_gain_splits_fit_200_consistent_datasets(self):
        for seed in range(200):
            values, targets = consistent_grid_data(seed)
            root = grow_tree(values, targets, 3, zero_gain_splits=True)
            assert np.array_equal(route(root, values), targets), f"seed {seed}"

    def test_max_depth_zero(self):
        root = grow_tree(np.array([[0.0], [1.0]]), np.array([0, 1]), 2, max_depth=0)
        assert isinstance(root, Leaf)

    def test_tested_depths_reports_the_shallowest_use(self):
        tree = Internal(0, 0.5, Internal(1, 0.5, Leaf((1, 0)), Leaf((0, 1)), (1, 1)), Leaf((0, 1)), (1, 2))
        assert tested_depths(tree) == {0: 1, 1: 2}


class TestReducedErrorPrune:
    def test_single_leaf_is_unchanged(self):
        leaf = Leaf((3, 1))
        assert reduced_error_prune(leaf, np.zeros((4, 1)), np.array([0, 1, 1, 1])) == leaf

    def test_collapses_a_split_that_does_not_help(self):
        tree = Internal(0, 0.5, Leaf((3, 0)), Leaf((1, 2)), (4, 2))
        prune_values = np.array([[0.2], [0.8], [0.9]])
        prune_targets = np.array([0, 0, 0])
        assert reduced_error_prune(tree, prune_values, prune_targets) == Leaf((4, 2))

    def test_keeps_a_split_that_helps(self):
        tree = Internal(0, 0.5, Leaf((3, 0)), Leaf((0, 3)), (3, 3))
        prune_values = np.array([[0.2], [0.8], [0.9]])
        prune_targets = np.array([0, 1, 1])
        assert reduced_error_prune(tree, prune_values, prune_targets) == tree

    @pytest.mark.parametrize("seed", range(20))
    def test_never_adds_prune_set_errors(self, seed):
        rng = np.random.default_rng(seed)
        values = rng.uniform(size=(80, 3))
        targets = (values[:, 0] + rng.normal(0, 0.3, 80) > 0.5).astype(np.int64)
        tree = grow_tree(values[:50], targets[:50], 2)
        pruned = reduced_error_prune(tree, values[50:], targets[50:])
        assert count_errors(pruned, values[50:], targets[50:]) <= count_errors(tree, values[50:], targets[50:])
        assert reptree.node_count(pruned) <= reptree.node_count(tree)

    @pytest.mark.slow
    def test_never_adds_prune_set_errors_500_pairs(self):
        for seed in range(500):
            rng = np.random.default_rng(1000 + seed)
            values = rng.integers(0, 4, size=(60, 3)).astype(float)
            targets = rng.integers(0, 3, size=60)
            tree = grow_tree(values[:40], targets[:40], 3)
            before = count_errors(tree, values[40:], targets[40:])
            pruned = reduced_error_prune(tree, values[40:], targets[40:])
            assert count_errors(pruned, values[40:], targets[40:]) <= before, f"seed {seed}"


def planted_threshold(n, seed):
    """Label "hi" when f1 > 0.5, with nothing in (0.45, 0.55); f2 is noise."""
    rng = np.random.default_rng(seed)
    f1 = rng.uniform(0, 0.9, n)
    f1 = np.where(f1 > 0.45, f1 + 0.1, f1)
    values = np.column_stack([f1, rng.uniform(size=n)])
    return dataset_from_arrays(values, np.where(f1 > 0.5, "hi", "lo").tolist(), fine_labels=("hi", "lo"))


class TestTrainRepTree:
    def test_learns_a_planted_threshold(self):
        model = train_rep_tree(planted_threshold(300, 1), RepTreeParams(seed=1))
        fresh = planted_threshold(100, 2)
        accuracy = np.mean(reptree.predict_batch(model, fresh.values) == fresh.targets)
        assert accuracy >= 0.99
        assert model.grow_size + model.prune_size == 300

    def test_same_seed_same_tree(self):
        data = planted_threshold(200, 3)
        first = reptree.dumps(train_rep_tree(data, RepTreeParams(seed=5)))
        second = reptree.dumps(train_rep_tree(data, RepTreeParams(seed=5)))
        assert first == second

    def test_without_pruning_everything_is_grown_on(self):
        model = train_rep_tree(planted_threshold(30, 4), RepTreeParams(pruning=False))
        assert (model.grow_size, model.prune_size) == (30, 0)

    def test_unpruned_model_fits_xor(self):
        values = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        labels = ["same", "diff", "diff", "same"]
        data = dataset_from_arrays(values, labels)
        model = train_rep_tree(data, RepTreeParams(min_leaf=1, pruning=False))
        predicted = [model.classes[i] for i in reptree.predict_batch(model, values)]
        assert predicted == labels

    @pytest.mark.parametrize(
        "kwargs", [{"prune_fraction": 0.0}, {"prune_fraction": 1.0}, {"min_leaf": 0}, {"max_depth": -1}]
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(ConfigError):
            RepTreeParams(**kwargs)


class TestPredict:
    @pytest.fixture
    def model(self):
        return train_rep_tree(planted_threshold(150, 7), RepTreeParams(seed=7))

    def test_distribution_is_normalized(self, model):
        label, distribution = reptree.predict(model, [0.9, 0.1])
        assert label == "hi"
        assert distribution.sum() == pytest.approx(1.0)

    def test_single_leaf_model_predicts_its_class(self):
        data = dataset_from_arrays(np.zeros((5, 2)), ["only"] * 5)
        model = train_rep_tree(data)
        assert reptree.predict(model, [3.0, -1.0])[0] == "only"

    def test_width_mismatch(self, model):
        with pytest.raises(SchemaMismatchError):
            reptree.predict(model, [0.1, 0.2, 0.3])
        with pytest.raises(SchemaMismatchError):
            reptree.predict_batch(model, np.zeros((2, 3)))

    def test_batch_matches_tree_walk(self, model):
        probes = np.random.default_rng(8).uniform(-0.5, 1.5, size=(1000, 2))
        expected = [walk(model.root, row) for row in probes]
        assert reptree.predict_batch(model, probes).tolist() == expected
        assert [model.classes[i] for i in expected] == [reptree.predict(model, row)[0] for row in probes]

    def test_serialized_model_predicts_the_same(self, model):
        text = reptree.dumps(model)
        back = reptree.loads(text)
        grid = np.array(list(itertools.product([0.0, 0.3, 0.5, 0.7, 1.0], repeat=2)))
        probes = np.vstack([grid, np.random.default_rng(11).uniform(-0.5, 1.5, size=(1000, 2))])
        assert np.array_equal(reptree.predict_batch(back, probes), reptree.predict_batch(model, probes))
        assert reptree.dumps(back) == text
