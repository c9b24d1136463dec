import numpy as np
import pytest

from src import ripper
from src.errors import ConfigError, DeadRefinementError, InputError, SchemaMismatchError
from src.flowdata import dataset_from_arrays
from src.ripper import (
    Condition,
    Rule,
    RipperParams,
    RuleSet,
    description_length_parts,
    foil_gain,
    grow_rule,
    prune_rule,
    rule_value,
    ruleset_description_length,
    train_ripper,
)


def hand_rules(rules, default=2):
    return RuleSet(tuple(rules), default, ("a", "b", "c"), (0, 1, 2), ("f1", "f2"), RipperParams())


def best_prefix(rule, values, positive):
    """Score every prefix with rule_value; keep the shortest of the best."""
    if not rule.covers(values).any():
        return rule
    prefixes = [Rule(rule.conditions[:k], rule.target) for k in range(1, len(rule.conditions) + 1)]
    scores = [rule_value(prefix, values, positive) for prefix in prefixes]
    top = max(scores)
    return next(prefix for prefix, score in zip(prefixes, scores) if score >= top - 1e-12)


class TestFoilGain:
    def test_known_value(self):
        assert foil_gain(5, 5, 3, 1) == pytest.approx(1.754887, abs=1e-6)

    def test_no_change_gains_nothing(self):
        assert foil_gain(4, 6, 4, 6) == pytest.approx(0.0)

    def test_purifying_gains(self):
        assert foil_gain(4, 6, 4, 0) > 0

    def test_refinement_without_positives(self):
        with pytest.raises(DeadRefinementError):
            foil_gain(4, 6, 0, 3)


class TestGrowRule:
    def test_pure_start_needs_no_condition(self):
        rule = grow_rule(np.random.default_rng(0).uniform(size=(5, 2)), np.ones(5, dtype=bool), 0)
        assert rule.conditions == ()

    @pytest.mark.parametrize("seed", range(5))
    def test_single_positive_is_isolated(self, seed):
        rng = np.random.default_rng(seed)
        values = rng.uniform(size=(10, 3))
        positive = np.zeros(10, dtype=bool)
        positive[rng.integers(10)] = True
        covered = grow_rule(values, positive, 1).covers(values)
        assert covered[positive].all()
        assert not covered[~positive].any()

    def test_planted_conjunction_covers_only_positives(self, planted_and):
        data = planted_and(300, 1, margin=False)
        positive = data.targets == 0
        rule = grow_rule(data.values, positive, 0)
        covered = rule.covers(data.values)
        assert not covered[~positive].any()
        assert covered[positive].any()

    def test_no_positives(self):
        with pytest.raises(InputError):
            grow_rule(np.zeros((3, 1)), np.zeros(3, dtype=bool), 0)


class TestPruneRule:
    def test_drops_a_condition_that_hurts_on_prune_rows(self):
        values = np.array(
            [[0.9, 0.3], [0.8, 0.4], [0.7, 0.5], [0.6, 0.6], [0.9, 0.7], [0.8, 0.8], [0.7, 0.1], [0.6, 0.0], [0.1, 0.9]]
        )
        positive = np.array([True] * 6 + [False] * 3)
        first = Condition(0, ">", 0.5)
        rule = Rule((first, Condition(1, "<=", 0.2)), target=0)
        assert prune_rule(rule, values, positive) == Rule((first,), 0)

    def test_perfect_rule_is_kept(self):
        values = np.array([[0.1], [0.2], [0.8], [0.9]])
        positive = np.array([False, False, True, True])
        rule = Rule((Condition(0, ">", 0.5),), 0)
        assert prune_rule(rule, values, positive) == rule

    def test_rule_covering_no_prune_rows_is_unchanged(self):
        rule = Rule((Condition(0, ">", 5.0), Condition(0, "<=", 6.0)), 0)
        assert prune_rule(rule, np.array([[0.0], [1.0]]), np.array([True, False])) == rule

    @pytest.mark.parametrize("seed", range(200))
    def test_matches_an_exhaustive_prefix_scan(self, seed):
        rng = np.random.default_rng(seed)
        values = rng.uniform(size=(40, 3))
        positive = rng.uniform(size=40) < 0.5
        conditions = tuple(
            Condition(int(rng.integers(3)), str(rng.choice(["<=", ">"])), float(rng.uniform(0.2, 0.8)))
            for _ in range(int(rng.integers(1, 5)))
        )
        rule = Rule(conditions, 0)
        assert prune_rule(rule, values, positive) == best_prefix(rule, values, positive)

    def test_rule_value(self):
        rule = Rule((Condition(0, ">", 0.5),), 0)
        values = np.array([[0.6], [0.7], [0.1]])
        assert rule_value(rule, values, np.array([True, False, True])) == 0.0
        assert rule_value(Rule((Condition(0, ">", 9.0),), 0), values, np.ones(3, dtype=bool)) == -1.0


class TestDescriptionLength:
    @pytest.fixture
    def ramp(self):
        values = (np.arange(20) / 20).reshape(-1, 1)
        return values, values[:, 0] > 0.5

    def test_empty_rules_on_negative_data(self, ramp):
        values, _ = ramp
        assert ruleset_description_length([], values, np.zeros(20, dtype=bool)) == 0.0

    def test_a_correct_rule_shortens_the_description(self, ramp):
        values, positive = ramp
        rule = Rule((Condition(0, ">", 0.5),), 0)
        assert ruleset_description_length([rule], values, positive) < ruleset_description_length([], values, positive)

    def test_duplicate_rule_costs_model_bits_only(self, ramp):
        values, positive = ramp
        rule = Rule((Condition(0, ">", 0.5),), 0)
        model_once, exceptions_once = description_length_parts([rule], values, positive)
        model_twice, exceptions_twice = description_length_parts([rule, rule], values, positive)
        assert model_twice > model_once
        assert exceptions_twice == exceptions_once


class TestTrainRipper:
    @pytest.mark.parametrize("seed", range(20))
    def test_planted_conjunction(self, planted_and, seed):
        rs = train_ripper(planted_and(500, seed), RipperParams(seed=seed))
        fresh = planted_and(200, seed + 100)
        accuracy = np.mean(ripper.predict_batch(rs, fresh.values) == fresh.targets)
        assert accuracy >= 0.99
        assert len(rs.rules) <= 3
        assert rs.classes[rs.default] == "B"

    def test_single_class_has_no_rules(self):
        rs = train_ripper(dataset_from_arrays(np.zeros((4, 2)), ["only"] * 4))
        assert rs.rules == ()
        assert ripper.predict(rs, [1.0, 2.0]) == "only"

    def test_classes_are_learned_rarest_first(self):
        labels = ["A"] * 20 + ["B"] * 10 + ["C"] * 5
        values = np.arange(35, dtype=float).reshape(-1, 1)
        rs = train_ripper(dataset_from_arrays(values, labels, fine_labels=("A", "B", "C")))
        assert [rs.classes[c] for c in rs.class_order] == ["C", "B", "A"]
        assert rs.classes[rs.default] == "A"

    def test_equal_counts_default_to_the_lowest_index(self):
        values = np.arange(20, dtype=float).reshape(-1, 1)
        rs = train_ripper(dataset_from_arrays(values, ["A"] * 10 + ["B"] * 10, fine_labels=("A", "B")))
        assert rs.classes[rs.default] == "A"

    def test_same_seed_same_rules(self, planted_and):
        data = planted_and(300, 9, margin=False)
        assert ripper.dumps(train_ripper(data, RipperParams(seed=2))) == ripper.dumps(
            train_ripper(data, RipperParams(seed=2))
        )

    @pytest.mark.parametrize(
        "kwargs", [{"prune_fraction": 0.0}, {"optimization_passes": -1}, {"min_rule_coverage": 0}]
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(ConfigError):
            RipperParams(**kwargs)


class TestPredict:
    def test_first_matching_rule_wins(self):
        rs = hand_rules(
            [
                Rule((Condition(0, ">", 5.0),), 0),
                Rule((Condition(1, ">", 5.0),), 1),
                Rule((Condition(1, ">", 1.0),), 0),
            ]
        )
        assert ripper.predict(rs, [0.0, 7.0]) == "b"
        assert ripper.predict(rs, [9.0, 7.0]) == "a"
        assert ripper.predict(rs, [0.0, 0.0]) == "c"

    def test_empty_rule_list_returns_default(self):
        assert ripper.predict(hand_rules([], default=1), [3.0, 4.0]) == "b"

    def test_width_mismatch(self):
        with pytest.raises(SchemaMismatchError):
            ripper.predict(hand_rules([]), [1.0])

    def test_batch_matches_single_predictions(self, planted_and):
        rs = train_ripper(planted_and(400, 3, margin=False), RipperParams(seed=3))
        probes = np.random.default_rng(4).uniform(size=(1000, 3))
        single = [ripper.predict(rs, row) for row in probes]
        assert [rs.classes[i] for i in ripper.predict_batch(rs, probes)] == single


class TestSerialization:
    def test_text_is_stable_and_predictions_survive(self, planted_and):
        rs = train_ripper(planted_and(300, 5, margin=False), RipperParams(seed=5))
        text = ripper.dumps(rs)
        back = ripper.loads(text)
        assert ripper.dumps(back) == text
        probes = np.random.default_rng(6).uniform(size=(1000, 3))
        assert np.array_equal(ripper.predict_batch(back, probes), ripper.predict_batch(rs, probes))

    @pytest.mark.parametrize("text", ["", "garbage\n", "flowstack.ruleset v1\nrule {broken\n"])
    def test_malformed_text(self, text):
        with pytest.raises(InputError):
            ripper.loads(text)
