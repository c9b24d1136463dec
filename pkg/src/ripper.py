"""Classifier 2: ordered rule list learned RIPPER-style.

Classes are handled from the rarest to the most frequent; the most frequent
becomes the default class and gets no rules. For each class, rules are grown
with FOIL gain on two thirds of the remaining data, pruned on the last third,
and added until the description length of the rule set runs more than
`dl_slack_bits` above the best seen so far. Optimization passes then try a
replacement and a revision of every rule and keep whichever variant gives the
shortest description length.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from src.config import (
    RIPPER_DL_SLACK_BITS,
    RIPPER_MIN_RULE_COVERAGE,
    RIPPER_OPTIMIZATION_PASSES,
    RIPPER_PRUNE_FRACTION,
)
from src.errors import ConfigError, DeadRefinementError, InputError, SchemaMismatchError
from src.flowdata import Dataset, make_rng
from src.modelio import FORMAT_VERSION

logger = logging.getLogger(__name__)

GAIN_EPSILON = 1e-12
PROBABILITY_FLOOR = 1e-12
# an accepted rule must be right on more than half of the prune records it covers
MAX_PRUNE_ERROR_RATE = 0.5
OPERATORS = ("<=", ">")


@dataclass(frozen=True)
class Condition:
    feature: int
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise InputError(f"Unknown comparator '{self.op}'")
        if not math.isfinite(self.threshold):
            raise InputError("Condition threshold must be finite")
        if self.feature < 0:
            raise InputError(f"Negative feature index {self.feature}")

    def test(self, values: np.ndarray) -> np.ndarray:
        column = values[:, self.feature]
        return column <= self.threshold if self.op == "<=" else column > self.threshold

    def holds(self, record: Sequence[float]) -> bool:
        x = record[self.feature]
        return x <= self.threshold if self.op == "<=" else x > self.threshold


@dataclass(frozen=True)
class Rule:
    conditions: tuple[Condition, ...]
    target: int

    def covers(self, values: np.ndarray) -> np.ndarray:
        mask = np.ones(values.shape[0], dtype=bool)
        for condition in self.conditions:
            mask &= condition.test(values)
        return mask

    def matches(self, record: Sequence[float]) -> bool:
        return all(c.holds(record) for c in self.conditions)


@dataclass(frozen=True)
class RipperParams:
    prune_fraction: float = RIPPER_PRUNE_FRACTION
    optimization_passes: int = RIPPER_OPTIMIZATION_PASSES
    dl_slack_bits: float = RIPPER_DL_SLACK_BITS
    min_rule_coverage: int = RIPPER_MIN_RULE_COVERAGE
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.prune_fraction < 1:
            raise ConfigError(f"prune_fraction must lie in (0, 1), got {self.prune_fraction}")
        if self.optimization_passes < 0:
            raise ConfigError(f"optimization_passes must be >= 0, got {self.optimization_passes}")
        if self.min_rule_coverage < 1:
            raise ConfigError(f"min_rule_coverage must be >= 1, got {self.min_rule_coverage}")


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    default: int
    classes: tuple[str, ...]
    class_order: tuple[int, ...]
    feature_names: tuple[str, ...]
    params: RipperParams

    @property
    def width(self) -> int:
        return len(self.feature_names)


# --- Heuristics ---


def foil_gain(p0: int, n0: int, p1: int, n1: int) -> float:
    """FOIL information gain of refining a rule covering (p0, n0) to (p1, n1)."""
    if p1 < 1:
        raise DeadRefinementError("refinement covers no positive record")
    if p0 < 1:
        raise ValueError("the unrefined rule must cover at least one positive record")
    return p1 * (math.log2(p1 / (p1 + n1)) - math.log2(p0 / (p0 + n0)))


def _best_condition(values: np.ndarray, positive: np.ndarray) -> tuple[Condition, float] | None:
    """Highest-FOIL-gain condition over all features, midpoints and both comparators."""
    p0 = int(positive.sum())
    n0 = positive.size - p0
    base = math.log2(p0 / (p0 + n0))
    best, best_gain = None, -math.inf
    for feature in range(values.shape[1]):
        column = values[:, feature]
        order = np.argsort(column, kind="stable")
        xs, pos = column[order], positive[order]
        boundaries = np.flatnonzero(xs[1:] > xs[:-1])
        if boundaries.size == 0:
            continue
        left_pos = np.cumsum(pos)[boundaries]
        left_neg = boundaries + 1 - left_pos
        # columns: "<=" then ">" so that ties prefer "<="
        p1 = np.stack([left_pos, p0 - left_pos], axis=1).astype(np.float64)
        n1 = np.stack([left_neg, n0 - left_neg], axis=1).astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = np.where(p1 > 0, p1 * (np.log2(p1 / (p1 + n1)) - base), -np.inf).ravel()
        top = gains.max()
        if not np.isfinite(top) or top <= best_gain + GAIN_EPSILON:
            continue
        k = int(np.flatnonzero(gains >= top - GAIN_EPSILON)[0])
        b = boundaries[k // 2]
        mid = (xs[b] + xs[b + 1]) / 2
        threshold = float(xs[b] if mid >= xs[b + 1] else mid)
        best, best_gain = Condition(feature, OPERATORS[k % 2], threshold), float(top)
    return None if best is None else (best, best_gain)


def grow_rule(values: np.ndarray, positive: np.ndarray, target: int, start: Rule | None = None) -> Rule:
    """Greedily add conditions until no negatives are covered or gain stalls."""
    conditions = list(start.conditions) if start else []
    covered = np.flatnonzero(start.covers(values)) if start else np.arange(values.shape[0])
    if not positive[covered].any():
        raise InputError("Cannot grow a rule without positive records")

    while not positive[covered].all():
        found = _best_condition(values[covered], positive[covered])
        if found is None or found[1] <= GAIN_EPSILON:
            break
        condition = found[0]
        conditions.append(condition)
        covered = covered[condition.test(values[covered])]
    return Rule(tuple(conditions), target)


def rule_value(rule: Rule, values: np.ndarray, positive: np.ndarray) -> float:
    """(p - n) / (p + n) on the given records; -1 when the rule covers none of them."""
    mask = rule.covers(values)
    covered = int(mask.sum())
    if covered == 0:
        return -1.0
    p = int((mask & positive).sum())
    return (p - (covered - p)) / covered


def prune_rule(rule: Rule, values: np.ndarray, positive: np.ndarray) -> Rule:
    """Keep the prefix of conditions with the best prune value; ties keep the shorter rule."""
    if not rule.conditions or values.shape[0] == 0:
        return rule

    mask = np.ones(values.shape[0], dtype=bool)
    best_len, best_value = len(rule.conditions), -math.inf
    for length, condition in enumerate(rule.conditions, start=1):
        mask &= condition.test(values)
        covered = int(mask.sum())
        p = int((mask & positive).sum())
        value = (2 * p - covered) / covered if covered else -1.0
        if value > best_value + GAIN_EPSILON:
            best_len, best_value = length, value
    if not mask.any():
        return rule
    return Rule(rule.conditions[:best_len], rule.target)


# --- Description length ---


def _subset_bits(total: float, chosen: float, p: float) -> float:
    total, chosen = max(total, 0.0), max(chosen, 0.0)
    chosen = min(chosen, total)
    p = min(max(p, PROBABILITY_FLOOR), 1 - PROBABILITY_FLOOR)
    return -chosen * math.log2(p) - (total - chosen) * math.log2(1 - p)


def exception_bits(cover: int, uncover: int, fp: int, fn: int) -> float:
    """Bits to identify the false positives among covered and false negatives among uncovered records."""
    errors = fp + fn
    if errors <= 0:
        return 0.0
    expected = 0.5 * errors
    if cover > uncover:
        covered_bits = _subset_bits(cover, fp, expected / cover)
        uncovered_bits = _subset_bits(uncover, fn, fn / uncover) if uncover > 0 else 0.0
    else:
        covered_bits = _subset_bits(cover, fp, fp / cover) if cover > 0 else 0.0
        uncovered_bits = _subset_bits(uncover, fn, expected / uncover)
    return covered_bits + uncovered_bits


def possible_conditions(values: np.ndarray) -> int:
    """Number of distinct candidate conditions (midpoint x comparator) on this data."""
    return int(sum(2 * max(np.unique(values[:, f]).size - 1, 0) for f in range(values.shape[1])))


def rule_bits(rule: Rule, n_possible: int) -> float:
    k = len(rule.conditions)
    length_prior = 2 * math.floor(math.log2(k + 1)) + 1
    return k * math.log2(max(n_possible, 2)) + length_prior


def description_length_parts(
    rules: Sequence[Rule],
    values: np.ndarray,
    positive: np.ndarray,
    n_possible: int | None = None,
    coverage: dict | None = None,
) -> tuple[float, float]:
    """(model bits, exception bits) of a one-class rule list on the given data."""
    if not rules:
        covered = np.zeros(values.shape[0], dtype=bool)
        model = 0.0
    else:
        if n_possible is None:
            n_possible = possible_conditions(values)
        covered = np.zeros(values.shape[0], dtype=bool)
        for rule in rules:
            covered |= _covers(rule, values, coverage)
        model = sum(rule_bits(rule, n_possible) for rule in rules)

    cover = int(covered.sum())
    fp = int((covered & ~positive).sum())
    fn = int((~covered & positive).sum())
    return model, exception_bits(cover, values.shape[0] - cover, fp, fn)


def ruleset_description_length(
    rules: Sequence[Rule],
    values: np.ndarray,
    positive: np.ndarray,
    n_possible: int | None = None,
    coverage: dict | None = None,
) -> float:
    model, exceptions = description_length_parts(rules, values, positive, n_possible, coverage)
    return model + exceptions


def _covers(rule: Rule, values: np.ndarray, coverage: dict | None) -> np.ndarray:
    if coverage is None:
        return rule.covers(values)
    if rule not in coverage:
        coverage[rule] = rule.covers(values)
    return coverage[rule]


# --- Training ---


def _grow_prune_split(rows: np.ndarray, positive: np.ndarray, fraction: float, rng: np.random.Generator):
    """Stratified shuffle of `rows` into grow and prune parts."""
    pos = rng.permutation(rows[positive[rows]])
    neg = rng.permutation(rows[~positive[rows]])
    kp, kn = int(pos.size * fraction), int(neg.size * fraction)
    grow = np.sort(np.concatenate([pos[kp:], neg[kn:]]))
    prune = np.sort(np.concatenate([pos[:kp], neg[:kn]]))
    return grow, prune


class _ClassLearner:
    """Rule induction for one class against all records of not-yet-handled classes."""

    def __init__(self, values: np.ndarray, positive: np.ndarray, target: int, params: RipperParams, rng):
        self.values = values
        self.positive = positive
        self.target = target
        self.params = params
        self.rng = rng
        self.n_possible = possible_conditions(values)
        self.coverage: dict = {}

    def dl(self, rules: Sequence[Rule]) -> float:
        return ruleset_description_length(rules, self.values, self.positive, self.n_possible, self.coverage)

    def covered(self, rules: Sequence[Rule]) -> np.ndarray:
        mask = np.zeros(self.values.shape[0], dtype=bool)
        for rule in rules:
            mask |= _covers(rule, self.values, self.coverage)
        return mask

    def grow_and_prune(self, rows: np.ndarray, start: Rule | None = None) -> Rule:
        grow, prune = _grow_prune_split(rows, self.positive, self.params.prune_fraction, self.rng)
        rule = grow_rule(self.values[grow], self.positive[grow], self.target, start)
        if prune.size:
            rule = prune_rule(rule, self.values[prune], self.positive[prune])
        return rule

    def cover(self, rules: list[Rule]) -> list[Rule]:
        """Add rules for still-uncovered positives until the DL stopping rule fires."""
        rules = list(rules)
        uncovered = ~self.covered(rules)
        dl_min = self.dl(rules)
        while True:
            rows = np.flatnonzero(uncovered)
            if int(self.positive[rows].sum()) < self.params.min_rule_coverage:
                break
            grow, prune = _grow_prune_split(rows, self.positive, self.params.prune_fraction, self.rng)
            rule = grow_rule(self.values[grow], self.positive[grow], self.target)
            if prune.size:
                rule = prune_rule(rule, self.values[prune], self.positive[prune])
                prune_mask = rule.covers(self.values[prune])
                covered = int(prune_mask.sum())
                wrong = int((prune_mask & ~self.positive[prune]).sum())
                if covered and wrong / covered >= MAX_PRUNE_ERROR_RATE:
                    break

            hits = rule.covers(self.values[rows])
            if int((hits & self.positive[rows]).sum()) < self.params.min_rule_coverage:
                break
            candidate = rules + [rule]
            dl = self.dl(candidate)
            if dl > dl_min + self.params.dl_slack_bits:
                break
            rules, dl_min = candidate, min(dl_min, dl)
            uncovered[rows[hits]] = False
        return rules

    def reduce(self, rules: list[Rule]) -> list[Rule]:
        """Delete, last to first, every rule whose removal shortens the description length."""
        rules = list(rules)
        for i in reversed(range(len(rules))):
            without = rules[:i] + rules[i + 1 :]
            if self.dl(without) < self.dl(rules):
                rules = without
        return rules

    def optimize(self, rules: list[Rule]) -> list[Rule]:
        """One revision pass: try a replacement and a revision of each rule in order."""
        rules = list(rules)
        for i, rule in enumerate(rules):
            rows = np.flatnonzero(~self.covered(rules[:i]))
            if not self.positive[rows].any():
                continue
            variants = [rule]
            for start in (None, rule):
                try:
                    variants.append(self.grow_and_prune(rows, start))
                except InputError:
                    continue
            lengths = [self.dl(rules[:i] + [v] + rules[i + 1 :]) for v in variants]
            rules[i] = variants[int(np.argmin(lengths))]
        return rules

    def learn(self) -> list[Rule]:
        rules = self.reduce(self.cover([]))
        for _ in range(self.params.optimization_passes):
            rules = self.reduce(self.cover(self.optimize(rules)))
        return rules


def train_ripper(train: Dataset, params: RipperParams = RipperParams()) -> RuleSet:
    n = len(train)
    if n == 0:
        raise InputError("Cannot train RIPPER on an empty dataset")

    targets = train.targets
    counts = np.bincount(targets, minlength=len(train.labels))
    present = [c for c in range(len(train.labels)) if counts[c] > 0]
    # rarest first; among equal counts the lower index goes last so it can be the default
    order = sorted(present, key=lambda c: (counts[c], -c))
    rng = make_rng(params.seed)

    rules: list[Rule] = []
    remaining = np.arange(n)
    for target in order[:-1]:
        values = train.values[remaining]
        positive = targets[remaining] == target
        class_rules = _ClassLearner(values, positive, target, params, rng).learn()
        logger.debug("RIPPER class '%s': %d rules", train.labels[target], len(class_rules))
        rules.extend(class_rules)
        remaining = remaining[~positive]

    logger.info("RIPPER trained: %d rules, default '%s'", len(rules), train.labels[order[-1]])
    return RuleSet(tuple(rules), order[-1], train.labels, tuple(order), train.schema.feature_names, params)


# --- Prediction ---


def _check_width(rs: RuleSet, width: int) -> None:
    if width != rs.width:
        raise SchemaMismatchError(f"Record has {width} features, rule set expects {rs.width}")


def predict(rs: RuleSet, record: Sequence[float]) -> str:
    _check_width(rs, len(record))
    for rule in rs.rules:
        if rule.matches(record):
            return rs.classes[rule.target]
    return rs.classes[rs.default]


def predict_batch(rs: RuleSet, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    _check_width(rs, values.shape[1])
    out = np.full(values.shape[0], rs.default, dtype=np.int64)
    open_rows = np.arange(values.shape[0])
    for rule in rs.rules:
        if open_rows.size == 0:
            break
        hit = rule.covers(values[open_rows])
        out[open_rows[hit]] = rule.target
        open_rows = open_rows[~hit]
    return out


# --- Serialization: one rule per line ---


def dumps(rs: RuleSet) -> str:
    header = {
        "classes": list(rs.classes),
        "features": list(rs.feature_names),
        "order": [rs.classes[c] for c in rs.class_order],
        "params": asdict(rs.params),
    }
    lines = [f"flowstack.ruleset v{FORMAT_VERSION}", "header " + json.dumps(header, sort_keys=True)]
    for rule in rs.rules:
        body = {
            "if": [[rs.feature_names[c.feature], c.op, c.threshold] for c in rule.conditions],
            "then": rs.classes[rule.target],
        }
        lines.append("rule " + json.dumps(body, sort_keys=True))
    lines.append("default " + json.dumps(rs.classes[rs.default]))
    return "\n".join(lines) + "\n"


def loads(text: str) -> RuleSet:
    lines = text.splitlines()
    if not lines or lines[0] != f"flowstack.ruleset v{FORMAT_VERSION}":
        raise InputError("Not a flowstack rule set (bad or missing version line)")
    header, rule_bodies, default = None, [], None
    try:
        for line in lines[1:]:
            kind, _, payload = line.partition(" ")
            if kind == "header":
                header = json.loads(payload)
            elif kind == "rule":
                rule_bodies.append(json.loads(payload))
            elif kind == "default":
                default = json.loads(payload)
            elif line.strip():
                raise InputError(f"Unexpected rule set line: {line!r}")
        classes = tuple(header["classes"])
        features = tuple(header["features"])
        rules = tuple(
            Rule(
                tuple(Condition(features.index(name), op, float(t)) for name, op, t in body["if"]),
                classes.index(body["then"]),
            )
            for body in rule_bodies
        )
        return RuleSet(
            rules,
            classes.index(default),
            classes,
            tuple(classes.index(c) for c in header["order"]),
            features,
            RipperParams(**header["params"]),
        )
    except (TypeError, KeyError, ValueError, json.JSONDecodeError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"Malformed rule set: {e}") from None
