"""Command-line pipeline: clean, split, train, evaluate, predict.

Run with `python -m src.cli <command> ...`. Settings resolve as
defaults (src/config.py, .env) < --config INI file < command-line flags.
"""

import argparse
import configparser
import csv
import logging
import os
import sys
import time
from dataclasses import dataclass, field, replace

from src import stack
from src.config import (
    CATEGORY_OF,
    LOG_FORMAT,
    OUT_DIR,
    PUBLISHED_CONSTANT_FEATURES,
    PUBLISHED_RESULTS,
    REPORT_FORMAT,
    SEED,
    CICIDS_AVAILABLE,
    THREADS,
)
from src.errors import ConfigError, IdsError, InputError, StageError
from src.flowdata import (
    SelectionPolicy,
    SplitSpec,
    clean,
    drop_constant_features,
    label_counts,
    load_csv,
    load_features_csv,
    preset_split_spec,
    split,
    write_csv,
    write_provenance,
)
from src.forestpa import PaTreeParams
from src.metrics import build_report, check_acceptance, confusion, confusion_csv, emit_report
from src.modelio import read_text, write_text
from src.reptree import RepTreeParams
from src.ripper import RipperParams
from src.stack import StackParams

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4

REPORT_FORMATS = ("table", "kv")
DROP_MODES = ("published", "auto", "none")

# section -> key -> parser of the raw text
CONFIG_KEYS = {
    "run": {
        "seed": int,
        "threads": int,
        "out_dir": str,
        "format": str,
        "split_preset": str,
        "split_file": str,
    },
    "reptree": {"min_leaf": int, "max_depth": int, "prune_fraction": float, "pruning": "bool"},
    "ripper": {
        "prune_fraction": float,
        "optimization_passes": int,
        "dl_slack_bits": float,
        "min_rule_coverage": int,
    },
    "forestpa": {"tree_count": int, "min_leaf": int, "max_depth": int, "weight_increment_rate": float},
    "stack": {"model2_labels": str, "model3_labels": str},
}

# argparse dest -> (section, key)
FLAG_KEYS = {
    "seed": ("run", "seed"),
    "threads": ("run", "threads"),
    "out_dir": ("run", "out_dir"),
    "format": ("run", "format"),
    "split_preset": ("run", "split_preset"),
    "split_file": ("run", "split_file"),
    "min_leaf": ("reptree", "min_leaf"),
    "max_depth": ("reptree", "max_depth"),
    "prune_fraction": ("reptree", "prune_fraction"),
    "pruning": ("reptree", "pruning"),
    "ripper_prune_fraction": ("ripper", "prune_fraction"),
    "ripper_passes": ("ripper", "optimization_passes"),
    "dl_slack_bits": ("ripper", "dl_slack_bits"),
    "min_rule_coverage": ("ripper", "min_rule_coverage"),
    "trees": ("forestpa", "tree_count"),
    "forest_min_leaf": ("forestpa", "min_leaf"),
    "forest_max_depth": ("forestpa", "max_depth"),
    "eta": ("forestpa", "weight_increment_rate"),
    "model2_labels": ("stack", "model2_labels"),
    "model3_labels": ("stack", "model3_labels"),
}


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they share the config exit status."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


# --- Configuration ---


@dataclass
class RunConfig:
    seed: int = SEED
    threads: int = THREADS
    out_dir: str = OUT_DIR
    report_format: str = REPORT_FORMAT
    split_preset: str | None = "table2"
    split_file: str | None = None
    learners: dict[str, dict] = field(default_factory=lambda: {s: {} for s in ("reptree", "ripper", "forestpa", "stack")})

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError(f"seed must be an unsigned integer, got {self.seed}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.report_format not in REPORT_FORMATS:
            raise ConfigError(f"Unknown format '{self.report_format}'. Choose from: {list(REPORT_FORMATS)}")

    def stack_params(self) -> StackParams:
        try:
            return StackParams.seeded(
                self.seed,
                reptree=RepTreeParams(**self.learners["reptree"]),
                ripper=RipperParams(**self.learners["ripper"]),
                forest=PaTreeParams(**self.learners["forestpa"]),
                **self.learners["stack"],
            )
        except TypeError as e:
            raise ConfigError(f"Bad learner parameter: {e}") from None

    def split_spec(self) -> SplitSpec:
        if self.split_file:
            return load_split_file(self.split_file, self.seed)
        return preset_split_spec(self.split_preset, self.seed)


def read_config_file(path: str) -> dict[str, dict]:
    """Typed settings from an INI file; unknown sections/keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from None
    except configparser.Error as e:
        raise ConfigError(f"Malformed config file {path}: {e}") from None

    settings: dict[str, dict] = {}
    for section in parser.sections():
        if section not in CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        settings[section] = {}
        for key in parser[section]:
            kind = CONFIG_KEYS[section].get(key)
            if kind is None:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
            try:
                if kind == "bool":
                    value = parser.getboolean(section, key)
                else:
                    value = kind(parser.get(section, key).strip())
            except ValueError:
                raise ConfigError(f"{path}: [{section}] {key} = {parser.get(section, key)!r} is not valid") from None
            settings[section][key] = value
    run = settings.get("run", {})
    if "split_preset" in run and "split_file" in run:
        raise ConfigError(f"{path}: give split_preset or split_file, not both")
    return settings


def load_split_file(path: str, seed: int) -> SplitSpec:
    """`[split]` section with `<label> = <train>,<test>` lines and optional policies."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError(f"Cannot read split file {path}: {e}") from None
    except configparser.Error as e:
        raise ConfigError(f"Malformed split file {path}: {e}") from None
    if not parser.has_section("split"):
        raise ConfigError(f"{path}: missing [split] section")

    entries = dict(parser["split"])
    policies = {}
    for key in ("train_policy", "test_policy"):
        if key in entries:
            try:
                policies[key] = SelectionPolicy(entries.pop(key).strip())
            except ValueError:
                choices = [p.value for p in SelectionPolicy]
                raise ConfigError(f"{path}: {key} must be one of {choices}") from None

    counts = {}
    for label, text in entries.items():
        try:
            train_count, test_count = (int(part) for part in text.split(","))
        except ValueError:
            raise ConfigError(f"{path}: '{label} = {text}' must read '<train>,<test>'") from None
        counts[label.strip()] = (train_count, test_count)
    return SplitSpec(counts, seed, **policies)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    layers: dict[str, dict] = {section: {} for section in CONFIG_KEYS}
    if getattr(args, "config", None):
        for section, values in read_config_file(args.config).items():
            layers[section].update(values)

    flag_run = {}
    for dest, (section, key) in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            (flag_run if section == "run" else layers[section])[key] = value
    # a split source given on the command line replaces the file's
    if "split_file" in flag_run or "split_preset" in flag_run:
        layers["run"].pop("split_file", None)
        layers["run"].pop("split_preset", None)
    layers["run"].update(flag_run)

    run = layers["run"]
    config = RunConfig(
        seed=run.get("seed", SEED),
        threads=run.get("threads", THREADS),
        out_dir=run.get("out_dir", OUT_DIR),
        report_format=run.get("format", REPORT_FORMAT),
        split_preset=run.get("split_preset", "table2"),
        split_file=run.get("split_file"),
        learners={section: layers[section] for section in ("reptree", "ripper", "forestpa", "stack")},
    )
    logger.debug("Resolved config: %s", config)
    return config


# --- Commands ---


def _out(config: RunConfig, name: str) -> str:
    return os.path.join(config.out_dir, name)


def cmd_clean(args: argparse.Namespace, config: RunConfig) -> int:
    data = load_csv(args.inputs)
    cleaned = clean(data)

    mode = args.drop_features or ("published" if data.schema.cicids_layout else "auto")
    if mode == "published":
        pruned = drop_constant_features(cleaned, PUBLISHED_CONSTANT_FEATURES)
    elif mode == "auto":
        pruned = drop_constant_features(cleaned)
    else:
        pruned = cleaned

    write_csv(pruned, _out(config, "cleaned.csv"))
    write_provenance(pruned, _out(config, "cleaned.provenance.txt"))

    print(f"  Rows: {len(data)} -> {len(pruned)} (removed {len(data) - len(pruned)})")
    print(f"  Features: {data.schema.width} -> {pruned.schema.width} (drop mode: {mode})")
    print(f"  Wrote {_out(config, 'cleaned.csv')}")
    return EXIT_OK


def composition_table(available: dict[str, int], spec: SplitSpec, reference: bool) -> str:
    labels = [label for label in available if available[label] or label in spec.counts]
    header = ["Label", "Category", "Available", "Train", "Test"]
    if reference:
        header.append("Published")
    rows = []
    for label in labels:
        train_count, test_count = spec.counts.get(label, (0, 0))
        row = [label, CATEGORY_OF.get(label, label), str(available[label]), str(train_count), str(test_count)]
        if reference:
            row.append(str(CICIDS_AVAILABLE.get(label, ("", ""))[1]))
        rows.append(row)
    train_total, test_total = spec.totals
    total = ["Total", "", str(sum(available[label] for label in labels)), str(train_total), str(test_total)]
    if reference:
        total.append(str(sum(after for _, after in CICIDS_AVAILABLE.values())))
    rows.append(total)

    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]

    def fmt(row: list[str]) -> str:
        cells = [row[0].ljust(widths[0]), row[1].ljust(widths[1])]
        cells += [cell.rjust(width) for cell, width in zip(row[2:], widths[2:])]
        return "  ".join(cells).rstrip()

    rule = "-" * len(fmt(header))
    return "\n".join([fmt(header), rule, *(fmt(r) for r in rows[:-1]), rule, fmt(rows[-1])])


def cmd_split(args: argparse.Namespace, config: RunConfig) -> int:
    data = load_csv(args.cleaned)
    spec = config.split_spec()
    train, test = split(data, spec)

    write_csv(train, _out(config, "train.csv"))
    write_provenance(train, _out(config, "train.provenance.txt"))
    write_csv(test, _out(config, "test.csv"))
    write_provenance(test, _out(config, "test.provenance.txt"))

    print(composition_table(label_counts(data), spec, reference=data.schema.cicids_layout))
    print(f"  Wrote {len(train)} training rows and {len(test)} test rows to {config.out_dir}")
    return EXIT_OK


def _timing_path(model_path: str) -> str:
    root, _ = os.path.splitext(model_path)
    return root + ".timing.txt"


def _read_seconds(path: str, key: str) -> float | None:
    if not os.path.exists(path):
        return None
    for line in read_text(path).splitlines():
        name, _, value = line.partition(" = ")
        if name == key:
            try:
                return float(value)
            except ValueError:
                return None
    return None


def cmd_train(args: argparse.Namespace, config: RunConfig) -> int:
    train = load_csv(args.train)
    params = config.stack_params()

    started = time.perf_counter()
    model = stack.train_hierarchy(train, params, config.threads)
    seconds = time.perf_counter() - started

    model_path = _out(config, "hierarchy.json")
    sha = stack.save(model, model_path)
    write_text(_timing_path(model_path), f"train_seconds = {seconds!r}\n")

    print(f"  Trained on {len(train)} rows in {seconds:.2f} s")
    print(f"  Stage 1: {len(model.model1.classes)} classes | Stage 2: {len(model.model2.rules)} rules")
    print(f"  Stage 3: {len(model.model3.trees)} trees on {model.model3.width} features")
    print(f"  Wrote {model_path} (sha256 {sha[:16]})")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> int:
    model = stack.load(args.model)
    values, truths = stack.labelled_inputs(model, load_csv(args.test))

    started = time.perf_counter()
    predicted = stack.predict_hierarchy_batch(model, values, config.threads)
    test_seconds = time.perf_counter() - started

    cm = confusion(predicted.final, truths, model.model3.classes)
    train_seconds = _read_seconds(_timing_path(args.model), "train_seconds")

    reference = PUBLISHED_RESULTS if args.compare_published else None
    report = build_report(cm)
    write_text(_out(config, "report.kv"), emit_report(report, "kv").decode("utf-8"))
    write_text(_out(config, "report.txt"), emit_report(report, "table", reference).decode("utf-8"))
    write_text(_out(config, "confusion.csv"), confusion_csv(cm))
    timing = f"test_seconds = {test_seconds!r}\n"
    if train_seconds is not None:
        timing = f"train_seconds = {train_seconds!r}\n" + timing
    write_text(_out(config, "timing.kv"), timing)

    timed = replace(report, train_seconds=train_seconds, test_seconds=test_seconds)
    sys.stdout.write(emit_report(timed, config.report_format, reference).decode("utf-8"))
    if args.compare_published:
        for description, passed in check_acceptance(report):
            print(f"  {'PASS' if passed else 'FAIL'}  {description}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace, config: RunConfig) -> int:
    model = stack.load(args.model)
    header, rows, values, errors = load_features_csv(args.input, model.feature_names)
    if errors:
        for error in errors:
            print(f"  {args.input}: {error}", file=sys.stderr)
        raise InputError(f"{len(errors)} of {len(rows)} rows could not be read")

    predicted = stack.predict_hierarchy_batch(model, values, config.threads)
    out_path = _out(config, "predictions.csv")
    os.makedirs(config.out_dir, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([*header, "stage1_prediction", "stage2_prediction", "prediction"])
        for row, out1, out2, out3 in zip(rows, predicted.stage1, predicted.stage2, predicted.final):
            writer.writerow([*row, out1, out2, out3])

    print(f"  Wrote {len(rows)} predictions to {out_path}")
    return EXIT_OK


# --- Parser and entry point ---


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [run], [reptree], [ripper], [forestpa], [stack]")
    common.add_argument("--seed", type=int, help=f"master seed (default {SEED})")
    common.add_argument("--threads", type=int, help=f"worker threads (default {THREADS})")
    common.add_argument("--out-dir", dest="out_dir", help=f"output directory (default {OUT_DIR})")
    common.add_argument("--format", choices=REPORT_FORMATS, help="report format printed to stdout")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging and tracebacks")

    parser = ArgumentParser(prog="flowstack", description="Three-stage flow intrusion detection pipeline")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = commands.add_parser("clean", parents=[common], help="remove marker rows and constant features")
    p.add_argument("inputs", nargs="+", help="one or more CSV files, concatenated in order")
    p.add_argument(
        "--drop-features",
        choices=DROP_MODES,
        help="published = the eight published constant features (default for CICIDS2017 files), auto = all-equal columns",
    )
    p.set_defaults(handler=cmd_clean)

    p = commands.add_parser("split", parents=[common], help="build train/test subsets")
    p.add_argument("cleaned", help="cleaned CSV")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--split-preset", dest="split_preset", help="built-in preset (table2)")
    source.add_argument("--split-file", dest="split_file", help="INI file with a [split] section")
    p.set_defaults(handler=cmd_split)

    p = commands.add_parser("train", parents=[common], help="train the three-stage hierarchy")
    p.add_argument("train", help="training CSV")
    g = p.add_argument_group("stage 1 (REP tree)")
    g.add_argument("--min-leaf", dest="min_leaf", type=int)
    g.add_argument("--max-depth", dest="max_depth", type=int)
    g.add_argument("--prune-fraction", dest="prune_fraction", type=float)
    g.add_argument("--no-pruning", dest="pruning", action="store_const", const=False)
    g = p.add_argument_group("stage 2 (RIPPER)")
    g.add_argument("--ripper-prune-fraction", dest="ripper_prune_fraction", type=float)
    g.add_argument("--ripper-passes", dest="ripper_passes", type=int)
    g.add_argument("--dl-slack-bits", dest="dl_slack_bits", type=float)
    g.add_argument("--min-rule-coverage", dest="min_rule_coverage", type=int)
    g = p.add_argument_group("stage 3 (Forest PA)")
    g.add_argument("--trees", type=int)
    g.add_argument("--forest-min-leaf", dest="forest_min_leaf", type=int)
    g.add_argument("--forest-max-depth", dest="forest_max_depth", type=int)
    g.add_argument("--eta", type=float, help="weight increment rate for untested features")
    g = p.add_argument_group("label spaces")
    g.add_argument("--model2-labels", dest="model2_labels", choices=("category", "fine"))
    g.add_argument("--model3-labels", dest="model3_labels", choices=("category", "fine"))
    p.set_defaults(handler=cmd_train)

    p = commands.add_parser("evaluate", parents=[common], help="score a hierarchy on a labelled CSV")
    p.add_argument("model", help="hierarchy.json")
    p.add_argument("test", help="labelled test CSV")
    p.add_argument("--compare-published", action="store_true", help="show published figures and acceptance checks")
    p.set_defaults(handler=cmd_evaluate)

    p = commands.add_parser("predict", parents=[common], help="label an unlabelled CSV")
    p.add_argument("model", help="hierarchy.json")
    p.add_argument("input", help="CSV with the model's feature columns")
    p.set_defaults(handler=cmd_predict)

    return parser


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, StageError):
        return exit_code_for(error.cause)
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, InputError):
        return EXIT_INPUT
    return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    verbose = False
    try:
        args = build_parser().parse_args(argv)
        verbose = args.verbose
        logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)
        config = resolve_config(args)
        return args.handler(args, config)
    except IdsError as e:
        if verbose:
            logger.exception("command failed")
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        if verbose:
            logger.exception("internal error")
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
