import os

import numpy as np
import pytest

from src.cli import (
    EXIT_CONFIG,
    EXIT_INPUT,
    EXIT_INTERNAL,
    EXIT_OK,
    build_parser,
    exit_code_for,
    load_split_file,
    main,
    read_config_file,
    resolve_config,
)
from src.errors import ConfigError, InputError, StageError
from src.flowdata import SelectionPolicy, load_csv
from src.metrics import parse_report

SPLIT_TEXT = "[split]\nBENIGN = 30,20\nDDoS = 30,20\nPortScan = 30,20\n"


@pytest.fixture
def raw_csv(tmp_path):
    """Three separable classes, 60 rows each, plus a constant column."""
    rng = np.random.default_rng(0)
    centres = {"BENIGN": (100, 5), "DDoS": (5000, 40), "PortScan": (20, 400)}
    lines = ["Flow Duration,Fwd Packets,Const,Label"]
    for i in range(180):
        label = list(centres)[i % 3]
        duration, packets = centres[label]
        lines.append(f"{duration * rng.uniform(0.8, 1.2):.3f},{packets * rng.uniform(0.8, 1.2):.3f},7,{label}")
    path = tmp_path / "flows.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def split_file(tmp_path):
    path = tmp_path / "split.ini"
    path.write_text(SPLIT_TEXT, encoding="utf-8")
    return str(path)


def run_pipeline(raw, split_path, out):
    assert main(["clean", raw, "--out-dir", out]) == EXIT_OK
    cleaned = os.path.join(out, "cleaned.csv")
    assert main(["split", cleaned, "--split-file", split_path, "--seed", "3", "--out-dir", out]) == EXIT_OK
    train, test = os.path.join(out, "train.csv"), os.path.join(out, "test.csv")
    assert main(["train", train, "--trees", "3", "--threads", "2", "--seed", "3", "--out-dir", out]) == EXIT_OK
    model = os.path.join(out, "hierarchy.json")
    assert main(["evaluate", model, test, "--format", "kv", "--out-dir", out]) == EXIT_OK
    assert main(["predict", model, raw, "--out-dir", out]) == EXIT_OK
    return out


class TestPipeline:
    def test_end_to_end(self, raw_csv, split_file, tmp_path, capsys):
        out = run_pipeline(raw_csv, split_file, str(tmp_path / "run"))
        stdout = capsys.readouterr().out

        cleaned = load_csv(os.path.join(out, "cleaned.csv"))
        assert cleaned.schema.feature_names == ("Flow Duration", "Fwd Packets")
        assert len(load_csv(os.path.join(out, "train.csv"))) == 90
        assert len(load_csv(os.path.join(out, "test.csv"))) == 60
        assert "Total" in stdout

        with open(os.path.join(out, "report.kv"), encoding="utf-8") as f:
            report = parse_report(f.read())
        assert report.total == 60
        assert report.accuracy >= 0.9
        assert report.train_seconds is None
        assert "test_seconds = " in stdout

        with open(os.path.join(out, "timing.kv"), encoding="utf-8") as f:
            assert f.read().startswith("train_seconds = ")
        assert os.path.exists(os.path.join(out, "hierarchy.timing.txt"))
        assert os.path.exists(os.path.join(out, "confusion.csv"))

        with open(os.path.join(out, "predictions.csv"), encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert len(lines) == 181
        assert lines[0].endswith("Label,stage1_prediction,stage2_prediction,prediction")

    def test_same_seed_same_bytes(self, raw_csv, split_file, tmp_path, capsys):
        first = run_pipeline(raw_csv, split_file, str(tmp_path / "a"))
        second = run_pipeline(raw_csv, split_file, str(tmp_path / "b"))
        for name in ("cleaned.csv", "train.csv", "test.csv", "hierarchy.json", "report.kv", "predictions.csv"):
            with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
                assert a.read() == b.read(), name

    def test_table_report_with_published_column(self, raw_csv, split_file, tmp_path, capsys):
        out = run_pipeline(raw_csv, split_file, str(tmp_path / "run"))
        capsys.readouterr()
        model, test = os.path.join(out, "hierarchy.json"), os.path.join(out, "test.csv")
        assert main(["evaluate", model, test, "--compare-published", "--out-dir", out]) == EXIT_OK
        stdout = capsys.readouterr().out
        assert stdout.splitlines()[2].startswith("TNR (BENIGN)")
        assert "Published" in stdout.splitlines()[0]
        assert "Accuracy >= 93.5%" in stdout


class TestExitCodes:
    def test_missing_input_file(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["clean", str(tmp_path / "absent.csv"), "--out-dir", out]) == EXIT_INPUT
        assert not os.path.exists(os.path.join(out, "cleaned.csv"))
        assert "absent.csv" in capsys.readouterr().err

    def test_bad_flag_value(self, raw_csv, tmp_path):
        assert main(["clean", raw_csv, "--format", "xml", "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_missing_positional(self):
        assert main(["train"]) == EXIT_CONFIG

    def test_invalid_learner_parameter(self, raw_csv, tmp_path):
        assert main(["train", raw_csv, "--trees", "0", "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_unknown_config_section(self, raw_csv, tmp_path):
        config = tmp_path / "bad.ini"
        config.write_text("[bogus]\nx = 1\n", encoding="utf-8")
        assert main(["clean", raw_csv, "--config", str(config), "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_split_shortfall_lists_labels(self, raw_csv, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["clean", raw_csv, "--out-dir", out]) == EXIT_OK
        greedy = tmp_path / "greedy.ini"
        greedy.write_text("[split]\nBENIGN = 50,50\nDDoS = 10,10\n", encoding="utf-8")
        code = main(["split", os.path.join(out, "cleaned.csv"), "--split-file", str(greedy), "--out-dir", out])
        assert code == EXIT_INPUT
        assert "BENIGN: need 100, have 60" in capsys.readouterr().err

    def test_unreadable_prediction_row(self, raw_csv, split_file, tmp_path, capsys):
        out = run_pipeline(raw_csv, split_file, str(tmp_path / "run"))
        os.remove(os.path.join(out, "predictions.csv"))
        broken = tmp_path / "broken.csv"
        broken.write_text("Flow Duration,Fwd Packets\n1,2\n3\n", encoding="utf-8")
        assert main(["predict", os.path.join(out, "hierarchy.json"), str(broken), "--out-dir", out]) == EXIT_INPUT
        assert "row 3" in capsys.readouterr().err
        assert not os.path.exists(os.path.join(out, "predictions.csv"))

    def test_stage_errors_map_by_cause(self):
        assert exit_code_for(StageError("model1", ConfigError("x"))) == EXIT_CONFIG
        assert exit_code_for(StageError("normalize", InputError("x"))) == EXIT_INPUT
        assert exit_code_for(RuntimeError("x")) == EXIT_INTERNAL


class TestConfiguration:
    @pytest.fixture
    def ini(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[run]\nseed = 5\nformat = kv\n[forestpa]\ntree_count = 4\n[reptree]\npruning = no\n")
        return str(path)

    def test_file_values_apply(self, ini):
        config = resolve_config(build_parser().parse_args(["train", "t.csv", "--config", ini]))
        assert config.seed == 5
        assert config.report_format == "kv"
        assert config.learners["forestpa"] == {"tree_count": 4}
        assert config.stack_params().reptree.pruning is False

    def test_flags_override_the_file(self, ini):
        args = build_parser().parse_args(["train", "t.csv", "--config", ini, "--seed", "7", "--trees", "9"])
        config = resolve_config(args)
        assert config.seed == 7
        params = config.stack_params()
        assert params.forest.tree_count == 9
        assert params.forest.seed == params.ripper.seed == params.reptree.seed == 7

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[ripper]\nwidth = 3\n")
        with pytest.raises(ConfigError, match="width"):
            read_config_file(str(path))

    def test_badly_typed_value(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[run]\nseed = many\n")
        with pytest.raises(ConfigError):
            read_config_file(str(path))

    def test_split_file_with_policies(self, tmp_path):
        path = tmp_path / "split.ini"
        path.write_text("[split]\ntrain_policy = random\nWeb Attack - XSS = 4,2\nBENIGN = 10,5\n")
        spec = load_split_file(str(path), seed=9)
        assert spec.counts == {"Web Attack - XSS": (4, 2), "BENIGN": (10, 5)}
        assert spec.train_policy is SelectionPolicy.RANDOM
        assert spec.seed == 9

    def test_malformed_split_line(self, tmp_path):
        path = tmp_path / "split.ini"
        path.write_text("[split]\nBENIGN = ten\n")
        with pytest.raises(ConfigError):
            load_split_file(str(path), seed=1)
