import os

import numpy as np
import pytest

from src.flowdata import dataset_from_arrays


def margin_uniform(rng: np.random.Generator, size, low: float = 0.45, high: float = 0.55) -> np.ndarray:
    """Uniform on [0, 1] with the open band (low, high) left empty."""
    x = rng.uniform(0.0, 1.0 - (high - low), size=size)
    return np.where(x > low, x + (high - low), x)


@pytest.fixture(scope="session")
def planted_and():
    """Factory: label "A" when f1 > 0.5 and f2 > 0.5, else "B"; f3 is noise."""

    def make(n: int, seed: int, margin: bool = True):
        rng = np.random.default_rng(seed)
        if margin:
            values = np.column_stack([margin_uniform(rng, n), margin_uniform(rng, n), rng.uniform(size=n)])
        else:
            values = rng.uniform(size=(n, 3))
        labels = np.where((values[:, 0] > 0.5) & (values[:, 1] > 0.5), "A", "B")
        return dataset_from_arrays(values, labels.tolist(), fine_labels=("A", "B"))

    return make


@pytest.fixture(scope="session")
def three_class():
    """Factory: BENIGN / DDoS / PortScan separated on two informative features."""

    def make(n: int, seed: int):
        rng = np.random.default_rng(seed)
        labels = np.array(["BENIGN", "DDoS", "PortScan"])[np.arange(n) % 3]
        centres = {"BENIGN": (0.0, 0.0), "DDoS": (10.0, 0.0), "PortScan": (0.0, 10.0)}
        values = np.array([centres[label] for label in labels]) + rng.normal(0, 1, size=(n, 2))
        noise = rng.uniform(0, 5, size=(n, 1))
        return dataset_from_arrays(np.hstack([values, noise]), labels.tolist(), ["rate", "packets", "noise"])

    return make


@pytest.fixture
def write_csv_text(tmp_path):
    """Factory writing literal CSV text to a file under tmp_path."""

    def write(name: str, text: str) -> str:
        path = os.path.join(tmp_path, name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        return path

    return write
