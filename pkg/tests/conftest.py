import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from adacsl.core import ConfusionCounts, CostMatrix  # noqa: E402
from adacsl.data import LeafSpec, synth_generate  # noqa: E402


@pytest.fixture
def covid_costs():
    return CostMatrix(0.0, 19.0, 1.0, 0.0)


@pytest.fixture
def model_a_counts():
    return ConfusionCounts(tp=80, fp=120, tn=780, fn=20)


@pytest.fixture
def model_b_counts():
    return ConfusionCounts(tp=60, fp=20, tn=880, fn=40)


def model_a_dataset(seed=0, noise_columns=0):
    profile = [LeafSpec(200, 80, {"f2": 1}), LeafSpec(800, 20, {"f2": 0})]
    return synth_generate(1000, 100, profile, seed=seed, noise_columns=noise_columns)


def model_b_dataset(seed=0):
    profile = [LeafSpec(80, 60, {"f1": 1}), LeafSpec(920, 40, {"f1": 0})]
    return synth_generate(1000, 100, profile, seed=seed)


def model_a_labels(seed=0):
    """Labels and Model A predictions (flag everyone with f2 == 1)."""
    d = model_a_dataset(seed)
    return d.labels, (d.features[:, 0] == 1).astype(int)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
