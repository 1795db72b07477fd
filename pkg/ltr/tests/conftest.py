import os
import sys

REPO_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if REPO_ROOT not in sys.path:
    sys.path.insert(0, REPO_ROOT)

import numpy as np
import pytest

from ltr import state
from ltr.config import clear_settings_cache
from ltr.models.data import Dataset, QueryGroup
from ltr.models.experiment import ExperimentConfig


@pytest.fixture(autouse=True)
def _fresh_process_state():
    clear_settings_cache()
    state.reset()
    yield
    clear_settings_cache()
    state.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def letor_file(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text(
        "2 qid:1 1:0.5 3:1.0\n"
        "0 qid:1 2:1.0 # docid=a\n"
        "\n"
        "2 qid:2 1:0.25\r\n",
        encoding="utf-8",
    )
    return path


def make_dataset(num_queries, docs_per_query=4, dim=3, seed=0, label_max=4):
    rng = np.random.default_rng(seed)
    groups = [
        QueryGroup(
            qid=str(q),
            features=rng.standard_normal((docs_per_query, dim)),
            labels=rng.integers(0, label_max + 1, size=docs_per_query).astype(float),
        )
        for q in range(num_queries)
    ]
    return Dataset(groups=tuple(groups), feature_dim=dim, label_max=float(label_max))


@pytest.fixture
def dataset_factory():
    return make_dataset


@pytest.fixture
def small_dataset():
    return make_dataset(10)


TINY_CONFIG = {
    "epochs": 2,
    "data": {"synthetic": {"num_queries": 15, "docs_per_query": 6, "dim": 4, "seed": 1}},
    "network": {"num_layers": 2, "hidden_dim": 8, "batchnorm": False},
    "adversarial": {
        "k": 2,
        "samples_per_query": 3,
        "network": {"num_layers": 2, "hidden_dim": 8, "batchnorm": False},
    },
    "evaluation": {"cutoffs": [1, 5], "metrics": ["P", "nDCG"], "num_folds": 3},
}


@pytest.fixture
def tiny_config(tmp_path):
    return ExperimentConfig.model_validate({**TINY_CONFIG, "output_dir": str(tmp_path / "out")})
