"""Shared fixtures: the bundled domain, corpus paths, and a trained model."""

from importlib import resources

import pytest

from typeshift.features import default_templates
from typeshift.learner import TrainerConfig, forced_decode_pass1, load_dataset_file, train
from typeshift.lexicon import load_domain, to_simple_types

DATA = resources.files("typeshift") / "data"


@pytest.fixture(scope="session")
def domain():
    return load_domain((DATA / "geo_mini.domain").read_text())


@pytest.fixture(scope="session")
def simple_domain(domain):
    return to_simple_types(domain)


@pytest.fixture(scope="session")
def train_path(tmp_path_factory):
    return str(DATA / "geo_toy_train.tsv")


@pytest.fixture(scope="session")
def test_path():
    return str(DATA / "geo_toy_test.tsv")


@pytest.fixture()
def train_examples(domain, train_path):
    return load_dataset_file(train_path, domain)


@pytest.fixture()
def test_examples(domain, test_path):
    return load_dataset_file(test_path, domain)


@pytest.fixture(scope="session")
def trained(domain, train_path):
    """Weights and templates from one full training run on the toy corpus."""
    examples = load_dataset_file(train_path, domain)
    forced_decode_pass1(examples, domain, time_limit=60.0)
    weights, _ = train(examples, domain, TrainerConfig(iterations=20, beam_width=16, seed=1))
    return weights, default_templates()
