import os

import numpy as np
import pytest

from app.anova.grouped_index import Basis, GroupedIndexSet, build_term_superset
from app.core.config import get_settings


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run full-scale experiment runs")


def pytest_collection_modifyitems(config, items):
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    skip_census = pytest.mark.skip(reason="ANOVA_CENSUS_CSV is not set")
    for item in items:
        if "slow" in item.keywords and not config.getoption("--runslow"):
            item.add_marker(skip_slow)
        if "census" in item.keywords and not os.getenv("ANOVA_CENSUS_CSV"):
            item.add_marker(skip_census)


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def index_set_factory():
    def make(d, d_s, bandwidths, basis=Basis.EXPONENTIAL):
        return GroupedIndexSet.from_orders(build_term_superset(d, d_s), bandwidths, basis)
    return make


def random_coefficients(rng, index_set):
    values = rng.standard_normal(index_set.total)
    if index_set.basis is Basis.EXPONENTIAL:
        values = values + 1j * rng.standard_normal(index_set.total)
    return values
