from pathlib import Path

import pytest

from xtimelines import harness
from xtimelines.resources import load_tables

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def tables():
    return load_tables(FIXTURES / "resources" / "redirects.tsv",
                       FIXTURES / "resources" / "interlang.tsv",
                       FIXTURES / "resources" / "predmatrix.tsv")


@pytest.fixture(scope="session")
def boeing_corpus():
    return harness.load_corpus(FIXTURES / "manifest_boeing.tsv")


@pytest.fixture(scope="session")
def jobs_corpus():
    return harness.load_corpus(FIXTURES / "manifest_jobs.tsv")
