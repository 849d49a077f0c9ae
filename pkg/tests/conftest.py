import pytest

from polylab.arith import build_sieve


@pytest.fixture(scope="session")
def table():
    """Sieve shared by most tests."""
    return build_sieve(20_000)


@pytest.fixture(scope="session")
def table_100k():
    return build_sieve(100_000)
