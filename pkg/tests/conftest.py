import shutil
from pathlib import Path

import pytest

from glpp.bridges import Bridge, TimedBridge
from glpp.measures import DiscreteMeasure, make_constant_family, make_integrable_family


def pytest_sessionstart(session: pytest.Session) -> None:
    """Ensure a clean pytest basetemp directory for this repo."""
    test_output = Path(__file__).parent.parent / "test_output"
    if test_output.exists():
        shutil.rmtree(test_output, ignore_errors=True)


@pytest.fixture(autouse=True)
def _pinned_seed(monkeypatch):
    """Tests never inherit a seed from the caller's environment."""
    monkeypatch.delenv("GLPP_SEED", raising=False)


@pytest.fixture
def geometric_half():
    """Geometric(1/2) on {1, 2, ...}."""
    return DiscreteMeasure.geometric(0.5)


@pytest.fixture
def geometric_family(geometric_half):
    """Integrable family of geometric(1/2); it is constant in the gap."""
    return make_integrable_family(geometric_half)


@pytest.fixture
def poisson_family():
    """Integrable family of Poisson(1) conditioned on {X >= 1}."""
    return make_integrable_family(DiscreteMeasure.poisson(1.0))


@pytest.fixture
def classical_geometric(geometric_half):
    return make_constant_family(geometric_half)


@pytest.fixture
def example_timed():
    """b = (+, +, -, -), t = (0, 1, 1, 0)."""
    return TimedBridge(Bridge.from_code("++--"), (0, 1, 1, 0))


def pytest_configure(config):
    """Configure pytest with custom markers and settings."""
    config.addinivalue_line("markers", "unit: mark test as a unit test")
    config.addinivalue_line("markers", "integration: mark test as an integration test")
    config.addinivalue_line("markers", "edge_case: mark test as an edge case test")
    config.addinivalue_line("markers", "slow: mark test as slow running")
    config.addinivalue_line("markers", "acceptance: desk acceptance suite (opt-in)")


def pytest_addoption(parser: pytest.Parser) -> None:
    """CLI options to control acceptance tests.

    --run-acceptance: Opt-in flag to execute the full desk suite.
    """
    group = parser.getgroup("glpp")
    group.addoption(
        "--run-acceptance",
        action="store_true",
        default=False,
        help="Run the desk acceptance suite (disabled by default)",
    )


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]):
    """Modify test collection to add markers based on test names and locations."""
    for item in items:
        # Add unit marker to all tests by default
        if not any(mark.name in ["integration", "slow"] for mark in item.iter_markers()):
            item.add_marker(pytest.mark.unit)

        # Add edge_case marker to tests with "edge" in name
        if "edge" in item.name.lower():
            item.add_marker(pytest.mark.edge_case)

        # If tests are marked as acceptance and user did not opt in, skip them
        if any(m.name == "acceptance" for m in item.iter_markers()):
            if not config.getoption("--run-acceptance"):
                item.add_marker(pytest.mark.skip(reason="Use --run-acceptance to enable the desk suite"))
