import os
from pathlib import Path

import pytest

import synth
from dowfactors import ingest

HERE = Path(__file__).parent

# The public UCI file is not redistributed here. Point DOW_JONES_DATA at a
# local copy (or drop it into tests/data/) to run the canonical-file checks.
CANONICAL_CANDIDATES = [
    os.environ.get("DOW_JONES_DATA", ""),
    HERE / "data" / "dow_jones_index.data",
    HERE.parent / "dow_jones_index.data",
]


def find_canonical():
    for cand in CANONICAL_CANDIDATES:
        if cand and Path(cand).is_file():
            return Path(cand)
    return None


@pytest.fixture(scope="session")
def canonical_path():
    path = find_canonical()
    if path is None:
        pytest.skip("canonical UCI dow_jones_index.data not available "
                    "(set DOW_JONES_DATA to its path)")
    return path


@pytest.fixture(scope="session")
def synthetic_path(tmp_path_factory):
    return synth.write_dataset(tmp_path_factory.mktemp("synth") / "dow.csv", seed=7)


@pytest.fixture(scope="session")
def synthetic_dataset(synthetic_path):
    d, _ = ingest.load(synthetic_path)
    return d


def pytest_terminal_summary(terminalreporter):
    import checklist
    if not checklist.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in checklist.RESULTS:
        terminalreporter.write_line(f"{status:<5} {name}" + (f"  ({detail})" if detail else ""))
