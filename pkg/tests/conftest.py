import os
from pathlib import Path

import numpy as np
import pytest

from desense import synthetic

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def record():
    def _record(number, passed, detail=""):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        ACCEPTANCE_LINES.append(f"criterion {number}: {status} {detail}".rstrip())
        return passed
    return _record


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    synthetic.write_har(root / "UCI HAR Dataset")
    synthetic.write_cmu(root / "faces")
    synthetic.write_semeion(root / "semeion.data", per_digit=10)
    return root


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def real_data_dir():
    d = os.environ.get("DESENSE_DATA_DIR")
    return Path(d) if d else None
