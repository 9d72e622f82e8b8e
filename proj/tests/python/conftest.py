import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture
def data():
    return pathlib.Path(os.environ.get("SOPLOG_DATA", ROOT / "tests" / "data"))


@pytest.fixture
def cli():
    path = os.environ.get("SOPLOG_CLI", str(ROOT / "build" / "soplog"))
    if not os.path.exists(path):
        pytest.skip("soplog binary not built")
    return path
