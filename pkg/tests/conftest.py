import json
import sys
from pathlib import Path

import pytest

from spreadcheck.lattice import build_lattice

sys.path.insert(0, str(Path(__file__).parent))

GOLDEN = json.loads((Path(__file__).parent / "golden.json").read_text())
DATA = Path(__file__).resolve().parents[1] / "src" / "spreadcheck" / "data"


@pytest.fixture(scope="session")
def golden():
    return GOLDEN


@pytest.fixture(scope="session")
def lat4():
    return build_lattice(4)


@pytest.fixture(scope="session")
def lat5():
    return build_lattice(5)


@pytest.fixture(scope="session")
def lat6():
    return build_lattice(6)


@pytest.fixture(scope="session")
def lat7():
    return build_lattice(7)


@pytest.fixture(autouse=True)
def _cache_dir(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("SPREADCHECK_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "cache"))
