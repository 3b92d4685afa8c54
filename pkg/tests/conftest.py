from pathlib import Path

import pytest

DESK = Path(__file__).parent / "data" / "desk"


@pytest.fixture
def desk():
    return DESK


@pytest.fixture
def desk_args(desk):
    """Common CLI arguments for the desk dataset."""
    return ["--cdt", str(desk / "cdt.tree"), "--data", str(desk),
            "--manifest", str(desk / "manifest.txt"), "--views", str(desk / "views.txt")]
