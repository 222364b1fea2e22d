import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from helpers import MODELS, window_spec  # noqa: E402
from tioa.model import Tioa  # noqa: E402
from tioa.parser import ModelDocument, parse_model  # noqa: E402


@pytest.fixture(scope="session")
def machine() -> Tioa:
    return parse_model(MODELS / "machine.tioa").default()


@pytest.fixture(scope="session")
def fixed_machine() -> Tioa:
    return parse_model(MODELS / "fixed_machine.tioa").default()


@pytest.fixture(scope="session")
def university() -> ModelDocument:
    return parse_model(MODELS / "university.tioa")


@pytest.fixture
def window():
    return window_spec
