from datetime import datetime, timezone

UTC = timezone.utc

import numpy as np
import pytest

from src.config import settings
from src.schemas import ProfileParams


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240117)


@pytest.fixture
def constant_params() -> ProfileParams:
    return ProfileParams(kind="constant", level_db=-40.0)


@pytest.fixture
def fixed_clock(monkeypatch) -> datetime:
    stamp = datetime(2024, 1, 17, 12, 0, tzinfo=UTC)
    monkeypatch.setattr(settings, "fixed_clock", stamp)
    return stamp
