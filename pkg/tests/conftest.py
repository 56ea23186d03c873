from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from nephon.nea import FormatConfig

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def safe_fmt() -> FormatConfig:
    return FormatConfig.from_name("safe")


@pytest.fixture(scope="session")
def paper_fmt() -> FormatConfig:
    return FormatConfig.from_name("paper")
