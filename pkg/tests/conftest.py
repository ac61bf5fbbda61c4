from __future__ import annotations

import pytest

from legiscout import fixtures
from legiscout.ingest import load_dataset


@pytest.fixture(scope="session")
def aca():
    """The packaged case-study bundle, loaded once per session."""
    return load_dataset(fixtures.bundle())
