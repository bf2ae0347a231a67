import tempfile

import numpy as np
import pytest
from dotenv import load_dotenv

from ccm.agent import HyperParams


@pytest.fixture(autouse=True, scope="session")
def _load_dotenv():
    load_dotenv()


@pytest.fixture
def temp_dir():
    with tempfile.TemporaryDirectory() as temp_dir:
        yield temp_dir


@pytest.fixture
def seeded_rng():
    def _make(seed: int = 0) -> np.random.Generator:
        return np.random.default_rng(seed)

    return _make


@pytest.fixture
def small_hp():
    """Hyperparameters small enough for runs of a few hundred steps."""
    return HyperParams(C=5, hidden=(8,), fcr_hidden=4, fcr_window=5, explore_steps=500)
