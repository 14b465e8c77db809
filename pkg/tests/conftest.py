import numpy as np
import pytest

from modules.parallel import THREADS_ENV


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "1")
