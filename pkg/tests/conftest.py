import numpy as np
import pytest


class ScriptedRng:
    """Stands in for a numpy Generator; replays coin outcomes as uniforms."""

    def __init__(self, coins):
        self._vals = [0.25 if c in ("A", "H", True) else 0.75 for c in coins]

    def random(self, size=None):
        if size is None:
            return self._vals.pop(0)
        n = int(np.prod(size))
        out = np.array([self._vals.pop(0) for _ in range(n)])
        return out.reshape(size)


@pytest.fixture
def scripted():
    return ScriptedRng


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
