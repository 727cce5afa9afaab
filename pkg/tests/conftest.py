import random

import pytest

from mpc_riskagg.ot import rsa_keygen


class ScriptedRandom(random.Random):
    """Deterministic stand-in: randrange pops preset values, then falls back
    to a seeded stream (so later draws in the same session still work)."""

    def __new__(cls, *args, **kwargs):
        return super().__new__(cls)

    def __init__(self, preset, fallback_seed=0):
        super().__init__(fallback_seed)
        self.preset = list(preset)

    def randrange(self, start, stop=None, step=1):
        if self.preset:
            value = self.preset.pop(0)
            if stop is None:
                assert 0 <= value < start
            else:
                assert start <= value < stop
            return value
        return super().randrange(start, stop, step)


@pytest.fixture(scope="session")
def rsa512():
    return rsa_keygen(512, random.Random(0xC0FFEE))


@pytest.fixture(scope="session")
def rsa256():
    return rsa_keygen(256, random.Random(0xBEEF))
