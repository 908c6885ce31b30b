from fractions import Fraction

import pytest
from hypothesis import settings

from rfdkit.characters import Character
from rfdkit.groups import abels, heisenberg

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def H():
    return heisenberg()


@pytest.fixture(scope="session")
def A2():
    return abels(2)


@pytest.fixture(scope="session")
def xyz(H):
    return tuple(H.generator(n) for n in "xyz")


@pytest.fixture(scope="session")
def lam_third(H):
    return Character.for_group(H, [Fraction(1, 3)])
