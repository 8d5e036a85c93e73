import random

import pytest

from smcbench.field import DEFAULT_MODULUS, PrimeModulus


@pytest.fixture
def modulus():
    return DEFAULT_MODULUS


@pytest.fixture
def small_modulus():
    return PrimeModulus(97)


@pytest.fixture
def tiny_modulus():
    return PrimeModulus(101)


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
