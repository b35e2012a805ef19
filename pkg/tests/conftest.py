import random

import numpy as np
import pytest

from lib.chain import Ledger
from lib.circuit import Circuit
from lib.gadgets import CircuitBuilder
from utils.utils import seed_from_int


@pytest.fixture
def seed() -> bytes:
    return seed_from_int(2024)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture
def py_rng() -> random.Random:
    return random.Random(7)


@pytest.fixture
def ledger() -> Ledger:
    return Ledger()


@pytest.fixture
def adder8() -> Circuit:
    cb = CircuitBuilder("adder8")
    a, b = cb.input(8), cb.input(8)
    return cb.build([cb.add(a, b)])


@pytest.fixture
def and_or() -> Circuit:
    """(a AND b, a OR b) on one bit per party."""
    cb = CircuitBuilder("and_or")
    (a,), (b,) = cb.input(1), cb.input(1)
    return cb.build([[cb.and_(a, b)], [cb.or_(a, b)]])
