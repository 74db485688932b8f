import random

import pytest

from flowauction.model import validate_instance


@pytest.fixture
def example1():
    """One buyer wanting two items, two unit-supply objects valued (5, 1)."""
    return validate_instance(
        {"alpha": 1, "beta": 1},
        {"b1": 2},
        {"b1": {"alpha": 5, "beta": 1}},
    )


@pytest.fixture
def fig1():
    """Two buyers, three objects; the worked network-construction market."""
    return validate_instance(
        {"alpha": 1, "beta": 1, "gamma": 4},
        {"j1": 4, "j2": 2},
        {"j1": {"alpha": 3, "beta": 2, "gamma": 1}, "j2": {"beta": 2}},
    )


@pytest.fixture
def three_buyers():
    """Three buyers, two objects; minimum prices are (2, 0)."""
    return validate_instance(
        {"alpha": 3, "beta": 2},
        {"b1": 2, "b2": 2, "b3": 1},
        {"b1": {"alpha": 3, "beta": 1}, "b2": {"alpha": 2}, "b3": {"beta": 1}},
    )


@pytest.fixture
def contested_single():
    """Two unit-demand buyers both valuing the single unit-supply object at 5."""
    return validate_instance(
        {"item": 1},
        {"u": 1, "v": 1},
        {"u": {"item": 5}, "v": {"item": 5}},
    )


def price_pressure_pair(m=5):
    """Two buyers, two objects, all values m; bumping one demand by one
    drives the minimum prices from (0, 0) to (m, m)."""
    base = validate_instance(
        {"x": 2, "y": 2},
        {"u": 2, "w": 2},
        {"u": {"x": m, "y": m}, "w": {"x": m, "y": m}},
    )
    bumped = validate_instance(
        {"x": 2, "y": 2},
        {"u": 3, "w": 2},
        {"u": {"x": m, "y": m}, "w": {"x": m, "y": m}},
    )
    return base, bumped


@pytest.fixture
def m_example():
    return price_pressure_pair(5)


def seeded_rng(seed=20240901):
    return random.Random(seed)
