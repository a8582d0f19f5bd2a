from __future__ import annotations

import pytest

import helpers


@pytest.fixture
def course():
    """(model, graph, parsed policy) for the higher-education example."""
    return helpers.course_example()


@pytest.fixture
def wall():
    return helpers.wall_example()


@pytest.fixture
def sod3():
    return helpers.sod_example(n_actions=3, n_users=3)
