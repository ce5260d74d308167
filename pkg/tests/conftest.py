"""Shared fixtures: small grids, fixed seeds and the checked-in experiment directory."""

from pathlib import Path

import pytest

from comonotone_mc.models.grid import TimeGrid

EXPERIMENTS = Path(__file__).resolve().parents[1] / "config" / "experiments"


@pytest.fixture
def seed():
    return 12345


@pytest.fixture
def unit_grid():
    return TimeGrid(1.0, 64)


@pytest.fixture
def small_grid():
    return TimeGrid(1.0, 15)


@pytest.fixture
def experiments_dir():
    return EXPERIMENTS
