"""Pytest configuration and fixtures."""

import pytest
from pathlib import Path
import tempfile
import shutil


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test outputs."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    # Cleanup after test
    if temp_path.exists():
        shutil.rmtree(temp_path)


@pytest.fixture
def presets():
    """Named initial data as PhasePoints."""
    from soft2hard.config import PRESETS
    from soft2hard.models import PhasePoint

    return {name: PhasePoint.from_array(values) for name, values in PRESETS.items()}


@pytest.fixture
def head_on(presets):
    return presets["head_on"]


@pytest.fixture
def oblique(presets):
    return presets["oblique"]


@pytest.fixture
def grazing(presets):
    return presets["grazing"]


@pytest.fixture
def standard_potential():
    """Φ₀(r) = (1 − r)³/r."""
    from soft2hard.potentials import standard_family

    return standard_family(1.0, 3.0)


@pytest.fixture
def hardened(standard_potential):
    """Factory for Φ^ε built on the standard potential."""
    from soft2hard.potentials import HardenedPotential

    def make(eps):
        return HardenedPotential(standard_potential, eps)
    return make
