"""Pytest configuration and shared fixtures"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from momentgap.sharp_constant import compute_c


@pytest.fixture
def rng():
    """Seeded generator; each test gets a fresh stream."""
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def c46():
    """C(4, 6) computed once per session."""
    return compute_c(4.0, 6.0)
