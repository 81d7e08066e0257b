from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
TOOLS = ROOT / "tools"
if str(TOOLS) not in sys.path:
    sys.path.insert(0, str(TOOLS))


@pytest.fixture
def data_dir() -> Path:
    return ROOT / "data"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240617)


def random_density(rng: np.random.Generator, d: int) -> np.ndarray:
    ginibre = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = ginibre @ ginibre.conj().T
    return rho / np.trace(rho).real


def random_pure(rng: np.random.Generator, d: int) -> np.ndarray:
    vector = rng.normal(size=d) + 1j * rng.normal(size=d)
    vector /= np.linalg.norm(vector)
    return np.outer(vector, vector.conj())
