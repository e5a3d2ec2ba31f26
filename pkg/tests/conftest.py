from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from core.tensor import Tensor3
from features.base import FeatureSet


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def fixture_tensor() -> Tensor3:
    """2x2x2 tensor holding 1..8 in canonical (mode-1 fastest) layout."""
    return Tensor3.from_flat((2, 2, 2), np.arange(1.0, 9.0))


def make_views(rng: np.random.Generator, n: int, d: int, noise: float = 0.1) -> tuple[FeatureSet, FeatureSet]:
    ids = tuple(range(n))
    base = rng.standard_normal((n, d))
    view_a = FeatureSet("toy", "A", ids, base + noise * rng.standard_normal((n, d)))
    view_b = FeatureSet("toy", "B", ids, base + noise * rng.standard_normal((n, d)))
    return view_a, view_b


def write_config(path: Path, **fields: Any) -> Path:
    path.write_text(json.dumps(fields, indent=2), encoding="utf-8")
    return path
