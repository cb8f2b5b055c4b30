import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memnav.entries import MemoryEntry  # noqa: E402

D = 64


def unit(i, d=D):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def rand_unit(rng, d=D):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def entry(t, vec=None, conf=1.0, obj=1.0, anchor=False):
    vec = unit(0) if vec is None else vec
    return MemoryEntry(t, vec, vec, conf, obj, anchor)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
