import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes oracles importable

from gridlab.fixtures import blank
from gridlab.raster import canny_edges, to_grayscale
from gridlab.regions import label_tiles, static_grid


@pytest.fixture(scope="session")
def static_spec_8():
    """8x8 static grid over a blank 256x256 stimulus."""
    return static_grid(blank(256, 256), 8, stimulus_id="blank-256")


@pytest.fixture(scope="session")
def blank_tilegrid():
    img = blank(256, 256)
    edges = canny_edges(to_grayscale(img))
    return label_tiles(img, edges, [], 32)


def random_map(rng: np.random.Generator, h: int = 24, w: int = 24) -> np.ndarray:
    """Non-constant random map in [0, 1]."""
    while True:
        m = rng.random((h, w))
        if np.ptp(m) > 0:
            return m
