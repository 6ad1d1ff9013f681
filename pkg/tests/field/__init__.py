import numpy as np
import pytest

from pmarray.geometry import BarMagnet

from ..models import random_frames

LONG = (0.006, 0.025, 0.006)


@pytest.fixture
def bar() -> BarMagnet:
    """A 12x50x12 mm bar in an arbitrary orientation away from the origin."""
    frame = random_frames(np.random.default_rng(11), 1)[0]
    return BarMagnet.from_frame(0, (0.03, -0.01, 0.02), frame, LONG, "cube")


def exterior_points(magnet: BarMagnet, count: int, seed: int = 0) -> np.ndarray:
    """Returns random global points between 1.2 and 4 bounding radii from a magnet."""
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(count, 3))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    radii = magnet.bounding_radius * rng.uniform(1.2, 4.0, size=count)
    return np.array(magnet.center) + directions * radii[:, None]


def near_face_points(magnet: BarMagnet, count: int, seed: int = 0) -> np.ndarray:
    """Returns random global points 0.2 to 2 mm outside the faces of a magnet."""
    rng = np.random.default_rng(seed)
    half = np.array(magnet.half_dims)
    local = rng.uniform(-1.0, 1.0, size=(count, 3)) * half
    axis = rng.integers(0, 3, size=count)
    side = rng.choice([-1.0, 1.0], size=count)
    rows = np.arange(count)
    local[rows, axis] = side * (half[axis] + rng.uniform(2e-4, 2e-3, size=count))
    return magnet.to_global(local)
