from dataclasses import replace

import numpy as np
import pytest

from pavesynth.sample import Sample
from pavesynth.scenecomp import SceneConfig

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_config():
    """A 5 m x 3.75 m patch at 2 cm/px; fast enough for per-test rendering."""
    return replace(SceneConfig(), image_size=(256, 192), gsd=0.02, defects_per_scene=(1, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def blob_sample(h=64, w=80, seed=0):
    """Sample whose image is its own mask (as gray), blob kept off the border."""
    g = np.random.default_rng(seed)
    mask = np.zeros((h, w), dtype=np.uint8)
    yy, xx = np.mgrid[:h, :w]
    for _ in range(3):
        cy, cx = g.uniform(h * 0.3, h * 0.7), g.uniform(w * 0.3, w * 0.7)
        r = g.uniform(4, 9)
        mask[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = 1
    image = np.repeat(mask[:, :, None].astype(np.float64), 3, axis=2)
    return Sample(image, mask, {"id": "blob"})
