"""Classical crack detector: pixels darker than their neighbourhood.

The score is a local black-hat in units of local contrast,
``d = max(0, mean_w - x) / max(std_w, 1e-3)``, squashed by a logistic so
that ``d == 1`` (one local standard deviation darker) maps to 0.5.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage
from scipy.special import expit

from .errors import ParameterError

STD_FLOOR = 1e-3
GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


def baseline_segment(image: np.ndarray, window_px: int = 31, k: float = 4.0) -> np.ndarray:
    """Per-pixel crack probability for an RGB (or gray) image in [0, 1]."""
    window_px = int(window_px)
    if window_px < 3 or window_px % 2 == 0:
        raise ParameterError(f"window_px must be odd and >= 3, got {window_px}")
    img = np.asarray(image, dtype=np.float64)
    gray = img @ GRAY_WEIGHTS if img.ndim == 3 else img
    mean = ndimage.uniform_filter(gray, window_px, mode="reflect")
    sq = ndimage.uniform_filter(gray * gray, window_px, mode="reflect")
    std = np.sqrt(np.maximum(sq - mean * mean, 0.0))
    darkness = np.maximum(mean - gray, 0.0) / np.maximum(std, STD_FLOOR)
    return expit(k * (darkness - 1.0))
