"""The dataset item passed between generation, augmentation and evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np


@dataclass
class Sample:
    """An RGB image with its binary defect mask.

    ``image`` is ``(H, W, 3)`` float in [0, 1]; ``mask`` is ``(H, W)`` uint8
    with values in {0, 1}. ``defects`` holds the crack skeletons used to build
    the mask when the sample was rendered (empty for imported data); it is not
    persisted.
    """

    image: np.ndarray
    mask: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)
    defects: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise ValueError(f"image must be (H, W, 3), got {self.image.shape}")
        if self.mask.shape != self.image.shape[:2]:
            raise ValueError(
                f"mask shape {self.mask.shape} != image shape {self.image.shape[:2]}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    def crack_pixel_fraction(self) -> float:
        return float(np.count_nonzero(self.mask)) / self.mask.size

    def with_arrays(self, image: np.ndarray, mask: np.ndarray) -> "Sample":
        return replace(self, image=image, mask=mask, meta=dict(self.meta))
