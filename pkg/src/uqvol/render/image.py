"""RGB image container used by the renderer and the imaging stage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RGBImage:
    """(height, width, 3) float64 pixels in [0, 1], row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"pixels must be (H, W, 3), got {arr.shape}")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("pixel channels must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]
