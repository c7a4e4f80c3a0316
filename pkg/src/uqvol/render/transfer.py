"""Piecewise-linear transfer functions: normalized scalar in [0,1] -> RGBA."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class TransferFunction:
    """Sorted control points (position, r, g, b, a), linearly interpolated.

    Positions must be strictly increasing with the first at 0 and the last
    at 1; all channels lie in [0, 1]. `lookup_resolution` sizes the baked
    lookup table used for previews.
    """

    positions: np.ndarray  # (P,)
    rgba: np.ndarray  # (P, 4)
    lookup_resolution: int = 256

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1)
        rgba = np.asarray(self.rgba, dtype=np.float64)
        if pos.size < 2:
            raise ValueError("need at least two control points")
        if rgba.shape != (pos.size, 4):
            raise ValueError(f"rgba must be ({pos.size}, 4), got {rgba.shape}")
        if not np.all(np.diff(pos) > 0):
            raise ValueError("control point positions must be strictly increasing")
        if pos[0] != 0.0 or pos[-1] != 1.0:
            raise ValueError("first control point must sit at 0 and last at 1")
        if rgba.min() < 0.0 or rgba.max() > 1.0:
            raise ValueError("rgba channels must lie in [0, 1]")
        if self.lookup_resolution < 2:
            raise ValueError("lookup_resolution must be >= 2")
        pos.setflags(write=False)
        rgba.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "rgba", rgba)

    def classify(self, s):
        """RGBA at normalized scalar(s) s, clamped to [0, 1].

        Scalar input returns a (4,) array; an (N,) input returns (N, 4).
        """
        s = np.clip(np.asarray(s, dtype=np.float64), 0.0, 1.0)
        out = np.stack(
            [np.interp(s, self.positions, self.rgba[:, c]) for c in range(4)], axis=-1
        )
        return out

    def lut(self, resolution: int | None = None) -> np.ndarray:
        """(R, 4) table sampled uniformly on [0, 1]."""
        r = resolution or self.lookup_resolution
        return self.classify(np.linspace(0.0, 1.0, r))

    def to_dict(self) -> dict:
        return {
            "points": [
                {"x": float(x), "rgba": [float(c) for c in row]}
                for x, row in zip(self.positions, self.rgba)
            ],
            "lookup_resolution": self.lookup_resolution,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransferFunction":
        points = d["points"]
        return cls(
            positions=np.array([p["x"] for p in points]),
            rgba=np.array([p["rgba"] for p in points]),
            lookup_resolution=int(d.get("lookup_resolution", 256)),
        )

    @classmethod
    def from_json(cls, path) -> "TransferFunction":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def grayscale_ramp(max_alpha: float = 1.0) -> TransferFunction:
    """Black-transparent to white-opaque ramp, the default rendering TF."""
    return TransferFunction(
        positions=np.array([0.0, 1.0]),
        rgba=np.array([[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, max_alpha]]),
    )
