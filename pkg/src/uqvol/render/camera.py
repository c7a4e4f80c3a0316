"""Perspective pinhole camera and its ray bundle."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Camera:
    eye: tuple[float, float, float]
    look_at: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)
    fov_deg: float = 45.0
    width: int = 512
    height: int = 512

    def __post_init__(self):
        eye = tuple(float(v) for v in self.eye)
        look_at = tuple(float(v) for v in self.look_at)
        up = tuple(float(v) for v in self.up)
        object.__setattr__(self, "eye", eye)
        object.__setattr__(self, "look_at", look_at)
        object.__setattr__(self, "up", up)
        if self.width < 1 or self.height < 1:
            raise ValueError("image dims must be positive")
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError(f"fov_deg must be in (0, 180), got {self.fov_deg}")
        fwd = np.array(look_at) - np.array(eye)
        if np.linalg.norm(fwd) == 0.0:
            raise ValueError("eye and look_at coincide")
        if np.linalg.norm(np.cross(fwd, np.array(up))) == 0.0:
            raise ValueError("up vector is parallel to the view direction")

    def rays(self) -> tuple[np.ndarray, np.ndarray]:
        """(origin (3,), directions (H*W, 3)) in row-major pixel order.

        Directions are unit length; pixel centers are sampled.
        """
        eye = np.array(self.eye, dtype=np.float64)
        forward = np.array(self.look_at, dtype=np.float64) - eye
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.array(self.up, dtype=np.float64))
        right /= np.linalg.norm(right)
        up = np.cross(right, forward)

        half_h = np.tan(np.radians(self.fov_deg) / 2.0)
        half_w = half_h * self.width / self.height
        cols = (2.0 * (np.arange(self.width) + 0.5) / self.width - 1.0) * half_w
        rows = (1.0 - 2.0 * (np.arange(self.height) + 0.5) / self.height) * half_h
        u, v = np.meshgrid(cols, rows)  # (H, W)
        dirs = (
            forward[None, :]
            + u.reshape(-1, 1) * right[None, :]
            + v.reshape(-1, 1) * up[None, :]
        )
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return eye, dirs

    def to_dict(self) -> dict:
        return {
            "eye": list(self.eye),
            "look_at": list(self.look_at),
            "up": list(self.up),
            "fov_deg": self.fov_deg,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Camera":
        return cls(
            eye=tuple(d["eye"]),
            look_at=tuple(d["look_at"]),
            up=tuple(d.get("up", (0.0, 0.0, 1.0))),
            fov_deg=float(d.get("fov_deg", 45.0)),
            width=int(d.get("width", 512)),
            height=int(d.get("height", 512)),
        )

    @classmethod
    def from_json(cls, path) -> "Camera":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def default_camera_for(grid_dims, spacing, origin, width=512, height=512) -> Camera:
    """Camera on the box diagonal, framing the whole volume."""
    extent = [(n - 1) * s for n, s in zip(grid_dims, spacing)]
    center = [o + e / 2.0 for o, e in zip(origin, extent)]
    radius = 0.5 * float(np.linalg.norm(extent))
    eye = tuple(c + 2.6 * radius / np.sqrt(3.0) for c in center)
    return Camera(eye=eye, look_at=tuple(center), width=width, height=height)
