"""Dense 3D scalar volumes: data model, raw-file I/O, normalization, and
the synthetic teardrop generator.

File format: headerless little-endian float32 `.raw` with a JSON sidecar
(same stem, `.json` extension) holding dims/spacing/origin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class VolumeSizeMismatch(ValueError):
    """Raw file length does not match the expected dims."""


class NonFiniteValues(ValueError):
    """Volume data contains NaN or Inf."""


class DegenerateRange(ValueError):
    """Value range has zero width; normalization is undefined."""


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a regular grid, without the values."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(n) < 1 for n in self.dims):
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz


@dataclass(frozen=True)
class Volume:
    """Dense scalar grid. `values` has shape (nx, ny, nz), C order, and is
    made read-only so instances can be shared across threads.
    """

    values: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    value_min: float = 0.0  # cached in __post_init__
    value_max: float = 0.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values)
        if arr.ndim != 3:
            raise ValueError(f"values must be a 3D array, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFiniteValues("volume contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "value_min", float(arr.min()))
        object.__setattr__(self, "value_max", float(arr.max()))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.dims, self.spacing, self.origin)

    def flat(self) -> np.ndarray:
        """Row-major 1D view of the values."""
        return self.values.reshape(-1)


@dataclass(frozen=True)
class Normalizer:
    """Affine bijection [src_min, src_max] -> [-1, 1]."""

    src_min: float
    src_max: float

    def __post_init__(self):
        if not self.src_min < self.src_max:
            raise DegenerateRange(
                f"need src_min < src_max, got [{self.src_min}, {self.src_max}]"
            )

    def apply(self, x):
        return -1.0 + 2.0 * (np.asarray(x) - self.src_min) / (self.src_max - self.src_min)

    def invert(self, y):
        return self.src_min + (np.asarray(y) + 1.0) * (self.src_max - self.src_min) / 2.0


def make_normalizer(volume: Volume) -> Normalizer:
    """Normalizer mapping the volume's value range onto [-1, 1]."""
    return Normalizer(volume.value_min, volume.value_max)


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def load_volume(path, dims=None, spacing=None, origin=None) -> Volume:
    """Load a headerless little-endian float32 raw volume.

    Grid metadata comes either from the keyword arguments or, when `dims`
    is omitted, from the JSON sidecar next to the file.
    """
    path = Path(path)
    if dims is None:
        sidecar = _sidecar_path(path)
        if not sidecar.exists():
            raise FileNotFoundError(f"no dims given and no sidecar at {sidecar}")
        meta = json.loads(sidecar.read_text())
        dims = meta["dims"]
        spacing = spacing or meta.get("spacing")
        origin = origin or meta.get("origin")
    dims = tuple(int(n) for n in dims)
    raw = np.fromfile(path, dtype="<f4")
    expected = int(np.prod(dims))
    if raw.size != expected:
        raise VolumeSizeMismatch(
            f"{path}: {raw.size} floats on disk, dims {dims} need {expected}"
        )
    if not np.isfinite(raw).all():
        raise NonFiniteValues(f"{path}: raw data contains NaN/Inf")
    return Volume(
        raw.reshape(dims),
        spacing=tuple(spacing) if spacing else (1.0, 1.0, 1.0),
        origin=tuple(origin) if origin else (0.0, 0.0, 0.0),
    )


def save_volume(volume: Volume, path) -> None:
    """Write `.raw` (little-endian float32) plus the JSON sidecar.

    Inverse of load_volume; round-trips float32 volumes bit-exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    volume.values.astype("<f4", copy=False).tofile(path)
    meta = {
        "dims": list(volume.dims),
        "spacing": list(volume.spacing),
        "origin": list(volume.origin),
    }
    _sidecar_path(path).write_text(json.dumps(meta) + "\n")


def generate_teardrop(n: int) -> Volume:
    """Sample g(x,y,z) = 0.5*x^5 + 0.5*x^4 - y^2 - z^2 on the uniform
    n-per-axis lattice of [-1,1]^3.
    """
    if n < 2:
        raise ValueError(f"grid size must be >= 2, got {n}")
    axis = np.linspace(-1.0, 1.0, n)
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    g = 0.5 * x**5 + 0.5 * x**4 - y**2 - z**2
    h = 2.0 / (n - 1)
    return Volume(g.astype(np.float32), spacing=(h, h, h), origin=(-1.0, -1.0, -1.0))


def lattice_coordinates(dims, dtype=np.float32) -> np.ndarray:
    """(N, 3) array of lattice-point coordinates in [-1,1]^3, in the same
    row-major order as Volume.flat().
    """
    axes = [np.linspace(-1.0, 1.0, n, dtype=np.float64) for n in dims]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1).astype(dtype)
