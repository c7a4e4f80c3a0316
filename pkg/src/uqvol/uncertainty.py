"""Volume realizations from a trained field (MC dropout passes or ensemble
members), their mean/std summary, and volume-space PSNR/RMSE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import MODE_MC, DropoutState, FieldTopology, ParameterSet, forward
from .volume import GridSpec, Normalizer, Volume

# Grid sweeps run in fixed-size chunks so the per-realization dropout
# stream is reproducible regardless of grid size.
SWEEP_CHUNK = 16384

METHOD_MC = "mcdropout"
METHOD_ENSEMBLE = "ensemble"


@dataclass
class RealizationStack:
    """m reconstructed volumes sharing one grid."""

    method: str
    realizations: list[Volume]
    inference_rate: Optional[float] = None  # mcdropout only
    seeds: Optional[list[int]] = None

    def __post_init__(self):
        if not self.realizations:
            raise ValueError("need at least one realization")
        dims = self.realizations[0].dims
        if any(v.dims != dims for v in self.realizations):
            raise ValueError("realizations must share dims")

    @property
    def m(self) -> int:
        return len(self.realizations)

    @property
    def grid(self) -> GridSpec:
        return self.realizations[0].grid

    def subset(self, m: int) -> "RealizationStack":
        """First m realizations (for sample-count sweeps)."""
        if not 1 <= m <= self.m:
            raise ValueError(f"m must be in [1, {self.m}]")
        return RealizationStack(
            method=self.method,
            realizations=self.realizations[:m],
            inference_rate=self.inference_rate,
            seeds=self.seeds[:m] if self.seeds else None,
        )


@dataclass
class FieldSummary:
    """Per-voxel mean and population standard deviation, in data units."""

    mean_volume: Volume
    std_volume: Volume


def _sweep(
    params: ParameterSet,
    grid: GridSpec,
    normalizer: Normalizer,
    dropout: Optional[DropoutState],
) -> Volume:
    """One full forward pass over the lattice, denormalized."""
    from .volume import lattice_coordinates

    coords = lattice_coordinates(grid.dims, dtype=params.dtype)
    out = np.empty(coords.shape[0], dtype=np.float64)
    tape = None  # recycled across chunks
    for start in range(0, coords.shape[0], SWEEP_CHUNK):
        chunk = coords[start : start + SWEEP_CHUNK]
        pred, tape = forward(params, chunk, dropout, want_tape=True, tape=tape)
        out[start : start + SWEEP_CHUNK] = pred
    values = normalizer.invert(out).astype(np.float32).reshape(grid.dims)
    return Volume(values, spacing=grid.spacing, origin=grid.origin)


def reconstruct_deterministic(
    params: ParameterSet,
    grid: GridSpec,
    normalizer: Normalizer,
) -> Volume:
    """Single dropout-free reconstruction of the field on the grid."""
    return _sweep(params, grid, normalizer, None)


def reconstruct_mc(
    params: ParameterSet,
    grid: GridSpec,
    normalizer: Normalizer,
    m: int = 100,
    rate: float = 0.1,
    seed: int = 0,
) -> RealizationStack:
    """m stochastic sweeps with dropout active at inference; realization i
    draws its masks from seed + i.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 < rate < 1.0:
        raise ValueError(f"inference dropout rate must be in (0, 1), got {rate}")
    seeds = [seed + i for i in range(m)]
    realizations = []
    for s in seeds:
        dropout = DropoutState(rate=rate, mode=MODE_MC, seed=s)
        realizations.append(_sweep(params, grid, normalizer, dropout))
    return RealizationStack(
        method=METHOD_MC, realizations=realizations, inference_rate=rate, seeds=seeds
    )


def reconstruct_ensemble(
    members: list[ParameterSet],
    grid: GridSpec,
    normalizer: Normalizer,
) -> RealizationStack:
    """One dropout-free realization per ensemble member."""
    if not members:
        raise ValueError("need at least one member")
    realizations = [reconstruct_deterministic(p, grid, normalizer) for p in members]
    return RealizationStack(method=METHOD_ENSEMBLE, realizations=realizations)


def summarize(stack: RealizationStack) -> FieldSummary:
    """Per-voxel mean and population std (divide by m), accumulated at
    64-bit. For m = 1 the std volume is identically zero.
    """
    data = np.stack([v.values.astype(np.float64) for v in stack.realizations])
    mean = data.mean(axis=0)
    std = np.sqrt(np.mean((data - mean) ** 2, axis=0))
    grid = stack.grid
    return FieldSummary(
        mean_volume=Volume(mean, spacing=grid.spacing, origin=grid.origin),
        std_volume=Volume(std, spacing=grid.spacing, origin=grid.origin),
    )


def psnr_rmse(reference: Volume, candidate: Volume) -> tuple[float, float]:
    """(psnr_db, rmse) with peak = the reference volume's value range.

    PSNR is +inf when the volumes agree exactly.
    """
    if reference.dims != candidate.dims:
        raise ValueError(f"dims mismatch: {reference.dims} vs {candidate.dims}")
    diff = reference.values.astype(np.float64) - candidate.values.astype(np.float64)
    rmse = float(np.sqrt(np.mean(diff**2)))
    if rmse == 0.0:
        return float("inf"), 0.0
    peak = reference.value_max - reference.value_min
    return 20.0 * np.log10(peak / rmse), rmse
