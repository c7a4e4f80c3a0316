"""Helpers for working with run directories produced by `uqvol train`."""

from __future__ import annotations

from pathlib import Path

from .checkpoint import load_params
from .manifest import RunManifest
from .uncertainty import (
    RealizationStack,
    reconstruct_deterministic,
    reconstruct_ensemble,
    reconstruct_mc,
)
from .volume import GridSpec, Normalizer

DEFAULT_MC_SAMPLES = 100
DEFAULT_MC_RATE = 0.1
DEFAULT_MEMBERS = 10


def run_assets(run_dir):
    """(manifest, grid, normalizer, member parameter sets) for a run."""
    run_dir = Path(run_dir)
    manifest = RunManifest.load(run_dir)
    grid = GridSpec(
        tuple(manifest.grid["dims"]),
        tuple(manifest.grid["spacing"]),
        tuple(manifest.grid["origin"]),
    )
    normalizer = Normalizer(*manifest.value_range)
    members = [load_params(p)[0] for p in manifest.checkpoint_paths(run_dir)]
    return manifest, grid, normalizer, members


def build_stack(manifest, grid, normalizer, members, m=None, rate=None, seed=0):
    """Realization stack per the run's method; `none` runs yield a single
    deterministic realization.
    """
    if manifest.method == "mcdropout":
        return reconstruct_mc(
            members[0],
            grid,
            normalizer,
            m=m or DEFAULT_MC_SAMPLES,
            rate=rate if rate is not None else DEFAULT_MC_RATE,
            seed=seed,
        )
    if manifest.method == "ensemble":
        take = members if m is None else members[: max(1, min(m, len(members)))]
        return reconstruct_ensemble(take, grid, normalizer)
    return RealizationStack(
        method="none",
        realizations=[reconstruct_deterministic(members[0], grid, normalizer)],
    )
