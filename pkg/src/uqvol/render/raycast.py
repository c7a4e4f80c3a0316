"""Direct volume rendering: per-pixel ray marching with front-to-back
compositing over a black background.

The compiled kernel is used when available; UQVOL_BACKEND=python forces
the numpy fallback and UQVOL_THREADS caps kernel parallelism.
"""

from __future__ import annotations

import os

import numpy as np

from ..volume import Volume
from . import _compositing_np
from .camera import Camera
from .image import RGBImage
from .transfer import TransferFunction

try:
    from . import _compositing_cy
except ImportError:
    _compositing_cy = None


def active_backend() -> str:
    """Name of the kernel that raycast will run: "cython" or "python"."""
    forced = os.environ.get("UQVOL_BACKEND", "auto")
    if forced == "python" or _compositing_cy is None:
        return "python"
    if forced not in ("auto", "cython"):
        raise ValueError(f"UQVOL_BACKEND must be auto|cython|python, got {forced!r}")
    if forced == "cython" and _compositing_cy is None:
        raise RuntimeError("compiled kernel requested but not built")
    return "cython"


def _render_threads() -> int:
    raw = os.environ.get("UQVOL_THREADS", "0")
    try:
        return max(0, int(raw))
    except ValueError:
        return 0


def raycast(
    volume: Volume,
    tf: TransferFunction,
    camera: Camera,
    step: float | None = None,
    value_range: tuple[float, float] | None = None,
) -> RGBImage:
    """Render the volume. `step` is the world-space sample distance
    (default half the minimum voxel spacing); opacity is corrected as
    1 - (1-a)^(step/ref) with ref = min voxel spacing, so transfer
    functions are step-size independent. `value_range` overrides the range
    used to normalize samples before classification (defaults to the
    volume's own range).
    """
    ref_step = min(volume.spacing)
    if step is None:
        step = 0.5 * ref_step
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    vmin, vmax = value_range if value_range is not None else (
        volume.value_min,
        volume.value_max,
    )
    eye, dirs = camera.rays()
    args = (
        np.ascontiguousarray(volume.values, dtype=np.float32),
        np.array(volume.origin, dtype=np.float64),
        np.array(volume.spacing, dtype=np.float64),
        float(vmin),
        float(vmax),
        np.ascontiguousarray(tf.positions),
        np.ascontiguousarray(tf.rgba),
        eye,
        dirs,
        float(step),
        float(ref_step),
    )
    if active_backend() == "cython":
        flat = _compositing_cy.composite_rays(*args, num_threads=_render_threads())
    else:
        flat = _compositing_np.composite_rays(*args)
    return RGBImage(flat.reshape(camera.height, camera.width, 3))


def render_stack(
    stack,
    tf: TransferFunction,
    camera: Camera,
    step: float | None = None,
    value_range: tuple[float, float] | None = None,
) -> list[RGBImage]:
    """One image per realization, all with identical rendering parameters.

    Unless overridden, the normalization range is shared across the stack
    (global min/max over all realizations) so every realization sees the
    same transfer-function mapping.
    """
    if value_range is None:
        value_range = (
            min(v.value_min for v in stack.realizations),
            max(v.value_max for v in stack.realizations),
        )
    return [
        raycast(v, tf, camera, step=step, value_range=value_range)
        for v in stack.realizations
    ]
