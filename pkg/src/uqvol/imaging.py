"""Image-space statistics over realization renderings: mean image,
per-channel and combined uncertainty maps, error maps, grayscale encoding,
and 8-bit PSNR/RMSE.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .render.image import RGBImage

SCALE_PER_IMAGE = "per-image"
SCALE_CONSISTENT = "consistent"


@dataclass
class UQImageSet:
    """Aggregated rendering statistics for one realization stack.

    channel_std holds the per-pixel population std of r, g, b;
    combined is their per-pixel arithmetic mean. normalization_scale is
    the value mapped to full darkness when encoding grayscale maps.
    """

    mean: RGBImage
    channel_std: tuple[np.ndarray, np.ndarray, np.ndarray]
    combined: np.ndarray
    normalization_scale: float
    scale_mode: str = SCALE_PER_IMAGE
    error: Optional[np.ndarray] = None


def aggregate(images: list[RGBImage]) -> UQImageSet:
    """Per-pixel, per-channel mean and population std over the images,
    accumulated at 64-bit. The default normalization scale is the max of
    the combined map ("per-image" mode); use consistent_scale to share a
    scale across several sets.
    """
    if not images:
        raise ValueError("need at least one image")
    shape = images[0].pixels.shape
    if any(im.pixels.shape != shape for im in images):
        raise ValueError("images must share dimensions")
    data = np.stack([im.pixels for im in images])  # (m, H, W, 3)
    mean = data.mean(axis=0)
    std = np.sqrt(np.mean((data - mean) ** 2, axis=0))  # population std
    combined = std.mean(axis=2)
    # scales at the float64 accumulation-noise floor would amplify pure
    # rounding error to full contrast; treat them as "no uncertainty"
    scale = float(combined.max())
    return UQImageSet(
        mean=RGBImage(np.clip(mean, 0.0, 1.0)),
        channel_std=(std[..., 0], std[..., 1], std[..., 2]),
        combined=combined,
        normalization_scale=scale if scale > 1e-13 else 1.0,
        scale_mode=SCALE_PER_IMAGE,
    )


def consistent_scale(sets: list[UQImageSet]) -> float:
    """Shared display scale (max combined uncertainty over all sets);
    stamps it into each set so their grayscale maps are comparable.
    """
    scale = max(float(s.combined.max()) for s in sets)
    scale = scale if scale > 1e-13 else 1.0
    for s in sets:
        s.normalization_scale = scale
        s.scale_mode = SCALE_CONSISTENT
    return scale


def error_map(gt: RGBImage, mean: RGBImage) -> np.ndarray:
    """Per-pixel mean over channels of the absolute color error."""
    if gt.pixels.shape != mean.pixels.shape:
        raise ValueError("images must share dimensions")
    return np.abs(gt.pixels - mean.pixels).mean(axis=2)


def to_grayscale(values: np.ndarray, scale: float) -> np.ndarray:
    """Encode a non-negative map as 8-bit grayscale, darker = higher.

    values/scale is clamped to [0,1] and mapped to round(255*(1-v)); an
    all-zero map therefore encodes to pure white.
    """
    if np.any(values < 0.0):
        raise ValueError("map values must be >= 0")
    if scale <= 0.0:
        scale = 1.0
    v = np.clip(values / scale, 0.0, 1.0)
    return np.rint(255.0 * (1.0 - v)).astype(np.uint8)


def quantize_u8(image: RGBImage) -> np.ndarray:
    """8-bit quantization used for files and image-space metrics."""
    return np.rint(255.0 * np.clip(image.pixels, 0.0, 1.0)).astype(np.uint8)


def image_psnr_rmse(gt: RGBImage, pred: RGBImage) -> tuple[float, float]:
    """(psnr_db, rmse) in 8-bit units: both images are quantized to 0-255
    first and PSNR uses peak 255. Identical images give (+inf, 0).
    """
    if gt.pixels.shape != pred.pixels.shape:
        raise ValueError("images must share dimensions")
    a = quantize_u8(gt).astype(np.float64)
    b = quantize_u8(pred).astype(np.float64)
    rmse = float(np.sqrt(np.mean((a - b) ** 2)))
    if rmse == 0.0:
        return float("inf"), 0.0
    return 20.0 * np.log10(255.0 / rmse), rmse


def write_png(image, path) -> None:
    """Write an RGBImage (as 8-bit RGB) or a uint8 2D array (grayscale).

    Output bytes are deterministic for identical input.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(image, RGBImage):
        Image.fromarray(quantize_u8(image), mode="RGB").save(path, format="PNG")
        return
    arr = np.asarray(image)
    if arr.dtype != np.uint8 or arr.ndim != 2:
        raise ValueError("expected an RGBImage or a 2D uint8 array")
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    """Decode a PNG back to its uint8 array (2D grayscale or 3D RGB)."""
    with Image.open(path) as im:
        return np.asarray(im)
