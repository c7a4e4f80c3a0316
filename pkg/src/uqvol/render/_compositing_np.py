"""Pure-numpy ray-marching kernel: the fallback backend.

Mirrors the arithmetic of the compiled kernel step for step (same slab
test, trilinear formula, np.interp-compatible TF lookup, and compositing
order) so the two backends agree to float64 rounding.
"""

from __future__ import annotations

import numpy as np


def composite_rays(
    values: np.ndarray,  # (nx, ny, nz) float32
    bmin: np.ndarray,  # (3,) float64, world position of voxel (0,0,0)
    spacing: np.ndarray,  # (3,) float64
    vmin: float,
    vmax: float,
    tf_pos: np.ndarray,  # (P,) float64
    tf_rgba: np.ndarray,  # (P, 4) float64
    eye: np.ndarray,  # (3,) float64
    dirs: np.ndarray,  # (R, 3) float64, unit length
    step: float,
    ref_step: float,
) -> np.ndarray:
    """Front-to-back compositing over black; returns (R, 3) float64."""
    dims = values.shape
    n_rays = dirs.shape[0]
    bmax = bmin + (np.array(dims, dtype=np.float64) - 1.0) * spacing
    inv_range = 1.0 / (vmax - vmin) if vmax > vmin else 0.0
    exponent = step / ref_step

    d = dirs
    zero = d == 0.0
    safe_d = np.where(zero, 1.0, d)
    t_a = (bmin[None, :] - eye[None, :]) / safe_d
    t_b = (bmax[None, :] - eye[None, :]) / safe_d
    lo = np.where(zero, -np.inf, np.minimum(t_a, t_b))
    hi = np.where(zero, np.inf, np.maximum(t_a, t_b))
    inside = (eye >= bmin) & (eye <= bmax)
    hit = (~zero | inside[None, :]).all(axis=1)
    t_near = np.maximum(lo.max(axis=1), 0.0)
    t_far = hi.min(axis=1)
    hit &= t_near < t_far

    color = np.zeros((n_rays, 3), dtype=np.float64)
    alpha = np.zeros(n_rays, dtype=np.float64)
    nx, ny, nz = dims
    k = 0
    while True:
        t = t_near + (k + 0.5) * step
        active = hit & (t < t_far) & (alpha <= 0.999)
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        p = eye[None, :] + t[idx, None] * d[idx]
        g = (p - bmin[None, :]) / spacing[None, :]
        i0 = np.floor(g).astype(np.int64)
        np.clip(i0, 0, np.array(dims) - 2, out=i0)
        f = np.clip(g - i0, 0.0, 1.0)
        ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
        fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]

        v = values
        c00 = v[ix, iy, iz] * (1.0 - fx) + v[ix + 1, iy, iz] * fx
        c10 = v[ix, iy + 1, iz] * (1.0 - fx) + v[ix + 1, iy + 1, iz] * fx
        c01 = v[ix, iy, iz + 1] * (1.0 - fx) + v[ix + 1, iy, iz + 1] * fx
        c11 = v[ix, iy + 1, iz + 1] * (1.0 - fx) + v[ix + 1, iy + 1, iz + 1] * fx
        c0 = c00 * (1.0 - fy) + c10 * fy
        c1 = c01 * (1.0 - fy) + c11 * fy
        sample = c0 * (1.0 - fz) + c1 * fz

        if inv_range == 0.0:
            s = np.full(sample.shape, 0.5)
        else:
            s = np.clip((sample - vmin) * inv_range, 0.0, 1.0)
        r = np.interp(s, tf_pos, tf_rgba[:, 0])
        gch = np.interp(s, tf_pos, tf_rgba[:, 1])
        b = np.interp(s, tf_pos, tf_rgba[:, 2])
        a = np.interp(s, tf_pos, tf_rgba[:, 3])
        a_corr = 1.0 - np.power(1.0 - a, exponent)

        w = (1.0 - alpha[idx]) * a_corr
        color[idx, 0] += w * r
        color[idx, 1] += w * gch
        color[idx, 2] += w * b
        alpha[idx] += w
        k += 1
    return color
