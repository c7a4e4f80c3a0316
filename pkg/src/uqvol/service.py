"""HTTP rendering service for interactive transfer-function exploration.

Volume realizations are reconstructed once per (model, m, rate, seed) and
cached in memory; transfer-function or camera changes then only re-run the
ray caster and the image statistics. Concurrent requests that hit a cache
entry mid-build receive 503 and should retry.
"""

from __future__ import annotations

import base64
import io
import threading
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .checkpoint import load_params
from .runs import DEFAULT_MC_RATE, DEFAULT_MC_SAMPLES, build_stack
from .imaging import (
    aggregate,
    error_map,
    image_psnr_rmse,
    quantize_u8,
    to_grayscale,
)
from .manifest import MANIFEST_NAME, RunManifest
from .render import Camera, TransferFunction, default_camera_for, raycast
from .render.raycast import render_stack
from .volume import GridSpec, Normalizer, load_volume


class ModelRegistry:
    """Trained runs available to the service, scanned from a directory of
    run directories (each holding a run_manifest.json).
    """

    def __init__(self, root):
        self.root = Path(root)
        self._entries: dict[str, Path] = {}
        self.rescan()

    def rescan(self) -> None:
        entries = {}
        candidates = [self.root] + sorted(p for p in self.root.iterdir() if p.is_dir())
        for run_dir in candidates:
            if (run_dir / MANIFEST_NAME).exists():
                manifest = RunManifest.load(run_dir)
                entries[manifest.tag] = run_dir
        self._entries = entries

    def tags(self) -> list[str]:
        return sorted(self._entries)

    def run_dir(self, tag: str) -> Path:
        if tag not in self._entries:
            raise KeyError(tag)
        return self._entries[tag]


class CacheWarming(Exception):
    """Another request is currently reconstructing this cache entry."""


class StackCache:
    """(tag, m, rate, seed) -> RealizationStack, built at most once."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries = {}
        self._building = set()
        self.hits = 0
        self.misses = 0

    def get_or_build(self, key, builder):
        with self._lock:
            if key in self._entries:
                self.hits += 1
                return self._entries[key]
            if key in self._building:
                raise CacheWarming(str(key))
            self._building.add(key)
            self.misses += 1
        try:
            stack = builder()
            with self._lock:
                self._entries[key] = stack
            return stack
        finally:
            with self._lock:
                self._building.discard(key)

    def stats(self) -> dict:
        with self._lock:
            return {
                "cache_hits": self.hits,
                "cache_misses": self.misses,
                "cache_entries": [list(map(str, k)) for k in self._entries],
                "warming": [list(map(str, k)) for k in self._building],
            }


class RenderRequest(BaseModel):
    model: str
    tf: dict
    camera: Optional[dict] = None
    m: Optional[int] = None
    rate: Optional[float] = None
    seed: int = 0
    step: Optional[float] = None
    width: int = 512
    height: int = 512
    include_error: bool = True
    # None = per-image normalization (map max); a positive value pins the
    # grayscale scale so maps from different requests stay comparable
    scale: Optional[float] = None


def _png_b64(array_or_image) -> str:
    from PIL import Image

    import numpy as np

    if hasattr(array_or_image, "pixels"):
        img = Image.fromarray(quantize_u8(array_or_image), mode="RGB")
    else:
        img = Image.fromarray(np.asarray(array_or_image), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(registry: ModelRegistry) -> FastAPI:
    app = FastAPI(title="uqvol render service")
    cache = StackCache()
    render_count = {"n": 0}
    static_dir = Path(__file__).parent / "static"

    def load_run(tag: str):
        try:
            run_dir = registry.run_dir(tag)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown model {tag!r}")
        manifest = RunManifest.load(run_dir)
        return run_dir, manifest

    @app.get("/models")
    def models():
        out = []
        for tag in registry.tags():
            run_dir, manifest = load_run(tag)
            out.append(
                {
                    "tag": tag,
                    "method": manifest.method,
                    "dims": manifest.grid["dims"],
                    "default_m": DEFAULT_MC_SAMPLES
                    if manifest.method == "mcdropout"
                    else len(manifest.checkpoints),
                }
            )
        return out

    @app.get("/stats")
    def stats():
        return {"renders": render_count["n"], **cache.stats()}

    @app.post("/render")
    def render(req: RenderRequest):
        t0 = time.perf_counter()
        run_dir, manifest = load_run(req.model)
        try:
            tf = TransferFunction.from_dict(req.tf)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"invalid transfer function: {exc}")
        grid = GridSpec(
            tuple(manifest.grid["dims"]),
            tuple(manifest.grid["spacing"]),
            tuple(manifest.grid["origin"]),
        )
        try:
            if req.camera:
                spec = {"width": req.width, "height": req.height, **req.camera}
                camera = Camera.from_dict(spec)
            else:
                camera = default_camera_for(
                    grid.dims, grid.spacing, grid.origin, req.width, req.height
                )
            if req.step is not None and req.step <= 0:
                raise ValueError(f"step must be positive, got {req.step}")
            if req.scale is not None and req.scale <= 0:
                raise ValueError(f"scale must be positive, got {req.scale}")
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"invalid camera/step: {exc}")

        m = req.m
        rate = req.rate if req.rate is not None else DEFAULT_MC_RATE
        key = (req.model, m or 0, rate, req.seed)

        def build():
            normalizer = Normalizer(*manifest.value_range)
            members = [load_params(p)[0] for p in manifest.checkpoint_paths(run_dir)]
            return build_stack(
                manifest, grid, normalizer, members, m=m, rate=rate, seed=req.seed
            )

        try:
            stack = cache.get_or_build(key, build)
        except CacheWarming:
            raise HTTPException(
                status_code=503,
                detail="realization cache is warming, retry shortly",
                headers={"Retry-After": "1"},
            )

        value_range = tuple(manifest.value_range)
        images = render_stack(stack, tf, camera, step=req.step, value_range=value_range)
        result = aggregate(images)
        scale = req.scale if req.scale is not None else result.normalization_scale
        payload = {
            "model": req.model,
            "method": manifest.method,
            "m": stack.m,
            "mean_png_b64": _png_b64(result.mean),
            "uncertainty_png_b64": _png_b64(to_grayscale(result.combined, scale)),
            "uncertainty_scale": scale,
            "scale_mode": "pinned" if req.scale is not None else "per-image",
        }
        for name, channel in zip("rgb", result.channel_std):
            payload[f"uncertainty_{name}_png_b64"] = _png_b64(to_grayscale(channel, scale))

        gt_path = run_dir / manifest.volume
        if req.include_error and gt_path.exists():
            gt_img = raycast(
                load_volume(gt_path), tf, camera, step=req.step, value_range=value_range
            )
            err = error_map(gt_img, result.mean)
            payload["error_png_b64"] = _png_b64(
                to_grayscale(err, max(float(err.max()), 1e-13))
            )
            psnr, rmse = image_psnr_rmse(gt_img, result.mean)
            payload["psnr_db"] = None if psnr == float("inf") else psnr
            payload["rmse"] = rmse

        render_count["n"] += 1
        payload["render_ms"] = (time.perf_counter() - t0) * 1000.0
        return payload

    if static_dir.exists():
        # mounted last so the API routes above keep precedence
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
