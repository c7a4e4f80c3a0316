"""Checkpoint files: a JSON manifest followed by a float32 parameter blob.

Layout: 4-byte magic b"UQVC", uint32 little-endian manifest length, UTF-8
JSON manifest, then the parameters as little-endian float32 in the
ParameterSet tensor order. format_version is 1.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .network import FieldTopology, ParameterSet

MAGIC = b"UQVC"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Manifest and parameter blob disagree, or the file is malformed."""


def save_params(params: ParameterSet, path, metadata: dict | None = None) -> None:
    """Write the checkpoint. Extra training metadata (seed, normalizer
    range, loss history, ...) is stored verbatim in the manifest.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "topology": params.topology.to_dict(),
        "param_count": params.n_params,
    }
    if metadata:
        manifest.update(metadata)
    blob = params.flat().astype("<f4").tobytes()
    manifest_bytes = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(manifest_bytes)))
        f.write(manifest_bytes)
        f.write(blob)


def load_params(path) -> tuple[ParameterSet, dict]:
    """Read a checkpoint back as (ParameterSet, manifest dict)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 8 or data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    (manifest_len,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + manifest_len:
        raise CheckpointError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(data[8 : 8 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt manifest: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported format_version {manifest.get('format_version')}"
        )
    topology = FieldTopology.from_dict(manifest["topology"])
    blob = data[8 + manifest_len :]
    expected = topology.n_params * 4
    if len(blob) != expected or manifest.get("param_count") != topology.n_params:
        raise CheckpointError(
            f"{path}: blob holds {len(blob)} bytes, manifest implies {expected}"
        )
    flat = np.frombuffer(blob, dtype="<f4").astype(np.float32)

    d, h = topology.in_dim, topology.hidden_width
    shapes = [(d, h), (h,)]
    for _ in range(topology.n_blocks):
        shapes += [(h, h), (h,), (h, h), (h,)]
    shapes += [(h, 1), (1,)]
    tensors, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        tensors.append(flat[offset : offset + size].reshape(shape).copy())
        offset += size
    return ParameterSet(topology, tensors), manifest
