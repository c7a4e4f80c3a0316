"""Run manifests: a JSON record of one training run and its downstream
stages, sufficient to replay volume-space artifacts bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

MANIFEST_NAME = "run_manifest.json"


@dataclass
class RunManifest:
    dataset: str
    method: str  # none | mcdropout | ensemble
    tag: str
    topology: dict
    config: dict
    grid: dict  # dims / spacing / origin
    value_range: list
    volume: str  # path to the training volume, relative to the run dir
    checkpoints: list = field(default_factory=list)
    ensemble: dict | None = None
    seeds: dict = field(default_factory=dict)
    stages: list = field(default_factory=list)  # replayable downstream ops
    format_version: int = 1

    def save(self, run_dir) -> Path:
        path = Path(run_dir) / MANIFEST_NAME
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, run_dir) -> "RunManifest":
        run_dir = Path(run_dir)
        path = run_dir / MANIFEST_NAME if run_dir.is_dir() else run_dir
        data = json.loads(path.read_text())
        if data.get("format_version") != 1:
            raise ValueError(f"{path}: unsupported manifest version")
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})

    def checkpoint_paths(self, run_dir) -> list[Path]:
        return [Path(run_dir) / name for name in self.checkpoints]

    def add_stage(self, op: str, args: dict, outputs: list[str]) -> None:
        self.stages.append({"op": op, "args": args, "outputs": outputs})
