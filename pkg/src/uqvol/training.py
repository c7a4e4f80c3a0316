"""MSE training of the coordinate network with Adam and a step-decay
learning-rate schedule, plus ensemble orchestration.

One epoch is one full shuffled pass over all voxels; targets are the
volume values normalized to [-1, 1]. Runs are deterministic for a fixed
(volume, topology, config, seed) on a single thread.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .network import (
    MODE_OFF,
    MODE_TRAIN,
    DropoutState,
    FieldTopology,
    ParameterSet,
    backward,
    forward,
    init_params,
)
from .volume import Volume, lattice_coordinates, make_normalizer


class TrainingDiverged(RuntimeError):
    """Batch loss became non-finite."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 2048
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    decay_factor: float = 0.8
    decay_step: int = 15
    epochs: int = 300
    train_dropout: float = 0.001  # teardrop preset uses 0.05
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.decay_factor <= 1.0:
            raise ValueError("decay_factor must be in (0, 1]")
        if self.decay_step < 1:
            raise ValueError("decay_step must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.train_dropout < 1.0:
            raise ValueError("train_dropout must be in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "decay_factor": self.decay_factor,
            "decay_step": self.decay_step,
            "epochs": self.epochs,
            "train_dropout": self.train_dropout,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(frozen=True)
class EnsembleSpec:
    """Member count and the seed ladder base_seed + index."""

    n_members: int = 10
    base_seed: int = 0

    def __post_init__(self):
        if self.n_members < 1:
            raise ValueError("n_members must be >= 1")

    @property
    def member_seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.n_members)]


@dataclass
class TrainReport:
    epoch_losses: list[float]
    final_lr: float
    wall_seconds: float
    seed: int


def lr_at_epoch(config: TrainConfig, epoch: int) -> float:
    """Step-decayed rate: lr * decay_factor ** floor(epoch / decay_step)."""
    if not 0 <= epoch < config.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {config.epochs})")
    return config.lr * config.decay_factor ** (epoch // config.decay_step)


class _Adam:
    """Adam with bias correction; one shared step counter for all tensors."""

    def __init__(self, params: ParameterSet, config: TrainConfig):
        self.m = [np.zeros_like(t) for t in params.tensors]
        self.v = [np.zeros_like(t) for t in params.tensors]
        self.beta1 = params.dtype.type(config.beta1)
        self.beta2 = params.dtype.type(config.beta2)
        self.eps = params.dtype.type(config.adam_eps)
        self.t = 0

    def step(self, params: ParameterSet, grads: ParameterSet, lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - float(b1) ** self.t
        c2 = 1.0 - float(b2) ** self.t
        scale = params.dtype.type(lr / c1)
        c2 = params.dtype.type(c2)
        one_m_b1 = params.dtype.type(1.0 - float(b1))
        one_m_b2 = params.dtype.type(1.0 - float(b2))
        for p, g, m, v in zip(params.tensors, grads.tensors, self.m, self.v):
            m *= b1
            m += one_m_b1 * g
            v *= b2
            v += one_m_b2 * (g * g)
            p -= scale * m / (np.sqrt(v / c2) + self.eps)


def train_single(
    volume: Volume,
    topology: FieldTopology,
    config: TrainConfig,
    dtype=np.float32,
) -> tuple[ParameterSet, TrainReport]:
    """Train one network on all voxels of the volume.

    Dropout runs in train mode iff config.train_dropout > 0. Raises
    TrainingDiverged on a non-finite batch loss.
    """
    t_start = time.perf_counter()
    normalizer = make_normalizer(volume)
    coords = lattice_coordinates(volume.dims, dtype=dtype)
    targets = normalizer.apply(volume.flat()).astype(dtype)
    n = coords.shape[0]

    params = init_params(topology, config.seed, dtype=dtype)
    optimizer = _Adam(params, config)
    seq = np.random.SeedSequence(config.seed)
    shuffle_seed, dropout_seed = seq.spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    dropout = None
    if config.train_dropout > 0.0:
        dropout = DropoutState(
            rate=config.train_dropout, mode=MODE_TRAIN, seed=dropout_seed
        )

    epoch_losses = []
    final_lr = config.lr
    tape = None  # forward/backward buffers recycled across batches
    grads = None
    # the (2048, 50) x (50, 50) gemms are too small for BLAS threading;
    # thread sync costs more than it buys, so pin to one thread here
    with threadpool_limits(limits=1, user_api="blas"):
        for epoch in range(config.epochs):
            lr = lr_at_epoch(config, epoch)
            final_lr = lr
            perm = shuffle_rng.permutation(n)
            sq_sum = 0.0
            for start in range(0, n, config.batch_size):
                idx = perm[start : start + config.batch_size]
                out, tape = forward(
                    params, coords[idx], dropout, want_tape=True, tape=tape
                )
                resid = out - targets[idx]
                batch_sq = float(np.sum(resid.astype(np.float64) ** 2))
                if not np.isfinite(batch_sq):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch}, sample {start}"
                    )
                sq_sum += batch_sq
                dl_dout = (2.0 / len(idx)) * resid
                grads = backward(params, tape, dl_dout, grads=grads)
                optimizer.step(params, grads, lr)
            epoch_losses.append(sq_sum / n)

    report = TrainReport(
        epoch_losses=epoch_losses,
        final_lr=final_lr,
        wall_seconds=time.perf_counter() - t_start,
        seed=config.seed,
    )
    return params, report


def _train_member(args):
    volume, topology, config = args
    return train_single(volume, topology, config)


def train_ensemble(
    volume: Volume,
    topology: FieldTopology,
    config: TrainConfig,
    spec: EnsembleSpec,
    n_jobs: int = 1,
) -> tuple[list[ParameterSet], list[TrainReport]]:
    """Train spec.n_members independent networks. Dropout is forced off;
    members differ through their init and shuffle seeds. With n_jobs > 1
    members train in parallel worker processes (results are identical to
    the serial run).
    """
    member_topology = replace(topology, dropout_blocks=())
    configs = [
        replace(config, train_dropout=0.0, seed=seed) for seed in spec.member_seeds
    ]
    jobs = [(volume, member_topology, c) for c in configs]
    if n_jobs > 1 and spec.n_members > 1:
        with ProcessPoolExecutor(max_workers=min(n_jobs, spec.n_members)) as pool:
            results = list(pool.map(_train_member, jobs))
    else:
        results = []
        for i, job in enumerate(jobs):
            try:
                results.append(_train_member(job))
            except Exception as exc:
                raise RuntimeError(f"ensemble member {i} failed: {exc}") from exc
    params = [r[0] for r in results]
    reports = [r[1] for r in results]
    return params, reports
