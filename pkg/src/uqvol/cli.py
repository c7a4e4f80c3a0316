"""Command-line pipeline: generate data, train, reconstruct, render,
evaluate sweeps, replay manifests, and serve the HTTP API.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checkpoint import save_params
from .imaging import (
    aggregate,
    error_map,
    image_psnr_rmse,
    to_grayscale,
    write_png,
)
from .manifest import RunManifest
from .runs import DEFAULT_MC_RATE, DEFAULT_MC_SAMPLES, DEFAULT_MEMBERS, build_stack, run_assets
from .network import FieldTopology, dropout_blocks_for_layout
from .render import Camera, TransferFunction, default_camera_for, grayscale_ramp, raycast, render_stack
from .training import EnsembleSpec, TrainConfig, train_ensemble, train_single
from .uncertainty import psnr_rmse, reconstruct_ensemble, reconstruct_mc, summarize
from .volume import Volume, generate_teardrop, load_volume, save_volume


class CliError(Exception):
    """User-facing failure: bad arguments or missing artifacts."""


def cmd_gen_data(args) -> int:
    volume = generate_teardrop(args.teardrop)
    out = Path(args.out)
    save_volume(volume, out)
    print(f"wrote {out} ({volume.dims[0]}^3, range [{volume.value_min:.3f}, {volume.value_max:.3f}])")
    return 0


def _load_training_volume(args) -> tuple[Volume, str]:
    if args.teardrop:
        return generate_teardrop(args.teardrop), f"teardrop{args.teardrop}"
    if not args.volume:
        raise CliError("need either --volume or --teardrop")
    path = Path(args.volume)
    if not path.exists():
        raise CliError(f"volume not found: {path}")
    return load_volume(path), path.stem


def _topology_from_args(args) -> FieldTopology:
    blocks = dropout_blocks_for_layout(args.blocks, args.dropout_layout)
    return FieldTopology(
        in_dim=3,
        hidden_width=args.hidden,
        n_blocks=args.blocks,
        dropout_blocks=blocks,
    )


def _config_from_args(args) -> TrainConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    cfg = TrainConfig.from_dict(base) if base else TrainConfig()
    overrides = {}
    for name, key in [
        ("epochs", "epochs"),
        ("batch_size", "batch_size"),
        ("lr", "lr"),
        ("seed", "seed"),
        ("train_dropout", "train_dropout"),
    ]:
        val = getattr(args, name, None)
        if val is not None:
            overrides[key] = val
    return replace(cfg, **overrides) if overrides else cfg


def cmd_train(args) -> int:
    volume, dataset = _load_training_volume(args)
    run_dir = Path(args.out)
    run_dir.mkdir(parents=True, exist_ok=True)
    topology = _topology_from_args(args)
    config = _config_from_args(args)
    tag = args.tag or dataset

    save_volume(volume, run_dir / "volume.raw")
    metadata_base = {
        "value_range": [volume.value_min, volume.value_max],
        "config": config.to_dict(),
    }

    checkpoints: list[str] = []
    ensemble_spec = None
    if args.method == "ensemble":
        spec = EnsembleSpec(n_members=args.members, base_seed=config.seed)
        members, reports = train_ensemble(volume, topology, config, spec, n_jobs=args.jobs)
        for i, (member, report) in enumerate(zip(members, reports)):
            name = f"model_{tag}_m{i}.ckpt"
            save_params(member, run_dir / name, metadata={**metadata_base, "seed": report.seed, "member_index": i})
            checkpoints.append(name)
        ensemble_spec = {"n_members": spec.n_members, "base_seed": spec.base_seed}
        final_loss = float(np.mean([r.epoch_losses[-1] for r in reports]))
    else:
        if args.method == "none":
            config = replace(config, train_dropout=0.0)
            topology = replace(topology, dropout_blocks=())
        params, report = train_single(volume, topology, config)
        name = f"model_{tag}_m0.ckpt"
        save_params(params, run_dir / name, metadata={**metadata_base, "seed": report.seed})
        checkpoints.append(name)
        final_loss = report.epoch_losses[-1]

    manifest = RunManifest(
        dataset=dataset,
        method=args.method,
        tag=tag,
        topology=topology.to_dict(),
        config=config.to_dict(),
        grid={"dims": list(volume.dims), "spacing": list(volume.spacing), "origin": list(volume.origin)},
        value_range=[volume.value_min, volume.value_max],
        volume="volume.raw",
        checkpoints=checkpoints,
        ensemble=ensemble_spec,
        seeds={"train": config.seed},
    )
    manifest.save(run_dir)
    print(f"trained {args.method} model(s) into {run_dir} (final loss {final_loss:.3e})")
    return 0


def _reconstruct_into(run_dir: Path, out_dir: Path, m, rate, seed) -> dict:
    manifest, grid, normalizer, members = run_assets(run_dir)
    stack = build_stack(manifest, grid, normalizer, members, m=m, rate=rate, seed=seed)
    summary = summarize(stack)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_volume(summary.mean_volume, out_dir / "mean.raw")
    save_volume(summary.std_volume, out_dir / "std.raw")
    metrics = {"m": stack.m, "method": manifest.method, "seed": seed}
    gt_path = run_dir / manifest.volume
    if gt_path.exists():
        gt = load_volume(gt_path)
        psnr, rmse = psnr_rmse(gt, summary.mean_volume)
        metrics.update({"psnr_db": psnr, "rmse": rmse})
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    return metrics


def cmd_reconstruct(args) -> int:
    run_dir = Path(args.run)
    out_dir = Path(args.out)
    metrics = _reconstruct_into(run_dir, out_dir, args.m, args.rate, args.seed)
    manifest = RunManifest.load(run_dir)
    manifest.add_stage(
        "reconstruct",
        {"m": args.m, "rate": args.rate, "seed": args.seed, "out": str(out_dir)},
        ["mean.raw", "std.raw", "metrics.json"],
    )
    manifest.save(run_dir)
    line = f"reconstructed m={metrics['m']}"
    if "psnr_db" in metrics:
        line += f", PSNR {metrics['psnr_db']:.3f} dB, RMSE {metrics['rmse']:.5f}"
    print(line)
    return 0


def cmd_replay(args) -> int:
    run_dir = Path(args.run)
    manifest = RunManifest.load(run_dir)
    if not manifest.stages:
        raise CliError(f"{run_dir}: no recorded stages to replay")
    out_root = Path(args.out)
    for i, stage in enumerate(manifest.stages):
        if stage["op"] != "reconstruct":
            raise CliError(f"unknown stage op {stage['op']!r}")
        a = stage["args"]
        _reconstruct_into(run_dir, out_root / f"stage{i}", a["m"], a["rate"], a["seed"])
    print(f"replayed {len(manifest.stages)} stage(s) into {out_root}")
    return 0


def cmd_render(args) -> int:
    run_dir = Path(args.run)
    manifest, grid, normalizer, members = run_assets(run_dir)
    tf = TransferFunction.from_json(args.tf) if args.tf else grayscale_ramp(max_alpha=0.6)
    if args.camera:
        camera = Camera.from_json(args.camera)
    else:
        camera = default_camera_for(grid.dims, grid.spacing, grid.origin, args.width, args.height)

    stack = build_stack(manifest, grid, normalizer, members, m=args.m, rate=args.rate, seed=args.seed)
    value_range = tuple(manifest.value_range)
    images = render_stack(stack, tf, camera, step=args.step, value_range=value_range)
    result = aggregate(images)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_png(result.mean, out_dir / "mean.png")
    scale = result.normalization_scale
    write_png(to_grayscale(result.combined, scale), out_dir / "uncertainty.png")
    for name, channel in zip("rgb", result.channel_std):
        write_png(to_grayscale(channel, scale), out_dir / f"uncertainty_{name}.png")

    metrics = {"m": stack.m, "scale": scale, "scale_mode": result.scale_mode}
    gt_path = run_dir / manifest.volume
    if gt_path.exists():
        gt_img = raycast(load_volume(gt_path), tf, camera, step=args.step, value_range=value_range)
        err = error_map(gt_img, result.mean)
        write_png(to_grayscale(err, max(float(err.max()), 1e-13)), out_dir / "error.png")
        psnr, rmse = image_psnr_rmse(gt_img, result.mean)
        metrics.update({"psnr_db": psnr, "rmse": rmse})
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    print(f"rendered {stack.m} realization(s) into {out_dir}")
    return 0


def _eval_rows_mc_samples(manifest, grid, normalizer, members, gt, args):
    stack = reconstruct_mc(
        members[0], grid, normalizer, m=max(args.samples), rate=args.rate or DEFAULT_MC_RATE, seed=args.seed
    )
    rows = []
    for m in args.samples:
        psnr, rmse = psnr_rmse(gt, summarize(stack.subset(m)).mean_volume)
        rows.append((manifest.dataset, manifest.method, "mc-samples", m, psnr, rmse))
    return rows


def _eval_rows_members(manifest, grid, normalizer, members, gt, args):
    counts = [c for c in args.members_counts if c <= len(members)]
    stack = reconstruct_ensemble(members, grid, normalizer)
    rows = []
    for c in counts:
        psnr, rmse = psnr_rmse(gt, summarize(stack.subset(c)).mean_volume)
        rows.append((manifest.dataset, manifest.method, "members", c, psnr, rmse))
    return rows


def _eval_rows_dropout_prob(manifest, grid, normalizer, members, gt, args):
    rows = []
    for rate in args.rates:
        stack = reconstruct_mc(
            members[0], grid, normalizer, m=args.m or DEFAULT_MC_SAMPLES, rate=rate, seed=args.seed
        )
        psnr, rmse = psnr_rmse(gt, summarize(stack).mean_volume)
        rows.append((manifest.dataset, manifest.method, "dropout-prob", rate, psnr, rmse))
    return rows


def _eval_rows_dropout_layers(manifest, grid, normalizer, members, gt, args, run_dir):
    volume = load_volume(run_dir / manifest.volume)
    config = TrainConfig.from_dict(manifest.config)
    rows = []
    for layout in ("last-two", "last-half", "all"):
        topo = FieldTopology.from_dict(manifest.topology)
        topo = replace(topo, dropout_blocks=dropout_blocks_for_layout(topo.n_blocks, layout))
        params, _ = train_single(volume, topo, config)
        stack = reconstruct_mc(
            params, grid, normalizer, m=args.m or DEFAULT_MC_SAMPLES,
            rate=args.rate or DEFAULT_MC_RATE, seed=args.seed,
        )
        psnr, rmse = psnr_rmse(gt, summarize(stack).mean_volume)
        rows.append((manifest.dataset, manifest.method, "dropout-layers", layout, psnr, rmse))
    return rows


def _eval_rows_volume_metrics(manifest, grid, normalizer, members, gt, args):
    stack = build_stack(manifest, grid, normalizer, members, m=args.m, rate=args.rate, seed=args.seed)
    psnr, rmse = psnr_rmse(gt, summarize(stack).mean_volume)
    return [(manifest.dataset, manifest.method, "volume-metrics", stack.m, psnr, rmse)]


def _eval_rows_image_metrics(manifest, grid, normalizer, members, gt, args, run_dir):
    tf = TransferFunction.from_json(args.tf) if args.tf else grayscale_ramp(max_alpha=0.6)
    camera = (
        Camera.from_json(args.camera)
        if args.camera
        else default_camera_for(grid.dims, grid.spacing, grid.origin, args.width, args.height)
    )
    stack = build_stack(manifest, grid, normalizer, members, m=args.m, rate=args.rate, seed=args.seed)
    value_range = tuple(manifest.value_range)
    images = render_stack(stack, tf, camera, value_range=value_range)
    mean_img = aggregate(images).mean
    gt_img = raycast(gt, tf, camera, value_range=value_range)
    psnr, rmse = image_psnr_rmse(gt_img, mean_img)
    return [(manifest.dataset, manifest.method, "image-metrics", stack.m, psnr, rmse)]


def cmd_eval(args) -> int:
    run_dir = Path(args.run)
    manifest, grid, normalizer, members = run_assets(run_dir)
    gt_path = run_dir / manifest.volume
    if not gt_path.exists():
        raise CliError(f"evaluation needs the training volume at {gt_path}")
    gt = load_volume(gt_path)

    if args.sweep == "mc-samples":
        rows = _eval_rows_mc_samples(manifest, grid, normalizer, members, gt, args)
    elif args.sweep == "members":
        rows = _eval_rows_members(manifest, grid, normalizer, members, gt, args)
    elif args.sweep == "dropout-prob":
        rows = _eval_rows_dropout_prob(manifest, grid, normalizer, members, gt, args)
    elif args.sweep == "dropout-layers":
        rows = _eval_rows_dropout_layers(manifest, grid, normalizer, members, gt, args, run_dir)
    elif args.sweep == "volume-metrics":
        rows = _eval_rows_volume_metrics(manifest, grid, normalizer, members, gt, args)
    elif args.sweep == "image-metrics":
        rows = _eval_rows_image_metrics(manifest, grid, normalizer, members, gt, args, run_dir)
    else:
        raise CliError(f"unknown sweep {args.sweep!r}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["dataset", "method", "sweep", "value", "psnr_db", "rmse"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ModelRegistry, create_app

    registry = ModelRegistry(args.registry)
    if not registry.tags():
        raise CliError(f"no runs found under {args.registry}")
    app = create_app(registry)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uqvol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic teardrop volume")
    p.add_argument("--teardrop", type=int, required=True, metavar="N", help="grid size per axis")
    p.add_argument("--out", required=True, help="output .raw path (sidecar written next to it)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a model (or ensemble) on a volume")
    p.add_argument("--volume", help="input .raw volume with JSON sidecar")
    p.add_argument("--teardrop", type=int, help="generate an N^3 teardrop instead of loading")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--method", choices=["none", "mcdropout", "ensemble"], default="mcdropout")
    p.add_argument("--tag", help="model tag (default: dataset name)")
    p.add_argument("--hidden", type=int, default=50)
    p.add_argument("--blocks", type=int, default=10)
    p.add_argument("--dropout-layout", choices=["last-two", "last-half", "all", "none"], default="last-two")
    p.add_argument("--members", type=int, default=DEFAULT_MEMBERS)
    p.add_argument("--jobs", type=int, default=1, help="parallel ensemble member trainings")
    p.add_argument("--config", help="JSON file with TrainConfig fields")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-dropout", dest="train_dropout", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", help="reconstruct mean/std volumes from a run")
    p.add_argument("--run", required=True, help="run directory from `train`")
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=int, help="MC samples / member count")
    p.add_argument("--rate", type=float, help="inference dropout rate")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("render", help="render a run with uncertainty and error maps")
    p.add_argument("--run", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tf", help="transfer-function JSON (default: gray ramp)")
    p.add_argument("--camera", help="camera JSON (default: framing the volume)")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--step", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--rate", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="sweep studies, written as CSV")
    p.add_argument("--run", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--sweep",
        required=True,
        choices=["mc-samples", "members", "dropout-prob", "dropout-layers", "volume-metrics", "image-metrics"],
    )
    p.add_argument("--samples", type=int, nargs="+", default=[10, 25, 50, 75, 100])
    p.add_argument("--members-counts", dest="members_counts", type=int, nargs="+", default=[2, 5, 7, 10])
    p.add_argument("--rates", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument("--m", type=int)
    p.add_argument("--rate", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tf", help="transfer function for image-metrics")
    p.add_argument("--camera")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="re-run the recorded stages of a manifest")
    p.add_argument("--run", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="HTTP rendering service")
    p.add_argument("--registry", required=True, help="directory of run directories")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
