"""Command-line entry point: simulate, analyze, sweep, dataset, render.

Exit codes: 0 success, 2 config/usage errors, 1 runtime failures. Data
files never contain timestamps; identical invocations write identical
bytes. Log lines go to stderr as key=value records.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESETS, RunConfig, load_config
from .datasets import build_image_dataset, build_video_dataset, regenerate
from .dynamics import SeededRun, run_trajectory
from .errors import ConfigError, SkyrsimError
from .order import mean_velocity_from_wrapped, classify_phase, compute_rdf, compute_sdrdf, write_report
from .params import LabelThresholds, ModelParams, RunProtocol
from .sweep import PhaseDiagram, SweepSpec, render_diagram, run_sweep, save_diagram
from .trajio import read_trajectory, write_trajectory


def _log(**kv):
    print(" ".join(f"{k}={v}" for k, v in kv.items()), file=sys.stderr)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="scale preset")
    p.add_argument("--seed", type=int, help="global seed")
    p.add_argument("--workers", type=int, help="worker process count")
    p.add_argument("--out", help="output directory or file")


def _config_from_args(args, extra_overrides=None) -> RunConfig:
    overrides = {"seed": getattr(args, "seed", None),
                 "workers": getattr(args, "workers", None),
                 "out": getattr(args, "out", None)}
    if extra_overrides:
        overrides.update(extra_overrides)
    return load_config(getattr(args, "config", None), getattr(args, "preset", None), overrides)


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args, {"f_p": args.fp, "f_d": args.fd})
    run = SeededRun(seed=cfg.seed, params=cfg.params)
    t0 = time.time()
    traj = run_trajectory(run, n_iter=cfg.protocol.n_iter,
                          record_stride=cfg.protocol.record_stride,
                          relax_iterations=cfg.protocol.relax_iterations,
                          relax_dt=cfg.protocol.relax_dt,
                          relax_force_tol=cfg.protocol.relax_force_tol)
    out = Path(cfg.out)
    if out.suffix != ".bin":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "trajectory.bin"
    write_trajectory(traj, out, extra_meta={"config": cfg.to_dict(),
                                            "code_version": __version__})
    _log(event="simulate", out=out, snapshots=traj.n_snapshots,
         seconds=f"{time.time() - t0:.1f}")
    return 0


def cmd_analyze(args) -> int:
    cfg = _config_from_args(args)
    positions, meta = read_trajectory(args.trajectory)
    thresholds = cfg.thresholds
    stride = meta.get("record_stride", cfg.protocol.record_stride)
    params_meta = meta.get("params", cfg.params.to_dict())
    box_l = params_meta["box_l"]
    warmup = cfg.protocol.warmup_iterations
    iterations = np.arange(1, positions.shape[0] + 1) * stride
    keep = iterations > warmup
    if keep.sum() < 2:
        raise SkyrsimError("trajectory too short after warm-up exclusion")
    tail = positions[keep].astype(float)
    rdf = compute_rdf(tail, box_l, bin_width=thresholds.rdf_bin_width,
                      r_max=thresholds.rdf_r_max)
    s = compute_sdrdf(rdf, thresholds)
    v_bar = mean_velocity_from_wrapped(tail, box_l)
    op = classify_phase(s, v_bar, thresholds)
    print(f"s={op.s!r} v_bar={op.v_bar!r} label={op.label.value}")
    if args.out:
        row = {"run_id": Path(args.trajectory).stem, "seed": meta.get("seed", ""),
               "f_p": params_meta.get("f_p", ""), "f_d": params_meta.get("f_d", ""),
               "s": op.s, "v_bar": op.v_bar, "label": op.label.value}
        write_report([row], thresholds, args.out)
        _log(event="analyze", out=args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    spec = cfg.sweep_spec()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = out_dir / "sweep_checkpoint.jsonl"
    t0 = time.time()

    def progress(done, total):
        if done % 20 == 0 or done == total:
            _log(event="sweep_progress", done=done, total=total,
                 seconds=f"{time.time() - t0:.0f}")

    diagram = run_sweep(spec, workers=cfg.workers, checkpoint_path=checkpoint,
                        progress=progress)
    paths = save_diagram(diagram, out_dir)
    _log(event="sweep", cells=f"{spec.f_p_count}x{spec.f_d_count}",
         seeds=spec.seeds_per_cell, seconds=f"{time.time() - t0:.1f}",
         **{k: str(v) for k, v in paths.items()})
    return 0


def cmd_dataset(args) -> int:
    cfg = _config_from_args(args)
    out_dir = Path(cfg.out)
    t0 = time.time()
    if args.kind == "images":
        manifest = build_image_dataset(cfg.image_spec(), out_dir, workers=cfg.workers)
    elif args.kind == "videos":
        manifest = build_video_dataset(cfg.video_spec(), out_dir, workers=cfg.workers)
    else:  # regen
        if not args.manifest:
            raise ConfigError("dataset regen requires --manifest")
        manifest = regenerate(args.manifest, out_dir, workers=cfg.workers)
    _log(event="dataset", kind=args.kind, out=out_dir,
         runs=manifest.get("runs_executed"), seconds=f"{time.time() - t0:.1f}")
    return 0


def cmd_render(args) -> int:
    with open(args.diagram) as fh:
        agg = json.load(fh)
    spec_d = agg["spec"]
    spec = SweepSpec(
        f_p_min=spec_d["f_p_min"], f_p_max=spec_d["f_p_max"], f_p_count=spec_d["f_p_count"],
        f_d_min=spec_d["f_d_min"], f_d_max=spec_d["f_d_max"], f_d_count=spec_d["f_d_count"],
        seeds_per_cell=spec_d["seeds_per_cell"], base_seed=spec_d["base_seed"],
        params=ModelParams(**spec_d["params"]),
        thresholds=LabelThresholds(**spec_d["thresholds"]),
        protocol=RunProtocol(**spec_d["protocol"]),
        budget=spec_d.get("budget", 10000),
    )
    diagram = PhaseDiagram(
        spec=spec,
        s_mean=np.array(agg["s_mean"]),
        v_mean=np.array(agg["v_mean"]),
        labels=np.array(agg["labels"], dtype=object),
        raw=[],
    )
    out = args.out or "diagram.png"
    render_diagram(diagram, out)
    _log(event="render", out=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skyrsim",
                                     description="Skyrmion dynamics phases and datasets")
    parser.add_argument("--version", action="version", version=f"skyrsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory and dump it")
    _add_common(p)
    p.add_argument("--fp", type=float, default=None, help="pinning strength F_p")
    p.add_argument("--fd", type=float, default=None, help="drive F_D")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="order parameters and label of a dump")
    _add_common(p)
    p.add_argument("trajectory", help="trajectory .bin file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="phase diagram over the (F_p, F_D) grid")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dataset", help="build labeled datasets")
    _add_common(p)
    p.add_argument("kind", choices=["images", "videos", "regen"])
    p.add_argument("--manifest", help="manifest.json to regenerate from")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("render", help="re-render a saved diagram JSON")
    p.add_argument("diagram", help="sweep_diagram.json")
    p.add_argument("--out", help="output image path")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SkyrsimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
