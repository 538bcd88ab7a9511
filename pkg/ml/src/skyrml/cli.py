"""CLI: train classifiers, probe bottlenecks, run the neuron-count study.

    skyrml train --arch cnn --data DIR --out DIR [--bottleneck N]
    skyrml probe --arch cnn3d --bottleneck 2 --data DIR --probe-data DIR --out DIR
    skyrml neurons --data DIR --uneven-data DIR --probe-data DIR --out DIR
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .archs import ArchitectureSpec, add_bottleneck
from .data import load_split
from .experiments import experiment_summary, neuron_count_experiment
from .plots import scatter_output_vs_parameter, scatter_plane_colored
from .probe import correlation_report, fit_critical_value, probe
from .train import evaluate, predict_diagram, train


def cmd_train(args) -> int:
    spec = ArchitectureSpec(args.arch)
    if args.bottleneck:
        spec = add_bottleneck(spec, args.bottleneck)
    data = load_split(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report, model = train(spec, data, sessions=args.sessions, seed=args.seed,
                          epochs=args.epochs, checkpoint_dir=out / "checkpoints")
    if (Path(args.data) / "test_videos.bin").exists() and args.arch != "cnn":
        test = load_split(args.data, "test_")
        pred = predict_diagram(model, test)
        report.test_accuracy = pred["accuracy"]
        np.savetxt(out / "predicted_grid.csv", pred["grid"], fmt="%d", delimiter=",")
    report.save(out / "train_report.json")
    print(json.dumps({"best_val_accuracy": report.best_val_accuracy,
                      "test_accuracy": report.test_accuracy}))
    return 0


def cmd_probe(args) -> int:
    spec = add_bottleneck(ArchitectureSpec(args.arch), args.bottleneck)
    data = load_split(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report, model = train(spec, data, sessions=args.sessions, seed=args.seed,
                          epochs=args.epochs, checkpoint_dir=out / "checkpoints")
    probe_data = load_split(args.probe_data, args.probe_prefix)
    table = probe(model, probe_data)
    table.to_csv(out / "probe_table.csv")
    corr = correlation_report(table)
    fits = {}
    for neuron in corr.neurons:
        which = "s" if neuron.kind != "temporal" else "v_bar"
        fit = fit_critical_value(table, neuron.index, which)
        fits[neuron.index] = {"kind": neuron.kind, "fit_against": which,
                              "k": fit.k, "b": fit.b, "rmse": fit.rmse,
                              "converged": fit.converged}
        scatter_output_vs_parameter(table, neuron.index, which,
                                    out / f"neuron{neuron.index + 1}_{which}.png",
                                    fit=fit)
        scatter_plane_colored(table, neuron.index,
                              out / f"neuron{neuron.index + 1}_plane.png")
    summary = {"train": report.to_dict(), "fits": fits,
               "redundant_pairs": corr.redundant_pairs}
    with open(out / "probe_report.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(fits))
    return 0


def cmd_neurons(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    probe_data = load_split(args.probe_data, args.probe_prefix)
    summary = {}
    for name, path in [("balanced", args.data), ("uneven", args.uneven_data)]:
        if path is None:
            continue
        exp = neuron_count_experiment(load_split(path), probe_data,
                                      ns=tuple(args.ns), distribution=name,
                                      sessions=args.sessions, seed=args.seed,
                                      epochs=args.epochs,
                                      checkpoint_dir=out / name)
        summary[name] = experiment_summary(exp)
    with open(out / "neuron_experiment.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps({k: {n: v["val_accuracy"] for n, v in s["per_n"].items()}
                      for k, s in summary.items()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skyrml")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--sessions", type=int, default=5)
        p.add_argument("--epochs", type=int, default=10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)

    p = sub.add_parser("train")
    p.add_argument("--arch", choices=["cnn", "cnn_lstm", "cnn3d"], required=True)
    p.add_argument("--bottleneck", type=int, default=0)
    p.add_argument("--data", required=True)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("probe")
    p.add_argument("--arch", choices=["cnn", "cnn3d"], required=True)
    p.add_argument("--bottleneck", type=int, required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--probe-data", required=True)
    p.add_argument("--probe-prefix", default="probe_")
    common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("neurons")
    p.add_argument("--data", required=True, help="balanced video dataset dir")
    p.add_argument("--uneven-data", default=None)
    p.add_argument("--probe-data", required=True)
    p.add_argument("--probe-prefix", default="probe_")
    p.add_argument("--ns", type=int, nargs="+", default=[1, 2, 3])
    common(p)
    p.set_defaults(func=cmd_neurons)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
