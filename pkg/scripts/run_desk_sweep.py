#!/usr/bin/env python3
"""Run the desk-scale sweep preset and print the acceptance summary.

Equivalent to `skyrsim sweep --preset desk --workers N --out OUT` plus a
topology/boundary report.
"""

import argparse
import sys
import time

import numpy as np

from skyrsim.config import load_config
from skyrsim.sweep import extract_boundary, run_sweep, save_diagram


def boundary_fd0_crossing(diagram):
    """f_p where the crystal/amorphous contour meets the f_d -> 0 edge."""
    hits = []
    for poly in extract_boundary(diagram, "s", diagram.spec.thresholds.s0):
        on_edge = poly[np.isclose(poly[:, 1], diagram.f_d_values[0])]
        hits.extend(on_edge[:, 0].tolist())
    return hits


def region_report(diagram):
    labels = diagram.labels
    out = {}
    for lab in ("PC", "MC", "PG", "ML"):
        out[lab] = int((labels == lab).sum())
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--out", default="out/desk_sweep")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = load_config(None, "desk", {"workers": args.workers, "out": args.out,
                                     "seed": args.seed})
    spec = cfg.sweep_spec()
    t0 = time.time()

    def progress(done, total):
        if done % 20 == 0 or done == total:
            print(f"progress {done}/{total} ({time.time()-t0:.0f}s)", flush=True)

    diagram = run_sweep(spec, workers=cfg.workers,
                        checkpoint_path=f"{args.out}/sweep_checkpoint.jsonl",
                        progress=progress)
    paths = save_diagram(diagram, args.out)
    print("files:", paths)
    print("cells per label:", region_report(diagram))
    print("label grid (rows = f_p low->high, cols = f_d low->high):")
    for i, fp in enumerate(diagram.f_p_values):
        row = " ".join(f"{diagram.labels[i, j]:>2}" for j in range(len(diagram.f_d_values)))
        print(f"  f_p={fp:6.4f}  {row}")
    print("s_mean at f_d=0 column:",
          [f"{v:.3f}" for v in diagram.s_mean[:, 0]])
    print("v_mean first rows:",
          [f"{v:.2e}" for v in diagram.v_mean[0]])
    crossings = boundary_fd0_crossing(diagram)
    print("crystal/amorphous boundary meets f_d->0 edge at f_p =", crossings)
    print(f"total {time.time()-t0:.0f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
