"""Sweep the (F_p, F_D) plane, average order parameters over seeds, extract
phase boundaries.

Cells x seeds form an embarrassingly parallel work set; every run's seed is
derived from (base_seed, i_fp, i_fd, k) so results are independent of
execution order and worker count. A JSON-lines checkpoint keyed by
(i_fp, i_fd, k) makes interrupted sweeps resumable.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import SeededRun, run_trajectory
from .errors import ParameterError, SweepError
from .order import classify_phase, measure_trajectory
from .params import LabelThresholds, ModelParams, RunProtocol


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition plus everything needed to reproduce each cell."""

    f_p_min: float
    f_p_max: float
    f_p_count: int
    f_d_min: float
    f_d_max: float
    f_d_count: int
    seeds_per_cell: int
    base_seed: int = 0
    params: ModelParams = field(default_factory=ModelParams.create)
    thresholds: LabelThresholds = field(default_factory=LabelThresholds)
    protocol: RunProtocol = field(default_factory=RunProtocol)
    budget: int = 10000

    def __post_init__(self):
        if self.f_p_count < 2 or self.f_d_count < 2:
            raise ParameterError("sweep needs at least 2 grid points per axis")
        if self.seeds_per_cell < 1:
            raise ParameterError("seeds_per_cell must be >= 1")
        if self.f_p_count * self.f_d_count * self.seeds_per_cell > self.budget:
            raise ParameterError(
                f"sweep of {self.f_p_count * self.f_d_count * self.seeds_per_cell} runs "
                f"exceeds budget {self.budget}"
            )

    @property
    def f_p_values(self) -> np.ndarray:
        return np.linspace(self.f_p_min, self.f_p_max, self.f_p_count)

    @property
    def f_d_values(self) -> np.ndarray:
        return np.linspace(self.f_d_min, self.f_d_max, self.f_d_count)

    def run_seed(self, i_fp: int, i_fd: int, k: int) -> int:
        ss = np.random.SeedSequence(self.base_seed, spawn_key=(i_fp, i_fd, k))
        return int(ss.generate_state(1, np.uint64)[0])

    def to_dict(self) -> dict:
        return {
            "f_p_min": self.f_p_min, "f_p_max": self.f_p_max, "f_p_count": self.f_p_count,
            "f_d_min": self.f_d_min, "f_d_max": self.f_d_max, "f_d_count": self.f_d_count,
            "seeds_per_cell": self.seeds_per_cell, "base_seed": self.base_seed,
            "params": self.params.to_dict(), "thresholds": self.thresholds.to_dict(),
            "protocol": self.protocol.to_dict(), "budget": self.budget,
        }


@dataclass
class PhaseDiagram:
    """Per-cell averaged order parameters, majority labels, raw samples."""

    spec: SweepSpec
    s_mean: np.ndarray  # (f_p_count, f_d_count)
    v_mean: np.ndarray
    labels: np.ndarray  # (f_p_count, f_d_count) of str
    raw: list  # per-run dict rows sorted by (i_fp, i_fd, k)

    @property
    def f_p_values(self) -> np.ndarray:
        return self.spec.f_p_values

    @property
    def f_d_values(self) -> np.ndarray:
        return self.spec.f_d_values


def _run_cell(task: tuple) -> dict:
    i_fp, i_fd, k, seed, f_p, f_d, params_dict, thresholds_dict, protocol_dict = task
    params = ModelParams(**{**params_dict, "f_p": f_p, "f_d": f_d})
    thresholds = LabelThresholds(**thresholds_dict)
    protocol = RunProtocol(**protocol_dict)
    try:
        traj = run_trajectory(
            SeededRun(seed=seed, params=params),
            n_iter=protocol.n_iter,
            record_stride=protocol.record_stride,
            relax_iterations=protocol.relax_iterations,
            relax_dt=protocol.relax_dt,
            relax_force_tol=protocol.relax_force_tol,
        )
        op = measure_trajectory(traj, thresholds, warmup_iterations=protocol.warmup_iterations)
        return {"i_fp": i_fp, "i_fd": i_fd, "k": k, "seed": seed,
                "f_p": f_p, "f_d": f_d, "s": op.s, "v_bar": op.v_bar,
                "label": op.label.value}
    except Exception as exc:  # noqa: BLE001 - reported per-cell by run_sweep
        return {"i_fp": i_fp, "i_fd": i_fd, "k": k, "seed": seed,
                "f_p": f_p, "f_d": f_d, "error": f"{type(exc).__name__}: {exc}"}


def run_sweep(spec: SweepSpec, workers: int = 1, checkpoint_path=None,
              progress=None) -> PhaseDiagram:
    """Execute all (cell, seed) runs, skipping any already checkpointed.

    Cell labels classify the seed-averaged order parameters (each grid
    point's value is the average over its seeds, matching the construction
    of the published diagram); threshold ties resolve to the
    pinned/amorphous side. Raises SweepError listing the failing
    (cell, seed) runs if any run fails; cells whose runs all failed are
    called out explicitly.
    """
    fps = spec.f_p_values
    fds = spec.f_d_values
    done: dict[tuple, dict] = {}
    if checkpoint_path is not None:
        checkpoint_path = Path(checkpoint_path)
        checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
        if checkpoint_path.exists():
            with open(checkpoint_path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    row = json.loads(line)
                    done[(row["i_fp"], row["i_fd"], row["k"])] = row

    tasks = []
    for i in range(spec.f_p_count):
        for j in range(spec.f_d_count):
            for k in range(spec.seeds_per_cell):
                if (i, j, k) in done:
                    continue
                tasks.append((i, j, k, spec.run_seed(i, j, k), float(fps[i]), float(fds[j]),
                              spec.params.to_dict(), spec.thresholds.to_dict(),
                              spec.protocol.to_dict()))

    ckpt_fh = open(checkpoint_path, "a") if checkpoint_path is not None else None
    try:
        if workers <= 1:
            for t, task in enumerate(tasks):
                row = _run_cell(task)
                done[(row["i_fp"], row["i_fd"], row["k"])] = row
                if ckpt_fh:
                    ckpt_fh.write(json.dumps(row, sort_keys=True) + "\n")
                    ckpt_fh.flush()
                if progress:
                    progress(t + 1, len(tasks))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(_run_cell, task): task for task in tasks}
                for t, fut in enumerate(as_completed(futures)):
                    row = fut.result()
                    done[(row["i_fp"], row["i_fd"], row["k"])] = row
                    if ckpt_fh:
                        ckpt_fh.write(json.dumps(row, sort_keys=True) + "\n")
                        ckpt_fh.flush()
                    if progress:
                        progress(t + 1, len(tasks))
    finally:
        if ckpt_fh:
            ckpt_fh.close()

    failures = [key for key, row in done.items() if "error" in row]
    if failures:
        per_cell: dict[tuple, int] = {}
        for i, j, k in failures:
            per_cell[(i, j)] = per_cell.get((i, j), 0) + 1
        dead = [cell for cell, nfail in per_cell.items() if nfail == spec.seeds_per_cell]
        detail = "; ".join(
            f"cell {key[:2]} seed#{key[2]}: {done[key]['error']}" for key in sorted(failures)
        )
        raise SweepError(
            f"{len(failures)} runs failed ({len(dead)} cells with all seeds failed: "
            f"{sorted(dead)}); {detail}"
        )

    s_mean = np.zeros((spec.f_p_count, spec.f_d_count))
    v_mean = np.zeros_like(s_mean)
    labels = np.empty(s_mean.shape, dtype=object)
    raw = [done[key] for key in sorted(done.keys())]
    for i in range(spec.f_p_count):
        for j in range(spec.f_d_count):
            rows = [done[(i, j, k)] for k in range(spec.seeds_per_cell)]
            s_mean[i, j] = float(np.mean([r["s"] for r in rows]))
            v_mean[i, j] = float(np.mean([r["v_bar"] for r in rows]))
            labels[i, j] = classify_phase(s_mean[i, j], v_mean[i, j],
                                          spec.thresholds).label.value
    return PhaseDiagram(spec=spec, s_mean=s_mean, v_mean=v_mean, labels=labels, raw=raw)


def extract_boundary(diagram: PhaseDiagram, field_name: str, level: float) -> list[np.ndarray]:
    """Marching-squares contours of a cell-mean field at the given level.

    Returns polylines as arrays of (f_p, f_d) points, linearly interpolated
    between cell centers. A field constant across the grid yields no
    contours.
    """
    from skimage import measure

    if field_name == "s":
        arr = diagram.s_mean
    elif field_name == "v_bar":
        arr = diagram.v_mean
    else:
        raise ParameterError(f"unknown field {field_name!r} (use 's' or 'v_bar')")
    fps = diagram.f_p_values
    fds = diagram.f_d_values
    out = []
    for contour in measure.find_contours(arr, level):
        f_p = np.interp(contour[:, 0], np.arange(len(fps)), fps)
        f_d = np.interp(contour[:, 1], np.arange(len(fds)), fds)
        out.append(np.column_stack([f_p, f_d]))
    return out


LABEL_COLORS = {"ML": "#9467bd", "PG": "#2ca02c", "PC": "#d62728", "MC": "#1f77b4"}


def render_diagram(diagram: PhaseDiagram, path) -> None:
    """Labelled scatter of the grid with both phase-boundary contours."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if diagram.s_mean.size == 0:
        raise ParameterError("cannot render an empty diagram")
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=150)
    fps = diagram.f_p_values
    fds = diagram.f_d_values
    for lab, color in LABEL_COLORS.items():
        pts = [(fps[i], fds[j]) for i in range(len(fps)) for j in range(len(fds))
               if diagram.labels[i, j] == lab]
        if pts:
            arr = np.array(pts)
            ax.scatter(arr[:, 0], arr[:, 1], c=color, s=26, marker="s", label=lab,
                       edgecolors="none")
    for poly in extract_boundary(diagram, "s", diagram.spec.thresholds.s0):
        ax.plot(poly[:, 0], poly[:, 1], "-", color="blue", lw=2)
    for poly in extract_boundary(diagram, "v_bar", diagram.spec.thresholds.v0):
        ax.plot(poly[:, 0], poly[:, 1], "-", color="orange", lw=2)
    ax.set_xlabel("F_p")
    ax.set_ylabel("F_D")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": "skyrsim"})
    plt.close(fig)


def save_diagram(diagram: PhaseDiagram, out_dir, stem: str = "sweep") -> dict:
    """Write per-seed CSV, cell-aggregate JSON (with boundaries), and image.

    All floats are repr-formatted so identical sweeps produce identical
    bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}_runs.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "seed", "f_p", "f_d", "s", "v_bar", "label"])
        for row in diagram.raw:
            run_id = f"fp{row['i_fp']:03d}_fd{row['i_fd']:03d}_s{row['k']:02d}"
            writer.writerow([run_id, row["seed"], repr(row["f_p"]), repr(row["f_d"]),
                             repr(row["s"]), repr(row["v_bar"]), row["label"]])

    boundaries = {
        "crystal_amorphous": [poly.tolist() for poly in
                              extract_boundary(diagram, "s", diagram.spec.thresholds.s0)],
        "moving_pinned": [poly.tolist() for poly in
                          extract_boundary(diagram, "v_bar", diagram.spec.thresholds.v0)],
    }
    agg = {
        "spec": diagram.spec.to_dict(),
        "f_p_values": diagram.f_p_values.tolist(),
        "f_d_values": diagram.f_d_values.tolist(),
        "s_mean": diagram.s_mean.tolist(),
        "v_mean": diagram.v_mean.tolist(),
        "labels": [[diagram.labels[i, j] for j in range(diagram.spec.f_d_count)]
                   for i in range(diagram.spec.f_p_count)],
        "boundaries": boundaries,
    }
    json_path = out_dir / f"{stem}_diagram.json"
    with open(json_path, "w") as fh:
        json.dump(agg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    png_path = out_dir / f"{stem}_diagram.png"
    render_diagram(diagram, png_path)
    return {"csv": csv_path, "json": json_path, "image": png_path}
