"""Rasterize trajectories into 36x36 frames and emit labeled datasets.

Tensors are raw little-endian arrays (uint8) with a JSON manifest giving
shape, dtype and byte order, so any language can read them. The manifest
also embeds the full generation spec; regenerating from it reproduces every
file byte-identically. The manifest is written last as the commit marker.

Image samples are single frames labeled crystal/amorphous from the
per-frame S only; video samples are 10-frame clips labeled with the
four-way phase of their source run.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__ as _pkg_version
from .dynamics import SeededRun, Trajectory, run_trajectory
from .errors import GenerationError, InvalidInputError, ParameterError
from .order import (
    ONE_HOT,
    STRUCTURE_ONE_HOT,
    classify_structure,
    compute_rdf,
    compute_sdrdf,
    measure_trajectory,
)
from .params import LabelThresholds, ModelParams, RunProtocol

RENDER_MODES = ("binary", "gaussian")
_GAUSS_SIGMA = 0.6

# Class order is fixed for quotas and reports: PG, MC, PC, ML matches the
# uneven 40/35/20/5 proportions.
VIDEO_CLASS_ORDER = ("PG", "MC", "PC", "ML")
UNEVEN_FRACTIONS = {"PG": 0.40, "MC": 0.35, "PC": 0.20, "ML": 0.05}
IMAGE_CLASS_ORDER = ("amorphous", "crystal")

# (f_p, f_d) proposal windows per targeted class, calibrated on the desk
# phase map. Mislabeled proposals still land in their measured class pool.
VIDEO_WINDOWS = {
    "PC": ((0.0, 0.05), (0.0, 0.0)),
    "MC": ((0.0, 0.05), (0.004, 0.02)),
    "PG": ((0.15, 0.3575), (0.0, 0.003)),
    "ML": ((0.08, 0.30), (0.008, 0.02)),
}
IMAGE_WINDOWS = {
    "crystal": ((0.0, 0.05), (0.0, 0.015)),
    "amorphous": ((0.10, 0.3575), (0.0, 0.015)),
}
PROBE_WINDOWS = (
    ((0.0, 0.3575), (0.0, 0.02)),   # uniform over the plane
    ((0.02, 0.12), (0.0, 0.02)),    # near the crystal/amorphous boundary
    ((0.10, 0.3575), (0.0, 0.01)),  # near the depinning boundary
)


def render_frame(positions: np.ndarray, box_l: float, mode: str = "binary") -> np.ndarray:
    """Occupancy splat of wrapped positions onto a box_l x box_l pixel grid."""
    if mode not in RENDER_MODES:
        raise ParameterError(f"render mode must be one of {RENDER_MODES}")
    n_pix = int(round(box_l))
    frame = np.zeros((n_pix, n_pix), dtype=np.uint8)
    pos = np.asarray(positions, dtype=float)
    if pos.size == 0:
        return frame
    ix = np.floor(pos[:, 0]).astype(int) % n_pix
    iy = np.floor(pos[:, 1]).astype(int) % n_pix
    if mode == "binary":
        frame[iy, ix] = 255
        return frame
    acc = np.zeros((n_pix, n_pix))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            w = np.exp(-(dx * dx + dy * dy) / (2 * _GAUSS_SIGMA**2))
            np.add.at(acc, ((iy + dy) % n_pix, (ix + dx) % n_pix), 255.0 * w)
    return np.clip(np.rint(acc), 0, 255).astype(np.uint8)


@dataclass
class VideoClip:
    """Ten consecutive stride-spaced frames with the run's phase label."""

    frames: np.ndarray  # (10, n_pix, n_pix) uint8
    label: str
    one_hot: tuple
    provenance: dict  # seed, f_p, f_d, start_iteration, s, v_bar


def make_clip(trajectory: Trajectory, start: int,
              thresholds: LabelThresholds | None = None,
              warmup_iterations: int = 1000,
              render_mode: str = "binary",
              measured=None) -> VideoClip:
    """Render snapshots [start, start+10) and label from the full run."""
    if start < 0 or start + 10 > trajectory.n_snapshots:
        raise InvalidInputError(
            f"clip start {start} needs 10 snapshots, trajectory has {trajectory.n_snapshots}"
        )
    if measured is None:
        thresholds = thresholds or LabelThresholds()
        measured = measure_trajectory(trajectory, thresholds, warmup_iterations)
    frames = np.stack([
        render_frame(trajectory.positions[t], trajectory.params.box_l, render_mode)
        for t in range(start, start + 10)
    ])
    return VideoClip(
        frames=frames,
        label=measured.label.value,
        one_hot=measured.one_hot,
        provenance={
            "seed": trajectory.seed,
            "f_p": trajectory.params.f_p,
            "f_d": trajectory.params.f_d,
            "start_iteration": int(trajectory.iterations[start]),
            "s": measured.s,
            "v_bar": measured.v_bar,
        },
    )


def class_quotas(total: int, fractions: dict[str, float]) -> dict[str, int]:
    """Integer quotas by largest remainder; insertion order breaks ties."""
    raw = {k: total * f for k, f in fractions.items()}
    base = {k: int(np.floor(v)) for k, v in raw.items()}
    short = total - sum(base.values())
    order = sorted(fractions, key=lambda k: raw[k] - base[k], reverse=True)
    for k in order[:short]:
        base[k] += 1
    return base


@dataclass(frozen=True)
class ImageDatasetSpec:
    total: int = 2400
    split_fraction: float = 0.8
    seed: int = 2024
    render_mode: str = "binary"
    frames_per_run: int = 25
    xi_s_set: tuple = (2.0, 2.5, 3.0, 3.5)
    xi_d_set: tuple = (0.2, 0.3, 0.4)
    run_budget: int = 2000
    params: ModelParams = field(default_factory=ModelParams.create)
    thresholds: LabelThresholds = field(default_factory=LabelThresholds)
    protocol: RunProtocol = field(default_factory=RunProtocol)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.to_dict()
        d["thresholds"] = self.thresholds.to_dict()
        d["protocol"] = self.protocol.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "ImageDatasetSpec":
        d = dict(d)
        d["params"] = ModelParams(**d["params"])
        d["thresholds"] = LabelThresholds(**d["thresholds"])
        d["protocol"] = RunProtocol(**d["protocol"])
        d["xi_s_set"] = tuple(d["xi_s_set"])
        d["xi_d_set"] = tuple(d["xi_d_set"])
        return ImageDatasetSpec(**d)


@dataclass(frozen=True)
class VideoDatasetSpec:
    total: int = 1600
    proportion_mode: str = "balanced"  # or "uneven" (40/35/20/5 PG/MC/PC/ML)
    split_fraction: float = 0.8
    seed: int = 2024
    render_mode: str = "binary"
    clips_per_run: int = 12
    test_grid: tuple = (14, 6)  # (f_p_count, f_d_count); paper scale (30, 28)
    test_f_p_max: float = 0.3575
    test_f_d_max: float = 0.02
    probe_count: int = 640
    probe_clips_per_run: int = 4
    run_budget: int = 3000
    params: ModelParams = field(default_factory=ModelParams.create)
    thresholds: LabelThresholds = field(default_factory=LabelThresholds)
    protocol: RunProtocol = field(default_factory=RunProtocol)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.to_dict()
        d["thresholds"] = self.thresholds.to_dict()
        d["protocol"] = self.protocol.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "VideoDatasetSpec":
        d = dict(d)
        d["params"] = ModelParams(**d["params"])
        d["thresholds"] = LabelThresholds(**d["thresholds"])
        d["protocol"] = RunProtocol(**d["protocol"])
        d["test_grid"] = tuple(d["test_grid"])
        return VideoDatasetSpec(**d)

    def quotas(self) -> dict[str, int]:
        if self.proportion_mode == "balanced":
            fractions = {k: 1.0 / 4.0 for k in VIDEO_CLASS_ORDER}
        elif self.proportion_mode == "uneven":
            fractions = UNEVEN_FRACTIONS
        else:
            raise ParameterError("proportion_mode must be 'balanced' or 'uneven'")
        return class_quotas(self.total, fractions)


def _image_worker(task):
    (seed, f_p, f_d, xi_s, xi_d, params_dict, thresholds_dict, protocol_dict,
     frames_per_run, render_mode) = task
    params = ModelParams(**{**params_dict, "f_p": f_p, "f_d": f_d,
                            "xi_s": xi_s, "pin_radius": xi_d})
    thresholds = LabelThresholds(**thresholds_dict)
    protocol = RunProtocol(**protocol_dict)
    traj = run_trajectory(SeededRun(seed, params), n_iter=protocol.n_iter,
                          record_stride=protocol.record_stride,
                          relax_iterations=protocol.relax_iterations,
                          relax_dt=protocol.relax_dt,
                          relax_force_tol=protocol.relax_force_tol)
    measured = measure_trajectory(traj, thresholds, protocol.warmup_iterations)
    tail = traj.after_iteration(protocol.warmup_iterations)
    take = min(frames_per_run, tail.n_snapshots)
    picks = np.unique(np.linspace(0, tail.n_snapshots - 1, take).astype(int))
    samples = []
    for t in picks:
        rdf = compute_rdf(tail.positions[t], params.box_l,
                          bin_width=thresholds.rdf_bin_width,
                          r_max=thresholds.rdf_r_max)
        s_frame = compute_sdrdf(rdf, thresholds)
        name, one_hot = classify_structure(s_frame, thresholds)
        frame = render_frame(tail.positions[t], params.box_l, render_mode)
        samples.append({
            "frame": frame, "label": name, "one_hot": one_hot,
            "s": s_frame, "v_bar": measured.v_bar,
            "f_p": f_p, "f_d": f_d, "xi_s": xi_s, "xi_d": xi_d,
            "seed": seed, "start_iteration": int(tail.iterations[t]),
        })
    return samples


def _video_worker(task):
    (seed, f_p, f_d, params_dict, thresholds_dict, protocol_dict,
     max_clips, render_mode) = task
    params = ModelParams(**{**params_dict, "f_p": f_p, "f_d": f_d})
    thresholds = LabelThresholds(**thresholds_dict)
    protocol = RunProtocol(**protocol_dict)
    traj = run_trajectory(SeededRun(seed, params), n_iter=protocol.n_iter,
                          record_stride=protocol.record_stride,
                          relax_iterations=protocol.relax_iterations,
                          relax_dt=protocol.relax_dt,
                          relax_force_tol=protocol.relax_force_tol)
    measured = measure_trajectory(traj, thresholds, protocol.warmup_iterations)
    tail = traj.after_iteration(protocol.warmup_iterations)
    n_clips = min(max_clips, tail.n_snapshots // 10)
    clips = []
    for c in range(n_clips):
        frames = np.stack([
            render_frame(tail.positions[c * 10 + t], params.box_l, render_mode)
            for t in range(10)
        ])
        clips.append({
            "frames": frames, "label": measured.label.value,
            "one_hot": ONE_HOT[measured.label],
            "s": measured.s, "v_bar": measured.v_bar,
            "f_p": f_p, "f_d": f_d, "seed": seed,
            "start_iteration": int(tail.iterations[c * 10]),
        })
    return clips


def _execute(worker, tasks, workers):
    if workers <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, tasks))


def _write_tensor(path: Path, arr: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(arr).tobytes())


def _write_params_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i, row in enumerate(rows):
            out = []
            for col in columns:
                val = row[col] if col != "sample_id" else i
                out.append(repr(val) if isinstance(val, float) else val)
            writer.writerow(out)


def build_image_dataset(spec: ImageDatasetSpec, out_dir, workers: int = 1) -> dict:
    """Two-class image set across the (xi_s, xi_d) variation grid."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan_rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(1,)))
    quotas = class_quotas(spec.total, {k: 0.5 for k in IMAGE_CLASS_ORDER})
    pools: dict[str, list] = {k: [] for k in IMAGE_CLASS_ORDER}
    runs_done = 0
    while any(len(pools[k]) < quotas[k] for k in IMAGE_CLASS_ORDER):
        deficits = {k: quotas[k] - len(pools[k]) for k in IMAGE_CLASS_ORDER}
        if runs_done >= spec.run_budget:
            worst = max(deficits, key=lambda k: deficits[k])
            raise GenerationError(
                f"image generation budget {spec.run_budget} exhausted; "
                f"class '{worst}' still short {deficits[worst]} samples"
            )
        batch = max(2 * workers, 8)
        tasks = []
        for _ in range(min(batch, spec.run_budget - runs_done)):
            target = max(deficits, key=lambda k: deficits[k])
            (fp_lo, fp_hi), (fd_lo, fd_hi) = IMAGE_WINDOWS[target]
            f_p = float(plan_rng.uniform(fp_lo, fp_hi))
            f_d = float(plan_rng.uniform(fd_lo, fd_hi))
            xi_s = float(plan_rng.choice(spec.xi_s_set))
            xi_d = float(plan_rng.choice(spec.xi_d_set))
            seed = int(plan_rng.integers(0, 2**63 - 1))
            tasks.append((seed, f_p, f_d, xi_s, xi_d, spec.params.to_dict(),
                          spec.thresholds.to_dict(), spec.protocol.to_dict(),
                          spec.frames_per_run, spec.render_mode))
            # keep targeting honest within the batch
            deficits[target] = max(deficits[target] - spec.frames_per_run // 2, 0)
        for samples in _execute(_image_worker, tasks, workers):
            for s in samples:
                pools[s["label"]].append(s)
        runs_done += len(tasks)

    chosen = []
    for k in IMAGE_CLASS_ORDER:
        chosen.extend(pools[k][: quotas[k]])
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(2,)))
    perm = shuffle_rng.permutation(len(chosen))
    chosen = [chosen[i] for i in perm]

    n_pix = int(round(spec.params.box_l))
    images = np.stack([s["frame"] for s in chosen])
    labels = np.array([s["one_hot"] for s in chosen], dtype=np.uint8)
    _write_tensor(out_dir / "images.bin", images)
    _write_tensor(out_dir / "labels.bin", labels)
    columns = ["sample_id", "seed", "f_p", "f_d", "xi_s", "xi_d",
               "start_iteration", "s", "v_bar", "label"]
    _write_params_csv(out_dir / "params.csv", chosen, columns)

    train_count = int(len(chosen) * spec.split_fraction)
    manifest = {
        "kind": "images",
        "format_version": 1,
        "code_version": _pkg_version,
        "tensors": {
            "images.bin": {"shape": [len(chosen), n_pix, n_pix], "dtype": "uint8",
                           "order": "C", "endianness": "little"},
            "labels.bin": {"shape": [len(chosen), 2], "dtype": "uint8",
                           "order": "C", "endianness": "little",
                           "one_hot": {k: list(STRUCTURE_ONE_HOT[k]) for k in IMAGE_CLASS_ORDER}},
        },
        "counts": {k: quotas[k] for k in IMAGE_CLASS_ORDER},
        "split": {"train_count": train_count, "val_count": len(chosen) - train_count,
                  "fraction": spec.split_fraction,
                  "rule": "first train_count samples are the training split"},
        "render_mode": spec.render_mode,
        "thresholds": spec.thresholds.to_dict(),
        "generation": spec.to_dict(),
        "runs_executed": runs_done,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _plan_video_batch(plan_rng, deficits, spec, count):
    tasks = []
    for _ in range(count):
        target = max(deficits, key=lambda k: deficits[k])
        (fp_lo, fp_hi), (fd_lo, fd_hi) = VIDEO_WINDOWS[target]
        f_p = float(plan_rng.uniform(fp_lo, fp_hi))
        f_d = float(plan_rng.uniform(fd_lo, fd_hi)) if fd_hi > fd_lo else fd_lo
        seed = int(plan_rng.integers(0, 2**63 - 1))
        tasks.append((seed, f_p, f_d, spec.params.to_dict(), spec.thresholds.to_dict(),
                      spec.protocol.to_dict(), spec.clips_per_run, spec.render_mode))
        deficits[target] = max(deficits[target] - spec.clips_per_run, 0)
    return tasks


def build_video_dataset(spec: VideoDatasetSpec, out_dir, workers: int = 1) -> dict:
    """Four-class clip set plus the evenly-gridded test set and probe set."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    quotas = spec.quotas()
    plan_rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(11,)))
    pools: dict[str, list] = {k: [] for k in VIDEO_CLASS_ORDER}
    runs_done = 0
    while any(len(pools[k]) < quotas[k] for k in VIDEO_CLASS_ORDER):
        deficits = {k: max(quotas[k] - len(pools[k]), 0) for k in VIDEO_CLASS_ORDER}
        if runs_done >= spec.run_budget:
            worst = max(deficits, key=lambda k: deficits[k])
            raise GenerationError(
                f"video generation budget {spec.run_budget} exhausted; "
                f"class '{worst}' still short {deficits[worst]} clips"
            )
        batch = min(max(2 * workers, 8), spec.run_budget - runs_done)
        tasks = _plan_video_batch(plan_rng, deficits, spec, batch)
        for clips in _execute(_video_worker, tasks, workers):
            for c in clips:
                pools[c["label"]].append(c)
        runs_done += len(tasks)

    chosen = []
    for k in VIDEO_CLASS_ORDER:
        chosen.extend(pools[k][: quotas[k]])
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(12,)))
    perm = shuffle_rng.permutation(len(chosen))
    chosen = [chosen[i] for i in perm]

    # evenly-gridded test set: one clip per grid point
    fp_count, fd_count = spec.test_grid
    fps = np.linspace(0.0, spec.test_f_p_max, fp_count)
    fds = np.linspace(0.0, spec.test_f_d_max, fd_count)
    test_rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(13,)))
    test_tasks = []
    for f_p in fps:
        for f_d in fds:
            seed = int(test_rng.integers(0, 2**63 - 1))
            test_tasks.append((seed, float(f_p), float(f_d), spec.params.to_dict(),
                               spec.thresholds.to_dict(), spec.protocol.to_dict(),
                               1, spec.render_mode))
    test_clips = [clips[0] for clips in _execute(_video_worker, test_tasks, workers)]
    runs_done += len(test_tasks)

    # probe set with stored per-sample (s, v_bar)
    probe_rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(14,)))
    probe: list[dict] = []
    probe_runs = 0
    while len(probe) < spec.probe_count:
        if probe_runs > spec.run_budget:
            raise GenerationError("probe generation exceeded the run budget")
        batch = min(max(2 * workers, 8),
                    max((spec.probe_count - len(probe)) // spec.probe_clips_per_run + 1, 1))
        tasks = []
        for _ in range(batch):
            (fp_lo, fp_hi), (fd_lo, fd_hi) = PROBE_WINDOWS[
                int(probe_rng.integers(0, len(PROBE_WINDOWS)))
            ]
            f_p = float(probe_rng.uniform(fp_lo, fp_hi))
            f_d = float(probe_rng.uniform(fd_lo, fd_hi))
            seed = int(probe_rng.integers(0, 2**63 - 1))
            tasks.append((seed, f_p, f_d, spec.params.to_dict(), spec.thresholds.to_dict(),
                          spec.protocol.to_dict(), spec.probe_clips_per_run, spec.render_mode))
        for clips in _execute(_video_worker, tasks, workers):
            probe.extend(clips)
        probe_runs += len(tasks)
    probe = probe[: spec.probe_count]

    n_pix = int(round(spec.params.box_l))
    columns = ["sample_id", "seed", "f_p", "f_d", "start_iteration", "s", "v_bar", "label"]

    def emit(prefix: str, clips: list[dict]):
        videos = np.stack([c["frames"] for c in clips])
        labels = np.array([c["one_hot"] for c in clips], dtype=np.uint8)
        _write_tensor(out_dir / f"{prefix}videos.bin", videos)
        _write_tensor(out_dir / f"{prefix}labels.bin", labels)
        _write_params_csv(out_dir / f"{prefix}params.csv", clips, columns)
        return {
            f"{prefix}videos.bin": {"shape": list(videos.shape), "dtype": "uint8",
                                    "order": "C", "endianness": "little"},
            f"{prefix}labels.bin": {"shape": list(labels.shape), "dtype": "uint8",
                                    "order": "C", "endianness": "little",
                                    "one_hot": {k.value: list(v) for k, v in ONE_HOT.items()}},
        }

    tensors = {}
    tensors.update(emit("", chosen))
    tensors.update(emit("test_", test_clips))
    tensors.update(emit("probe_", probe))

    train_count = int(len(chosen) * spec.split_fraction)
    manifest = {
        "kind": "videos",
        "format_version": 1,
        "code_version": _pkg_version,
        "tensors": tensors,
        "counts": {k: quotas[k] for k in VIDEO_CLASS_ORDER},
        "proportion_mode": spec.proportion_mode,
        "split": {"train_count": train_count, "val_count": len(chosen) - train_count,
                  "fraction": spec.split_fraction,
                  "rule": "first train_count samples are the training split"},
        "test_grid": {"f_p_count": fp_count, "f_d_count": fd_count,
                      "f_p_max": spec.test_f_p_max, "f_d_max": spec.test_f_d_max},
        "probe_count": spec.probe_count,
        "render_mode": spec.render_mode,
        "thresholds": spec.thresholds.to_dict(),
        "generation": spec.to_dict(),
        "runs_executed": runs_done + probe_runs,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def regenerate(manifest_path, out_dir, workers: int = 1) -> dict:
    """Rebuild a dataset from its manifest's generation block."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    gen = manifest["generation"]
    if manifest["kind"] == "images":
        return build_image_dataset(ImageDatasetSpec.from_dict(gen), out_dir, workers)
    if manifest["kind"] == "videos":
        return build_video_dataset(VideoDatasetSpec.from_dict(gen), out_dir, workers)
    raise InvalidInputError(f"unknown dataset kind {manifest['kind']!r}")
