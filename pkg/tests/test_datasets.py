import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from skyrsim import (
    ImageDatasetSpec,
    LabelThresholds,
    ModelParams,
    SeededRun,
    VideoDatasetSpec,
    class_quotas,
    classify_phase,
    classify_structure,
    make_clip,
    render_frame,
    run_trajectory,
)
from skyrsim.datasets import UNEVEN_FRACTIONS, VIDEO_CLASS_ORDER, build_image_dataset, build_video_dataset, regenerate
from skyrsim.errors import InvalidInputError, ParameterError
from skyrsim.params import RunProtocol

from oracles import brute_force_frame

FAST_PROTOCOL = RunProtocol(n_iter=600, record_stride=15, warmup_iterations=150,
                            relax_iterations=6000, relax_dt=0.2, relax_force_tol=1e-5)


# -------------------------------------------------------------------- frames

def test_frame_empty():
    assert render_frame(np.empty((0, 2)), 36.0).sum() == 0


def test_frame_single_particle():
    f = render_frame(np.array([[0.5, 0.5]]), 36.0)
    assert f[0, 0] == 255
    assert f.sum() == 255
    assert f.shape == (36, 36) and f.dtype == np.uint8


def test_frame_matches_brute_force():
    pos = np.random.default_rng(1).uniform(0, 36, (129, 2))
    mine = render_frame(pos, 36.0)
    assert np.array_equal(mine, brute_force_frame(pos, 36.0))
    lit = (mine > 0).sum()
    assert 1 <= lit <= 129


def test_frame_gaussian_mode():
    pos = np.array([[10.5, 20.5]])
    f = render_frame(pos, 36.0, mode="gaussian")
    assert f.dtype == np.uint8
    assert f[20, 10] == 255
    assert f[21, 10] > 0 and f[20, 11] > 0
    assert np.array_equal(f, render_frame(pos, 36.0, mode="gaussian"))
    with pytest.raises(ParameterError):
        render_frame(pos, 36.0, mode="nearest")


# -------------------------------------------------------------------- quotas

def test_uneven_quotas_paper_scale():
    q = class_quotas(15960, UNEVEN_FRACTIONS)
    assert (q["PG"], q["MC"], q["PC"], q["ML"]) == (6384, 5586, 3192, 798)
    assert sum(q.values()) == 15960


def test_balanced_quotas():
    q = class_quotas(1600, {k: 0.25 for k in VIDEO_CLASS_ORDER})
    assert all(v == 400 for v in q.values())
    q = class_quotas(1601, {k: 0.25 for k in VIDEO_CLASS_ORDER})
    assert sorted(q.values()) == [400, 400, 400, 401]


def test_uneven_quotas_within_one_of_exact():
    for total in (997, 1600, 5000):
        q = class_quotas(total, UNEVEN_FRACTIONS)
        assert sum(q.values()) == total
        for k, frac in UNEVEN_FRACTIONS.items():
            assert abs(q[k] - total * frac) <= 1


# --------------------------------------------------------------------- clips

@pytest.fixture(scope="module")
def short_traj():
    p = ModelParams.create(f_p=0.0, f_d=0.01)
    return run_trajectory(SeededRun(8, p), n_iter=600, record_stride=15,
                          relax_iterations=3000)


def test_make_clip_shape_and_label(short_traj):
    clip = make_clip(short_traj, 0, warmup_iterations=150)
    assert clip.frames.shape == (10, 36, 36)
    assert clip.frames.dtype == np.uint8
    assert clip.label == "MC"
    assert clip.one_hot == (0, 1, 0, 0)
    assert clip.provenance["seed"] == 8
    assert clip.provenance["start_iteration"] == 15


def test_make_clip_bounds(short_traj):
    assert short_traj.n_snapshots == 40
    make_clip(short_traj, 30, warmup_iterations=150)
    with pytest.raises(InvalidInputError):
        make_clip(short_traj, 31, warmup_iterations=150)
    with pytest.raises(InvalidInputError):
        make_clip(short_traj, -1, warmup_iterations=150)


def test_nonoverlapping_clip_capacity(short_traj):
    assert short_traj.n_snapshots // 10 == 4  # floor(40/10)


# ------------------------------------------------------------------- images

@pytest.fixture(scope="module")
def image_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("imgset")
    spec = ImageDatasetSpec(total=16, frames_per_run=8, run_budget=60,
                            seed=99, protocol=FAST_PROTOCOL)
    manifest = build_image_dataset(spec, out)
    return out, manifest, spec


def test_image_dataset_files_and_counts(image_dir):
    out, manifest, _ = image_dir
    images = np.fromfile(out / "images.bin", dtype=np.uint8).reshape(16, 36, 36)
    labels = np.fromfile(out / "labels.bin", dtype=np.uint8).reshape(16, 2)
    assert manifest["tensors"]["images.bin"]["shape"] == [16, 36, 36]
    assert manifest["counts"] == {"amorphous": 8, "crystal": 8}
    assert labels.sum() == 16  # one-hot rows
    assert manifest["split"] == {"train_count": 12, "val_count": 4, "fraction": 0.8,
                                 "rule": "first train_count samples are the training split"}
    assert images.max() == 255


def test_image_labels_match_stored_s(image_dir):
    out, _, spec = image_dir
    with open(out / "params.csv") as fh:
        rows = list(csv.DictReader(fh))
    labels = np.fromfile(out / "labels.bin", dtype=np.uint8).reshape(16, 2)
    assert len(rows) == 16
    for i, row in enumerate(rows):
        name, one_hot = classify_structure(float(row["s"]), spec.thresholds)
        assert row["label"] == name
        assert tuple(labels[i]) == one_hot


def test_image_dataset_regeneration_byte_identical(image_dir, tmp_path):
    out, _, _ = image_dir
    redo = tmp_path / "again"
    regenerate(out / "manifest.json", redo)
    for name in ("images.bin", "labels.bin", "params.csv", "manifest.json"):
        assert (out / name).read_bytes() == (redo / name).read_bytes(), name


# -------------------------------------------------------------------- videos

@pytest.fixture(scope="module")
def video_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("vidset")
    spec = VideoDatasetSpec(total=8, clips_per_run=3, test_grid=(2, 2),
                            probe_count=4, probe_clips_per_run=2,
                            run_budget=120, seed=31, protocol=FAST_PROTOCOL)
    manifest = build_video_dataset(spec, out)
    return out, manifest, spec


def test_video_dataset_files_and_counts(video_dir):
    out, manifest, _ = video_dir
    videos = np.fromfile(out / "videos.bin", dtype=np.uint8).reshape(8, 10, 36, 36)
    labels = np.fromfile(out / "labels.bin", dtype=np.uint8).reshape(8, 4)
    assert manifest["counts"] == {k: 2 for k in VIDEO_CLASS_ORDER}
    assert labels.sum() == 8
    assert videos.shape == (8, 10, 36, 36)
    test_labels = np.fromfile(out / "test_labels.bin", dtype=np.uint8).reshape(4, 4)
    assert test_labels.shape == (4, 4)
    probe = np.fromfile(out / "probe_videos.bin", dtype=np.uint8)
    assert probe.size == 4 * 10 * 36 * 36


def test_video_labels_match_stored_order_params(video_dir):
    out, _, spec = video_dir
    for prefix in ("", "test_", "probe_"):
        with open(out / f"{prefix}params.csv") as fh:
            rows = list(csv.DictReader(fh))
        labels = np.fromfile(out / f"{prefix}labels.bin", dtype=np.uint8)
        labels = labels.reshape(len(rows), 4)
        for i, row in enumerate(rows):
            op = classify_phase(float(row["s"]), float(row["v_bar"]), spec.thresholds)
            assert row["label"] == op.label.value
            assert tuple(labels[i]) == op.one_hot


def test_probe_rows_recompute_from_provenance(video_dir):
    from skyrsim import measure_trajectory

    out, _, spec = video_dir
    with open(out / "probe_params.csv") as fh:
        row = next(csv.DictReader(fh))
    params = spec.params.replace(f_p=float(row["f_p"]), f_d=float(row["f_d"]))
    traj = run_trajectory(SeededRun(int(row["seed"]), params),
                          n_iter=spec.protocol.n_iter,
                          record_stride=spec.protocol.record_stride,
                          relax_iterations=spec.protocol.relax_iterations,
                          relax_dt=spec.protocol.relax_dt,
                          relax_force_tol=spec.protocol.relax_force_tol)
    op = measure_trajectory(traj, spec.thresholds, spec.protocol.warmup_iterations)
    assert abs(op.s - float(row["s"])) <= 1e-9
    assert abs(op.v_bar - float(row["v_bar"])) <= 1e-9


def test_video_dataset_regeneration_byte_identical(video_dir, tmp_path):
    out, _, _ = video_dir
    redo = tmp_path / "again"
    regenerate(out / "manifest.json", redo)
    for name in ("videos.bin", "labels.bin", "params.csv", "test_videos.bin",
                 "test_params.csv", "probe_videos.bin", "probe_params.csv",
                 "manifest.json"):
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == \
            hashlib.sha256((redo / name).read_bytes()).hexdigest(), name


def test_split_disjoint_and_exhaustive(video_dir):
    _, manifest, _ = video_dir
    split = manifest["split"]
    assert split["train_count"] + split["val_count"] == 8
