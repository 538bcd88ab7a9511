"""Shared fixtures: tiny smoke datasets and the desk-scale training sets.

Desk-scale sets live under ml/data and are produced by scripts/make_data.py
(slow: hundreds of simulations). The session fixture builds them on demand
if missing so a fresh checkout can still run everything.
"""

import os
import sys
from pathlib import Path

import pytest

ML_ROOT = Path(__file__).resolve().parents[1]
DATA_ROOT = Path(os.environ.get("SKYRML_DATA_DIR", ML_ROOT / "data"))


def _build_tiny_video_dataset(out_dir: Path):
    from skyrsim import VideoDatasetSpec
    from skyrsim.datasets import build_video_dataset
    from skyrsim.params import RunProtocol

    spec = VideoDatasetSpec(
        total=16, clips_per_run=4, test_grid=(2, 2), probe_count=8,
        probe_clips_per_run=4, run_budget=120, seed=51,
        protocol=RunProtocol(n_iter=600, record_stride=15, warmup_iterations=150,
                             relax_iterations=6000, relax_dt=0.2,
                             relax_force_tol=1e-5),
    )
    build_video_dataset(spec, out_dir, workers=2)


@pytest.fixture(scope="session")
def tiny_videos(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_videos")
    _build_tiny_video_dataset(out)
    return out


def _desk_dir(name: str) -> Path:
    return DATA_ROOT / name


def _ensure_desk_data():
    script = ML_ROOT / "scripts" / "make_data.py"
    missing = [n for n in ("images_desk", "videos_desk", "videos_uneven")
               if not (_desk_dir(n) / "manifest.json").exists()]
    if missing:
        print(f"\n[skyrml] building desk datasets {missing} via {script}; "
              "this runs a few hundred simulations", file=sys.stderr, flush=True)
        import subprocess

        subprocess.run([sys.executable, str(script), "--out", str(DATA_ROOT),
                        "--workers", "2"], check=True)


@pytest.fixture(scope="session")
def desk_images():
    _ensure_desk_data()
    return _desk_dir("images_desk")


@pytest.fixture(scope="session")
def desk_videos():
    _ensure_desk_data()
    return _desk_dir("videos_desk")


@pytest.fixture(scope="session")
def desk_videos_uneven():
    _ensure_desk_data()
    return _desk_dir("videos_uneven")
