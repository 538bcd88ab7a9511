"""Readers for the dataset directories emitted by the simulation package.

A dataset directory holds raw little-endian uint8 tensors plus manifest.json
(shapes, dtype, one-hot maps, split rule) and params.csv with per-sample
order parameters. Pixels are scaled to [0, 1] for training; the raw bytes
are exposed for round-trip checks.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

VIDEO_CLASSES = ("PC", "MC", "PG", "ML")  # one-hot component order
IMAGE_CLASSES = ("amorphous", "crystal")


@dataclass
class SplitData:
    """Feature/label arrays with the manifest's train/validation split."""

    x: np.ndarray  # float32 in [0,1], channel-less
    y: np.ndarray  # int64 class indices
    one_hot: np.ndarray  # uint8 as written
    train_count: int
    params: list[dict]
    classes: tuple

    @property
    def x_train(self):
        return self.x[: self.train_count]

    @property
    def y_train(self):
        return self.y[: self.train_count]

    @property
    def x_val(self):
        return self.x[self.train_count:]

    @property
    def y_val(self):
        return self.y[self.train_count:]

    @property
    def val_params(self):
        return self.params[self.train_count:]


def read_manifest(dataset_dir) -> dict:
    with open(Path(dataset_dir) / "manifest.json") as fh:
        return json.load(fh)


def read_raw_tensor(dataset_dir, name: str, manifest: dict | None = None) -> np.ndarray:
    """Tensor exactly as written (uint8, shaped per the manifest)."""
    manifest = manifest or read_manifest(dataset_dir)
    info = manifest["tensors"][name]
    assert info["dtype"] == "uint8" and info["order"] == "C"
    data = np.fromfile(Path(dataset_dir) / name, dtype=np.uint8)
    return data.reshape(info["shape"])


def read_params_csv(dataset_dir, name: str = "params.csv") -> list[dict]:
    with open(Path(dataset_dir) / name) as fh:
        rows = []
        for row in csv.DictReader(fh):
            for key in ("s", "v_bar", "f_p", "f_d"):
                if key in row:
                    row[key] = float(row[key])
            rows.append(row)
    return rows


def _labels_to_indices(one_hot: np.ndarray) -> np.ndarray:
    return np.argmax(one_hot, axis=1).astype(np.int64)


def load_split(dataset_dir, prefix: str = "") -> SplitData:
    """Load one tensor group ('' = train/val split, 'test_' or 'probe_')."""
    manifest = read_manifest(dataset_dir)
    kind = manifest["kind"]
    feat_name = f"{prefix}images.bin" if kind == "images" else f"{prefix}videos.bin"
    x_raw = read_raw_tensor(dataset_dir, feat_name, manifest)
    one_hot = read_raw_tensor(dataset_dir, f"{prefix}labels.bin", manifest)
    params = read_params_csv(dataset_dir, f"{prefix}params.csv")
    x = x_raw.astype(np.float32) / 255.0
    y = _labels_to_indices(one_hot)
    train_count = manifest["split"]["train_count"] if prefix == "" else 0
    classes = IMAGE_CLASSES if kind == "images" else VIDEO_CLASSES
    return SplitData(x=x, y=y, one_hot=one_hot, train_count=train_count,
                     params=params, classes=classes)
