"""Binary trajectory dumps with a JSON sidecar.

Layout: 16-byte header (8-byte magic "SKYRTRAJ", uint32 version, 4 reserved
bytes), little-endian uint64 counts (N_s, n_snapshots), then row-major
float32 wrapped positions per snapshot. The sidecar <path>.json carries the
params, seed, stride, dt and provenance; data files contain no timestamps so
identical runs dump identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .errors import InvalidInputError
from .params import ModelParams

MAGIC = b"SKYRTRAJ"
VERSION = 1
_HEADER = struct.Struct("<8sI4x")
_COUNTS = struct.Struct("<QQ")


def write_trajectory(traj: Trajectory, path, extra_meta: dict | None = None) -> None:
    path = Path(path)
    n_snap, n, _ = traj.positions.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION))
        fh.write(_COUNTS.pack(n, n_snap))
        fh.write(np.ascontiguousarray(traj.positions, dtype="<f4").tobytes())
    meta = {
        "format": {"magic": MAGIC.decode(), "version": VERSION, "dtype": "float32",
                   "order": "C", "endianness": "little"},
        "params": traj.params.to_dict(),
        "seed": traj.seed,
        "record_stride": traj.record_stride,
        "dt": traj.params.dt,
        "n_snapshots": int(n_snap),
        "n_skyrmions": int(n),
        "iterations": [int(traj.iterations[0]), int(traj.iterations[-1])] if n_snap else [],
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_trajectory(path):
    """Load (positions float32 (S,N,2), meta dict) from a dump + sidecar."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic, version = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MAGIC:
            raise InvalidInputError(f"{path}: not a trajectory dump (bad magic)")
        if version != VERSION:
            raise InvalidInputError(f"{path}: unsupported version {version}")
        n, n_snap = _COUNTS.unpack(fh.read(_COUNTS.size))
        data = np.frombuffer(fh.read(), dtype="<f4")
    expected = n_snap * n * 2
    if data.size != expected:
        raise InvalidInputError(f"{path}: truncated dump ({data.size} != {expected} floats)")
    positions = data.reshape(int(n_snap), int(n), 2)
    meta_path = sidecar_path(path)
    meta = {}
    if meta_path.exists():
        with open(meta_path) as fh:
            meta = json.load(fh)
    return positions, meta


def params_from_meta(meta: dict) -> ModelParams:
    return ModelParams(**meta["params"])
