import hashlib
import json
import struct

import numpy as np
import pytest

from skyrsim import ModelParams, SeededRun, run_trajectory
from skyrsim.errors import InvalidInputError
from skyrsim.trajio import read_trajectory, sidecar_path, write_trajectory


@pytest.fixture(scope="module")
def traj():
    p = ModelParams.create(f_p=0.1, f_d=0.01)
    return run_trajectory(SeededRun(77, p), n_iter=150, relax_iterations=500)


def test_roundtrip(tmp_path, traj):
    path = tmp_path / "t.bin"
    write_trajectory(traj, path)
    positions, meta = read_trajectory(path)
    assert positions.shape == traj.positions.shape
    assert np.allclose(positions, traj.positions.astype(np.float32))
    assert meta["seed"] == 77
    assert meta["record_stride"] == 15
    assert meta["params"]["f_p"] == 0.1
    assert meta["dt"] == traj.params.dt


def test_header_layout(tmp_path, traj):
    path = tmp_path / "t.bin"
    write_trajectory(traj, path)
    blob = path.read_bytes()
    assert blob[:8] == b"SKYRTRAJ"
    version, = struct.unpack_from("<I", blob, 8)
    assert version == 1
    n, n_snap = struct.unpack_from("<QQ", blob, 16)
    assert (n, n_snap) == (129, traj.n_snapshots)
    assert len(blob) == 32 + n_snap * n * 2 * 4


def test_write_is_deterministic(tmp_path, traj):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    write_trajectory(traj, a)
    write_trajectory(traj, b)
    assert hashlib.sha256(a.read_bytes()).hexdigest() == \
        hashlib.sha256(b.read_bytes()).hexdigest()
    assert json.loads(sidecar_path(a).read_text()) == \
        json.loads(sidecar_path(b).read_text())


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTATRAJ" + b"\0" * 40)
    with pytest.raises(InvalidInputError):
        read_trajectory(path)


def test_truncated_rejected(tmp_path, traj):
    path = tmp_path / "t.bin"
    write_trajectory(traj, path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-8])
    with pytest.raises(InvalidInputError):
        read_trajectory(path)
