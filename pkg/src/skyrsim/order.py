"""Order parameters: RDF, its outer-shell standard deviation, mean velocity.

The spatial order parameter S is the population standard deviation of the
radial distribution function beyond the third-neighbor shell; crystals keep
resolvable peaks there, amorphous states do not. The temporal order
parameter v_bar is the magnitude of the mean per-frame displacement (the
transport velocity), expressed per video second: snapshots are one video
frame apart and play back at 30 frames/s.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .dynamics import Trajectory, minimum_image
from .errors import InvalidInputError
from .params import VIDEO_FPS, LabelThresholds


class PhaseLabel(str, Enum):
    PC = "PC"  # pinned crystal
    MC = "MC"  # moving crystal
    PG = "PG"  # pinned amorphous glass
    ML = "ML"  # moving liquid


ONE_HOT = {
    PhaseLabel.PC: (1, 0, 0, 0),
    PhaseLabel.MC: (0, 1, 0, 0),
    PhaseLabel.PG: (0, 0, 1, 0),
    PhaseLabel.ML: (0, 0, 0, 1),
}

# Two-class structure labels for the image task: amorphous (ML, PG) first.
STRUCTURE_ONE_HOT = {"amorphous": (1, 0), "crystal": (0, 1)}


@dataclass
class RdfHistogram:
    """Binned pair-correlation estimate g(r), averaged over reference
    particles and snapshots."""

    bin_width: float
    r_max: float
    g: np.ndarray
    n_reference: int

    @property
    def bin_centers(self) -> np.ndarray:
        edges = np.arange(len(self.g) + 1) * self.bin_width
        return 0.5 * (edges[1:] + edges[:-1])


@dataclass(frozen=True)
class OrderParams:
    """The (S, v_bar) pair with its four-way phase label."""

    s: float
    v_bar: float
    label: PhaseLabel

    @property
    def one_hot(self) -> tuple[int, int, int, int]:
        return ONE_HOT[self.label]


def compute_rdf(snapshots, box_l: float, bin_width: float = 0.1,
                r_max: float = 12.0) -> RdfHistogram:
    """2D RDF from one or more snapshots of wrapped positions.

    Pair counts per annulus are normalized by rho_0 * pi*(r2^2 - r1^2) per
    reference particle, then averaged over reference particles and
    snapshots. Distances use the minimum image convention.
    """
    snaps = np.asarray(snapshots, dtype=float)
    if snaps.ndim == 2:
        snaps = snaps[None]
    if snaps.ndim != 3 or snaps.shape[0] == 0 or snaps.shape[1] < 2:
        raise InvalidInputError("compute_rdf needs >= 1 snapshot of >= 2 particles")
    if not (bin_width > 0 and 0 < r_max <= box_l / 2):
        raise InvalidInputError("require bin_width > 0 and 0 < r_max <= box_l/2")
    n_bins = int(np.ceil(r_max / bin_width))
    n = snaps.shape[1]
    rho = n / (box_l * box_l)
    iu, ju = np.triu_indices(n, 1)
    counts = np.zeros(n_bins)
    for p in snaps:
        d = p[iu] - p[ju]
        d -= box_l * np.round(d / box_l)
        r = np.hypot(d[:, 0], d[:, 1])
        h, edges = np.histogram(r, bins=n_bins, range=(0.0, n_bins * bin_width))
        counts += 2 * h  # each unordered pair seen from both reference particles
    area = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    g = counts / (snaps.shape[0] * n * rho * area)
    return RdfHistogram(bin_width=bin_width, r_max=n_bins * bin_width, g=g,
                        n_reference=snaps.shape[0] * n)


def compute_sdrdf(rdf: RdfHistogram, thresholds: LabelThresholds) -> float:
    """Population standard deviation of g over bins centered at
    r >= sdrdf_r_start."""
    mask = rdf.bin_centers >= thresholds.sdrdf_r_start
    if mask.sum() < 8:
        raise InvalidInputError("fewer than 8 RDF bins beyond sdrdf_r_start")
    return float(np.std(rdf.g[mask]))


def compute_mean_velocity(trajectory: Trajectory, params=None) -> float:
    """Transport speed in length units per video second.

    Mean over consecutive snapshot pairs of the magnitude of the
    particle-averaged displacement, times 30 frames/s. The particle average
    cancels the zero-drift internal churn of pinned and annealing states, so
    the value measures actual transport.
    """
    if trajectory.n_snapshots < 2:
        raise InvalidInputError("mean velocity needs >= 2 snapshots")
    du = np.diff(trajectory.unwrapped, axis=0)
    com_step = du.mean(axis=1)
    return float(np.linalg.norm(com_step, axis=-1).mean() * VIDEO_FPS)


def classify_phase(s: float, v_bar: float, thresholds: LabelThresholds) -> OrderParams:
    """Four-way label: crystal iff s > s0, moving iff v_bar > v0
    (ties resolve to the amorphous/pinned side)."""
    if not (np.isfinite(s) and np.isfinite(v_bar)):
        raise InvalidInputError(f"non-finite order parameters: s={s!r}, v_bar={v_bar!r}")
    crystal = s > thresholds.s0
    moving = v_bar > thresholds.v0
    if crystal:
        label = PhaseLabel.MC if moving else PhaseLabel.PC
    else:
        label = PhaseLabel.ML if moving else PhaseLabel.PG
    return OrderParams(s=float(s), v_bar=float(v_bar), label=label)


def classify_structure(s: float, thresholds: LabelThresholds) -> tuple[str, tuple[int, int]]:
    """Two-class structure label for the image task."""
    if not np.isfinite(s):
        raise InvalidInputError(f"non-finite s: {s!r}")
    name = "crystal" if s > thresholds.s0 else "amorphous"
    return name, STRUCTURE_ONE_HOT[name]


def measure_trajectory(trajectory: Trajectory, thresholds: LabelThresholds,
                       warmup_iterations: int = 1000) -> OrderParams:
    """Warm-up-excluded order parameters and label for one recorded run."""
    tail = trajectory.after_iteration(warmup_iterations)
    if tail.n_snapshots < 2:
        raise InvalidInputError("trajectory too short after warm-up exclusion")
    rdf = compute_rdf(tail.positions, trajectory.params.box_l,
                      bin_width=thresholds.rdf_bin_width, r_max=thresholds.rdf_r_max)
    s = compute_sdrdf(rdf, thresholds)
    v_bar = compute_mean_velocity(tail)
    return classify_phase(s, v_bar, thresholds)


def frame_displacements(positions: np.ndarray, box_l: float) -> np.ndarray:
    """Per-frame displacements recovered from wrapped snapshot positions.

    Valid when no particle moves more than box_l/2 between snapshots, which
    holds at any physical drive in this model.
    """
    return minimum_image(np.diff(positions, axis=0), box_l)


def mean_velocity_from_wrapped(positions: np.ndarray, box_l: float) -> float:
    """Transport speed per video second from wrapped snapshot positions."""
    if positions.shape[0] < 2:
        raise InvalidInputError("mean velocity needs >= 2 snapshots")
    du = frame_displacements(positions, box_l)
    return float(np.linalg.norm(du.mean(axis=1), axis=-1).mean() * VIDEO_FPS)


def write_report(rows: list[dict], thresholds: LabelThresholds, path) -> None:
    """Order-parameter report: CSV plus a JSON sidecar with the constants."""
    path = Path(path)
    fields = ["run_id", "seed", "f_p", "f_d", "s", "v_bar", "label"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in fields})
    sidecar = {
        "constants": thresholds.to_dict(),
        "columns": fields,
    }
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value
