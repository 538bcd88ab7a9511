"""Overdamped Magnus dynamics of repulsive particles over quenched traps.

Equation of motion per particle: alpha_d*v + alpha_m*(z x v) = F, with
F the sum of K1-repulsion from other particles (minimum image, cutoff
r_cut), the trap force, and a constant drive along +x. With
alpha_d^2 + alpha_m^2 = 1 the velocity response is a pure rotation of the
total force by the Hall angle, so |v| = |F| exactly.

Integration is synchronous explicit Euler from the pre-step configuration.
`relax` runs drive-free downhill dynamics (no Magnus rotation) to prepare a
force-balanced initial state; it shares the force field and fixed points
with the recorded run but is not part of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import k1 as _k1

from . import _kernels
from .errors import (
    InstabilityError,
    ParameterError,
    PlacementError,
    SingularConfigurationError,
)
from .params import EXP_PIN_REACH_FACTOR, ModelParams

COINCIDENCE_GUARD = 1e-9
INIT_MIN_SEP_FACTOR = 0.05  # of xi_s


@dataclass
class SkyrmionState:
    """Wrapped positions plus cumulative true displacements at one time."""

    positions: np.ndarray  # (N, 2) in [0, box_l)
    unwrapped: np.ndarray  # (N, 2)
    iteration: int = 0

    def copy(self) -> "SkyrmionState":
        return SkyrmionState(self.positions.copy(), self.unwrapped.copy(), self.iteration)


@dataclass
class PinningLandscape:
    """Non-overlapping trap centers with a common radius and strength."""

    centers: np.ndarray  # (N_p, 2) in [0, box_l)
    radius: float
    strength: float
    box_l: float
    model: str = "exponential"


@dataclass(frozen=True)
class SeededRun:
    """A reproducible run: identical (seed, params) give identical trajectories."""

    seed: int
    params: ModelParams


@dataclass
class Trajectory:
    """Snapshots of one recorded run, stride iterations apart."""

    positions: np.ndarray  # (S, N, 2)
    unwrapped: np.ndarray  # (S, N, 2)
    iterations: np.ndarray  # (S,)
    params: ModelParams
    seed: int
    record_stride: int

    @property
    def n_snapshots(self) -> int:
        return self.positions.shape[0]

    @property
    def n_particles(self) -> int:
        return self.positions.shape[1]

    def after_iteration(self, iteration: int) -> "Trajectory":
        """Sub-trajectory with snapshots strictly beyond `iteration`."""
        keep = self.iterations > iteration
        return Trajectory(
            self.positions[keep],
            self.unwrapped[keep],
            self.iterations[keep],
            self.params,
            self.seed,
            self.record_stride,
        )


def minimum_image(delta: np.ndarray, box_l: float) -> np.ndarray:
    """Map displacement components into [-box_l/2, box_l/2]."""
    return delta - box_l * np.round(delta / box_l)


def solve_velocity(f_total: np.ndarray, params: ModelParams) -> np.ndarray:
    """Velocity solving alpha_d*v + alpha_m*(z x v) = F (a rotation of F)."""
    f = np.asarray(f_total, dtype=float)
    v = np.empty_like(f)
    fx, fy = f[..., 0], f[..., 1]
    v[..., 0] = params.alpha_d * fx + params.alpha_m * fy
    v[..., 1] = -params.alpha_m * fx + params.alpha_d * fy
    return v


def pair_force(r_i, r_j, params: ModelParams) -> np.ndarray:
    """Repulsion on particle i from particle j: f_s0*K1(R/xi_s) along r_ij."""
    d = minimum_image(np.asarray(r_i, dtype=float) - np.asarray(r_j, dtype=float), params.box_l)
    r = float(np.hypot(d[0], d[1]))
    if r < COINCIDENCE_GUARD:
        raise SingularConfigurationError(f"pair separation {r!r} below coincidence guard")
    if r > params.r_cut:
        return np.zeros(2)
    return (params.f_s0 * float(_k1(r / params.xi_s)) / r) * d


def pinning_force(r, landscape: PinningLandscape) -> np.ndarray:
    """Trap force at position r.

    harmonic: linear ramp toward the nearest center, max `strength` at the
    trap edge, zero outside (non-overlap means at most one trap acts).
    exponential: smooth well strength*(d/radius)*exp(1 - d/radius) toward
    each center within EXP_PIN_REACH_FACTOR*radius, superposed.
    """
    if landscape.strength == 0.0 or len(landscape.centers) == 0:
        return np.zeros(2)
    r = np.asarray(r, dtype=float)
    d = minimum_image(landscape.centers - r, landscape.box_l)
    dist = np.hypot(d[:, 0], d[:, 1])
    if landscape.model == "harmonic":
        j = int(np.argmin(dist))
        if dist[j] >= landscape.radius:
            return np.zeros(2)
        return (landscape.strength / landscape.radius) * d[j]
    w = np.zeros_like(dist)
    sel = dist <= EXP_PIN_REACH_FACTOR * landscape.radius
    w[sel] = (landscape.strength * np.e / landscape.radius) * np.exp(-dist[sel] / landscape.radius)
    return w @ d


class _PinGrid:
    """Static trap lookup: padded candidate lists per cell of size >= reach."""

    def __init__(self, centers: np.ndarray, box_l: float, reach: float):
        nc = max(int(box_l // reach), 1)
        self.nc = nc
        self.cell = box_l / nc
        self.box_l = box_l
        buckets: list[list[int]] = [[] for _ in range(nc * nc)]
        ix = (centers[:, 0] // self.cell).astype(int) % nc
        iy = (centers[:, 1] // self.cell).astype(int) % nc
        for t in range(len(centers)):
            for ox in (-1, 0, 1):
                for oy in (-1, 0, 1):
                    buckets[((ix[t] + ox) % nc) * nc + (iy[t] + oy) % nc].append(t)
        kmax = max((len(b) for b in buckets), default=1) or 1
        self.idx = np.zeros((nc * nc, kmax), dtype=np.int64)
        self.valid = np.zeros((nc * nc, kmax), dtype=bool)
        for c, b in enumerate(buckets):
            self.idx[c, : len(b)] = b
            self.valid[c, : len(b)] = True
        self.centers = centers

    def displacements(self, positions: np.ndarray):
        """(dv, dist, valid) to candidate traps for each position."""
        cx = (positions[:, 0] // self.cell).astype(int) % self.nc
        cy = (positions[:, 1] // self.cell).astype(int) % self.nc
        c = cx * self.nc + cy
        cand = self.idx[c]
        ok = self.valid[c]
        dv = self.centers[cand] - positions[:, None, :]
        dv -= self.box_l * np.round(dv / self.box_l)
        dist = np.hypot(dv[..., 0], dv[..., 1])
        return dv, dist, ok


def _cell_list_pairs(positions: np.ndarray, box_l: float, r_cut: float):
    """Candidate pair indices (i, j) via a periodic cell list.

    Cells have size >= r_cut/3; each unordered cell pair is visited once.
    Only valid when the neighborhood stencil does not wrap onto itself,
    which `ForceField` guarantees before choosing this path.
    """
    nc = int(box_l // (r_cut / 3))
    size = box_l / nc
    m = int(np.ceil(r_cut / size))
    ix = (positions[:, 0] // size).astype(int) % nc
    iy = (positions[:, 1] // size).astype(int) % nc
    cid = ix * nc + iy
    order = np.argsort(cid, kind="stable")
    sorted_cid = cid[order]
    bounds = np.searchsorted(sorted_cid, np.arange(nc * nc + 1))
    members = [order[bounds[c]: bounds[c + 1]] for c in range(nc * nc)]

    half = [(dx, dy) for dx in range(0, m + 1) for dy in range(-m, m + 1)
            if dx > 0 or dy > 0]
    out_i, out_j = [], []
    for cx in range(nc):
        for cy in range(nc):
            a = members[cx * nc + cy]
            if a.size == 0:
                continue
            if a.size > 1:
                ii, jj = np.triu_indices(a.size, 1)
                out_i.append(a[ii])
                out_j.append(a[jj])
            for dx, dy in half:
                b = members[((cx + dx) % nc) * nc + (cy + dy) % nc]
                if b.size == 0:
                    continue
                out_i.append(np.repeat(a, b.size))
                out_j.append(np.tile(b, a.size))
    if not out_i:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(out_i), np.concatenate(out_j)


class ForceField:
    """Prepared evaluator of total forces for one (landscape, params) pair.

    Pair interactions use a dense all-pairs sweep when the cutoff
    neighborhood covers the whole box (the paper geometry: r_cut = box_l/2),
    and a periodic cell list with cell size >= r_cut/3 otherwise.
    """

    def __init__(self, landscape: PinningLandscape, params: ModelParams, n: int | None = None):
        self.landscape = landscape
        self.params = params
        n = params.n_skyrmions if n is None else n
        self._n = n
        nc = max(int(params.box_l // (params.r_cut / 3)), 1)
        m = int(np.ceil(params.r_cut / (params.box_l / nc)))
        self._use_cells = nc > 2 * m
        if not self._use_cells:
            self._iu, self._ju = np.triu_indices(n, 1)
        if landscape.strength > 0 and len(landscape.centers) > 0:
            reach = (
                landscape.radius
                if landscape.model == "harmonic"
                else EXP_PIN_REACH_FACTOR * landscape.radius
            )
            self._pins = _PinGrid(landscape.centers, params.box_l, reach)
            self._reach = reach
        else:
            self._pins = None

    def total(self, positions: np.ndarray, f_d: float | None = None) -> np.ndarray:
        """Total force on every particle (pair + pinning + drive)."""
        p = self.params
        n = self._n
        f_d = p.f_d if f_d is None else f_d
        if self._use_cells:
            iu, ju = _cell_list_pairs(positions, p.box_l, p.r_cut)
        else:
            iu, ju = self._iu, self._ju
        dx = positions[iu, 0] - positions[ju, 0]
        dy = positions[iu, 1] - positions[ju, 1]
        dx -= p.box_l * np.round(dx / p.box_l)
        dy -= p.box_l * np.round(dy / p.box_l)
        r2 = dx * dx + dy * dy
        if r2.size and r2.min() < COINCIDENCE_GUARD**2:
            raise SingularConfigurationError("coincident particles in force evaluation")
        w = np.zeros_like(r2)
        sel = r2 <= p.r_cut * p.r_cut
        rs = np.sqrt(r2[sel])
        w[sel] = p.f_s0 * _k1(rs / p.xi_s) / rs
        fx = w * dx
        fy = w * dy
        out = np.empty((n, 2))
        out[:, 0] = np.bincount(iu, fx, n) - np.bincount(ju, fx, n) + f_d
        out[:, 1] = np.bincount(iu, fy, n) - np.bincount(ju, fy, n)
        if self._pins is not None:
            lnd = self.landscape
            dv, dist, ok = self._pins.displacements(positions)
            if lnd.model == "harmonic":
                wp = np.where(ok & (dist < lnd.radius), lnd.strength / lnd.radius, 0.0)
            else:
                wp = np.where(
                    ok & (dist <= self._reach),
                    (lnd.strength * np.e / lnd.radius) * np.exp(-dist / lnd.radius),
                    0.0,
                )
            out += np.einsum("nk,nkc->nc", wp, dv)
        return out


class Engine:
    """Packed arrays driving the numba hot loops for one (landscape, params).

    The pair weight f_s0*K1(r/xi_s)/r is tabulated on a uniform grid from
    W_TABLE_R0 to r_cut; closer approaches clamp to the first table entry
    (they only occur in the initial transient).
    """

    W_TABLE_R0 = 0.02
    W_TABLE_N = 24576

    def __init__(self, landscape: PinningLandscape, params: ModelParams):
        self.params = params
        self.landscape = landscape
        r = np.linspace(self.W_TABLE_R0, params.r_cut, self.W_TABLE_N)
        self.w_table = params.f_s0 * _k1(r / params.xi_s) / r
        self.w_r0 = self.W_TABLE_R0
        self.w_inv_h = (self.W_TABLE_N - 1) / (params.r_cut - self.W_TABLE_R0)
        if landscape.strength > 0 and len(landscape.centers) > 0:
            if landscape.model == "harmonic":
                self.pin_mode = _kernels.PIN_HARMONIC
                reach = landscape.radius
                self.pin_w = landscape.strength / landscape.radius
            else:
                self.pin_mode = _kernels.PIN_EXPONENTIAL
                reach = EXP_PIN_REACH_FACTOR * landscape.radius
                self.pin_w = landscape.strength * np.e / landscape.radius
            grid = _PinGrid(landscape.centers, params.box_l, reach)
            self.pin_centers = landscape.centers
            self.pin_idx = grid.idx
            self.pin_valid = grid.valid
            self.pin_cell = grid.cell
            self.pin_nc = grid.nc
            self.pin_reach = reach
        else:
            self.pin_mode = _kernels.PIN_NONE
            self.pin_centers = np.zeros((1, 2))
            self.pin_idx = np.zeros((1, 1), dtype=np.int64)
            self.pin_valid = np.zeros((1, 1), dtype=bool)
            self.pin_cell = params.box_l
            self.pin_nc = 1
            self.pin_reach = 0.0
            self.pin_w = 0.0

    def _args(self):
        p = self.params
        return (p.box_l, p.r_cut * p.r_cut, self.w_table, self.w_r0, self.w_inv_h)

    def relax(self, positions: np.ndarray, iterations: int, dt: float,
              force_tol: float) -> int:
        """Relax positions in place; returns steps taken."""
        box_l, r_cut2, w_table, w_r0, w_inv_h = self._args()
        status, steps = _kernels.relax_kernel(
            positions, box_l, r_cut2, w_table, w_r0, w_inv_h,
            self.pin_mode, self.pin_centers, self.pin_idx, self.pin_valid,
            self.pin_cell, self.pin_nc, self.pin_w,
            self.landscape.radius, self.pin_reach,
            iterations, dt, force_tol)
        if status == _kernels.SINGULAR:
            raise SingularConfigurationError("coincident particles during relaxation")
        return steps

    def advance(self, positions: np.ndarray, unwrapped: np.ndarray,
                n_iter: int, record_stride: int, out_pos, out_unw, out_iter) -> None:
        """Integrate in place, recording snapshots into the out arrays."""
        p = self.params
        box_l, r_cut2, w_table, w_r0, w_inv_h = self._args()
        status, it = _kernels.advance_kernel(
            positions, unwrapped, box_l, r_cut2, w_table, w_r0, w_inv_h, p.f_d,
            self.pin_mode, self.pin_centers, self.pin_idx, self.pin_valid,
            self.pin_cell, self.pin_nc, self.pin_w,
            self.landscape.radius, self.pin_reach,
            p.alpha_d, p.alpha_m, p.dt, n_iter, record_stride,
            out_pos, out_unw, out_iter)
        if status == _kernels.SINGULAR:
            raise SingularConfigurationError(f"coincident particles at iteration {it}")
        if status == _kernels.UNSTABLE:
            raise InstabilityError(f"step displacement exceeded box_l/4 at iteration {it}")


def total_force(i: int, state: SkyrmionState, landscape: PinningLandscape,
                params: ModelParams) -> np.ndarray:
    """Total force on particle i (pair sum within r_cut, pinning, drive)."""
    pos = state.positions
    d = minimum_image(pos[i] - pos, params.box_l)
    r = np.hypot(d[:, 0], d[:, 1])
    r[i] = np.inf
    if r.min() < COINCIDENCE_GUARD:
        raise SingularConfigurationError("coincident particles in force evaluation")
    sel = r <= params.r_cut
    w = np.zeros_like(r)
    w[sel] = params.f_s0 * _k1(r[sel] / params.xi_s) / r[sel]
    f = (w[:, None] * d).sum(axis=0)
    f += pinning_force(pos[i], landscape)
    f[0] += params.f_d
    return f


def step(state: SkyrmionState, landscape: PinningLandscape, params: ModelParams,
         field: ForceField | None = None) -> SkyrmionState:
    """One synchronous Euler step; wraps positions, accumulates unwrapped."""
    if field is None:
        field = ForceField(landscape, params, n=len(state.positions))
    forces = field.total(state.positions)
    v = solve_velocity(forces, params)
    disp = v * params.dt
    if np.abs(disp).max(initial=0.0) > params.box_l / 4:
        raise InstabilityError(
            f"step displacement exceeded box_l/4 at iteration {state.iteration}; dt too large"
        )
    return SkyrmionState(
        positions=np.mod(state.positions + disp, params.box_l),
        unwrapped=state.unwrapped + disp,
        iteration=state.iteration + 1,
    )


def init_system(run: SeededRun, max_attempts: int = 200_000) -> tuple[SkyrmionState, PinningLandscape]:
    """Seeded random initial condition: non-overlapping traps, spread particles.

    All randomness comes from one PCG64 stream keyed by run.seed, so the
    result is bitwise reproducible across platforms and worker counts.
    """
    p = run.params
    rng = np.random.default_rng(np.random.SeedSequence(run.seed))
    n_p, n_s = p.n_pins, p.n_skyrmions

    centers = np.empty((n_p, 2))
    placed = 0
    attempts = 0
    min_d2 = (2 * p.pin_radius) ** 2
    while placed < n_p:
        if attempts >= max_attempts:
            raise PlacementError(f"could not place {n_p} traps in {max_attempts} attempts")
        attempts += 1
        c = rng.uniform(0.0, p.box_l, 2)
        if placed:
            d = minimum_image(centers[:placed] - c, p.box_l)
            if (d * d).sum(axis=1).min() < min_d2:
                continue
        centers[placed] = c
        placed += 1

    landscape = PinningLandscape(centers=centers, radius=p.pin_radius,
                                 strength=p.f_p, box_l=p.box_l, model=p.pin_model)

    pos = rng.uniform(0.0, p.box_l, (n_s, 2))
    min_sep = INIT_MIN_SEP_FACTOR * p.xi_s
    for _ in range(1000):
        d = pos[:, None, :] - pos[None, :, :]
        d = minimum_image(d, p.box_l)
        r2 = (d * d).sum(axis=-1)
        np.fill_diagonal(r2, np.inf)
        bad_i, bad_j = np.nonzero(r2 < min_sep * min_sep)
        redraw = np.unique(bad_j[bad_j > bad_i])
        if redraw.size == 0:
            break
        pos[redraw] = rng.uniform(0.0, p.box_l, (redraw.size, 2))
    else:
        raise PlacementError("could not separate skyrmions beyond the coincidence floor")

    state = SkyrmionState(positions=pos, unwrapped=pos.copy(), iteration=0)
    return state, landscape


def relax(state: SkyrmionState, landscape: PinningLandscape, params: ModelParams,
          iterations: int = 20000, dt: float = 0.2, force_tol: float = 1e-4,
          engine: Engine | None = None) -> SkyrmionState:
    """Drive-free downhill relaxation toward force balance.

    Plain x += F*dt (no Magnus rotation): same fixed points as the full
    dynamics, ~1/alpha_d faster convergence per unit time. Stops early when
    the largest force component falls below force_tol. Returns a state with
    iteration 0 and unwrapped displacements reset to zero.
    """
    if engine is None:
        engine = Engine(landscape, params)
    pos = state.positions.copy()
    engine.relax(pos, iterations, dt, force_tol)
    return SkyrmionState(positions=pos, unwrapped=pos.copy(), iteration=0)


def run_trajectory(run: SeededRun, n_iter: int = 4000, record_stride: int = 15,
                   relax_iterations: int = 20000, relax_dt: float = 0.2,
                   relax_force_tol: float = 1e-4) -> Trajectory:
    """Integrate a seeded run and record a snapshot every record_stride steps.

    The random initial condition is first relaxed to force balance with the
    drive off (see `relax`), then the drive is switched on for the recorded
    n_iter iterations.
    """
    if not (n_iter >= record_stride >= 1):
        raise ParameterError("require n_iter >= record_stride >= 1")
    p = run.params
    state, landscape = init_system(run)
    engine = Engine(landscape, p)
    if relax_iterations > 0:
        state = relax(state, landscape, p, iterations=relax_iterations,
                      dt=relax_dt, force_tol=relax_force_tol, engine=engine)

    n_snap = n_iter // record_stride
    n = p.n_skyrmions
    positions = np.empty((n_snap, n, 2))
    unwrapped = np.empty((n_snap, n, 2))
    iterations = np.empty(n_snap, dtype=np.int64)

    pos = state.positions.copy()
    unw = state.unwrapped.copy()
    engine.advance(pos, unw, n_iter, record_stride, positions, unwrapped, iterations)
    return Trajectory(positions=positions, unwrapped=unwrapped, iterations=iterations,
                      params=p, seed=run.seed, record_stride=record_stride)
