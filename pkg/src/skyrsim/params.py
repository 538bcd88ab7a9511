"""Model parameters and labeling thresholds.

All quantities are in reduced simulation units: forces in units of
F0 ~ 1e-5 N/m, lengths in units of l0 ~ 10 nm (documentation constants,
never used numerically). One recorded frame spans ``record_stride``
iterations and plays back at 30 frames per second, which defines the
"video second" used by the mean-velocity threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .errors import ParameterError

MAGNUS_RATIO = 9.962

UNIT_FORCE_NOTE = "F0 ~ 1e-5 N/m"
UNIT_LENGTH_NOTE = "l0 ~ 10 nm"

VIDEO_FPS = 30

PIN_MODELS = ("harmonic", "exponential")

# Exponential wells are truncated where the force tail is negligible.
EXP_PIN_REACH_FACTOR = 6.0


def derive_damping(magnus_ratio: float) -> tuple[float, float]:
    """Damping pair (alpha_d, alpha_m) with alpha_d^2 + alpha_m^2 = 1.

    alpha_d = 1/sqrt(1 + ratio^2), alpha_m = ratio * alpha_d.
    """
    if not math.isfinite(magnus_ratio) or magnus_ratio < 0:
        raise ParameterError(f"magnus ratio must be finite and >= 0, got {magnus_ratio!r}")
    alpha_d = 1.0 / math.sqrt(1.0 + magnus_ratio * magnus_ratio)
    return alpha_d, magnus_ratio * alpha_d


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical constants of the equation of motion."""

    alpha_d: float
    alpha_m: float
    magnus_ratio: float
    f_p: float = 0.0
    f_d: float = 0.0
    f_s0: float = 1.0
    xi_s: float = 3.0
    pin_radius: float = 0.3
    box_l: float = 36.0
    rho_s: float = 0.1
    rho_p: float = 0.3
    dt: float = 0.05
    r_cut: float = 18.0
    pin_model: str = "exponential"

    def __post_init__(self):
        a2 = self.alpha_d * self.alpha_d + self.alpha_m * self.alpha_m
        if abs(a2 - 1.0) > 1e-12:
            raise ParameterError(f"alpha_d^2 + alpha_m^2 = {a2!r}, must be 1 within 1e-12")
        if self.alpha_d <= 0:
            raise ParameterError("alpha_d must be positive")
        if abs(self.alpha_m / self.alpha_d - self.magnus_ratio) > 1e-9:
            raise ParameterError("alpha_m/alpha_d inconsistent with magnus_ratio")
        if not self.box_l > 0:
            raise ParameterError("box_l must be positive")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if not 0 < self.r_cut <= self.box_l / 2:
            raise ParameterError("r_cut must satisfy 0 < r_cut <= box_l/2")
        if self.f_p < 0 or self.f_d < 0:
            raise ParameterError("f_p and f_d must be >= 0")
        if self.f_s0 <= 0 or self.xi_s <= 0 or self.pin_radius <= 0:
            raise ParameterError("f_s0, xi_s, pin_radius must be positive")
        if self.rho_s <= 0 or self.rho_p < 0:
            raise ParameterError("rho_s must be > 0 and rho_p >= 0")
        if self.pin_model not in PIN_MODELS:
            raise ParameterError(f"pin_model must be one of {PIN_MODELS}")

    @classmethod
    def create(cls, magnus_ratio: float = MAGNUS_RATIO, **kwargs) -> "ModelParams":
        """Construct with the damping pair derived from the Magnus ratio."""
        alpha_d, alpha_m = derive_damping(magnus_ratio)
        return cls(alpha_d=alpha_d, alpha_m=alpha_m, magnus_ratio=magnus_ratio, **kwargs)

    @property
    def n_skyrmions(self) -> int:
        return int(math.floor(self.rho_s * self.box_l * self.box_l))

    @property
    def n_pins(self) -> int:
        return int(math.floor(self.rho_p * self.box_l * self.box_l))

    @property
    def hall_angle(self) -> float:
        """Signed angle (radians) from force to velocity: -arctan(alpha_m/alpha_d)."""
        return -math.atan2(self.alpha_m, self.alpha_d)

    def replace(self, **kwargs) -> "ModelParams":
        d = asdict(self)
        if "magnus_ratio" in kwargs and "alpha_d" not in kwargs:
            alpha_d, alpha_m = derive_damping(kwargs["magnus_ratio"])
            kwargs = {**kwargs, "alpha_d": alpha_d, "alpha_m": alpha_m}
        d.update(kwargs)
        return ModelParams(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LabelThresholds:
    """Critical values and RDF binning used to label phases.

    s0 and v0 are the published critical values; the binning constants
    were fixed by the calibration described in the README.
    """

    s0: float = 0.4
    v0: float = 0.0014
    sdrdf_r_start: float = 7.5
    rdf_bin_width: float = 0.1
    rdf_r_max: float = 12.0

    def __post_init__(self):
        if not (self.s0 > 0 and self.v0 > 0):
            raise ParameterError("s0 and v0 must be positive")
        if not (0 < self.rdf_bin_width and 0 < self.sdrdf_r_start < self.rdf_r_max):
            raise ParameterError("require 0 < bin_width and 0 < r_start < r_max")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RunProtocol:
    """Integration protocol: relaxation pre-roll, recorded run, warm-up.

    The pre-roll relaxes the random initial configuration to force balance
    with the drive off (plain downhill dynamics, no Magnus rotation) before
    the recorded run; its iterations are not part of the trajectory.
    ``warmup_iterations`` of the recorded run are excluded from
    order-parameter measurement but still rendered in videos.
    """

    n_iter: int = 4000
    record_stride: int = 15
    warmup_iterations: int = 1000
    relax_iterations: int = 20000
    relax_dt: float = 0.2
    relax_force_tol: float = 1e-4

    def __post_init__(self):
        if self.n_iter < self.record_stride or self.record_stride < 1:
            raise ParameterError("require n_iter >= record_stride >= 1")
        if self.warmup_iterations < 0 or self.warmup_iterations >= self.n_iter:
            raise ParameterError("warmup_iterations must lie in [0, n_iter)")
        if self.relax_iterations < 0 or self.relax_dt <= 0 or self.relax_force_tol <= 0:
            raise ParameterError("invalid relaxation settings")

    def to_dict(self) -> dict:
        return asdict(self)
