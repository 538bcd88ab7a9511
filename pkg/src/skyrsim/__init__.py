"""Particle-based skyrmion dynamics: phases, order parameters, datasets."""

__version__ = "0.1.0"

from .params import (  # noqa: F401
    MAGNUS_RATIO,
    VIDEO_FPS,
    LabelThresholds,
    ModelParams,
    RunProtocol,
    derive_damping,
)
from .bessel import bessel_k1  # noqa: F401
from .dynamics import (  # noqa: F401
    ForceField,
    PinningLandscape,
    SeededRun,
    SkyrmionState,
    Trajectory,
    init_system,
    minimum_image,
    pair_force,
    pinning_force,
    relax,
    run_trajectory,
    solve_velocity,
    step,
    total_force,
)
from .order import (  # noqa: F401
    OrderParams,
    PhaseLabel,
    RdfHistogram,
    classify_phase,
    classify_structure,
    compute_mean_velocity,
    compute_rdf,
    compute_sdrdf,
    measure_trajectory,
)
from .sweep import PhaseDiagram, SweepSpec, extract_boundary, render_diagram, run_sweep  # noqa: F401
from .datasets import (  # noqa: F401
    ImageDatasetSpec,
    VideoClip,
    VideoDatasetSpec,
    build_image_dataset,
    build_video_dataset,
    class_quotas,
    make_clip,
    render_frame,
)
