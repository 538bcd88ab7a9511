"""Classifiers and bottleneck parameter visualization for phase datasets."""

__version__ = "0.1.0"

from .archs import ArchitectureSpec, add_bottleneck, build_model, first_conv_feature_maps  # noqa: F401
from .data import load_split, read_manifest, read_params_csv, read_raw_tensor  # noqa: F401
from .experiments import neuron_count_experiment, experiment_summary, per_class_recall  # noqa: F401
from .probe import (  # noqa: F401
    CorrelationReport,
    ProbeTable,
    SigmoidFit,
    correlation_report,
    fit_critical_value,
    fit_sigmoid,
    probe,
)
from .train import TrainReport, evaluate, predict_diagram, softmax_probabilities, train  # noqa: F401
