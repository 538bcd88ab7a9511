"""Neuron-count and training-distribution experiments on the 3D classifier.

For each bottleneck width n: five training sessions, best-of-5 selection,
probe against the stored order parameters, neuron classification, redundancy
detection, and per-class recall (which exposes the discarded-minority-class
effect on uneven training data).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .archs import ArchitectureSpec, add_bottleneck
from .data import SplitData, VIDEO_CLASSES
from .probe import CorrelationReport, ProbeTable, correlation_report, probe
from .train import TrainReport, evaluate, train


@dataclass
class NeuronCountResult:
    n: int
    report: TrainReport
    val_accuracy: float
    per_class_recall: dict[str, float]
    correlation: CorrelationReport
    probe_table: ProbeTable


@dataclass
class NeuronCountExperiment:
    distribution: str
    results: dict[int, NeuronCountResult] = field(default_factory=dict)

    def accuracy_drop(self, n_small: int, n_big: int) -> float:
        return (self.results[n_big].val_accuracy
                - self.results[n_small].val_accuracy)


def per_class_recall(model, data: SplitData) -> dict[str, float]:
    _, pred = evaluate(model, data.x_val, data.y_val)
    out = {}
    for idx, name in enumerate(VIDEO_CLASSES):
        mask = data.y_val == idx
        out[name] = float((pred[mask] == idx).mean()) if mask.any() else float("nan")
    return out


def neuron_count_experiment(train_data: SplitData, probe_data: SplitData,
                            ns=(1, 2, 3, 4), distribution: str = "balanced",
                            sessions: int = 5, seed: int = 0, epochs: int = 10,
                            checkpoint_dir=None) -> NeuronCountExperiment:
    exp = NeuronCountExperiment(distribution=distribution)
    base = ArchitectureSpec("cnn3d")
    for n in ns:
        spec = add_bottleneck(base, n)
        ckpt = None if checkpoint_dir is None else f"{checkpoint_dir}/n{n}"
        report, model = train(spec, train_data, sessions=sessions,
                              seed=seed + 101 * n, epochs=epochs,
                              checkpoint_dir=ckpt)
        table = probe(model, probe_data)
        exp.results[n] = NeuronCountResult(
            n=n,
            report=report,
            val_accuracy=report.best_val_accuracy,
            per_class_recall=per_class_recall(model, train_data),
            correlation=correlation_report(table),
            probe_table=table,
        )
    return exp


def experiment_summary(exp: NeuronCountExperiment) -> dict:
    out = {"distribution": exp.distribution, "per_n": {}}
    for n, res in sorted(exp.results.items()):
        out["per_n"][n] = {
            "val_accuracy": res.val_accuracy,
            "session_val_accuracy": res.report.session_val_accuracy,
            "per_class_recall": res.per_class_recall,
            "neuron_kinds": res.correlation.kinds(),
            "redundant_pairs": res.correlation.redundant_pairs,
            "critical_s": [nr.fit_s.b for nr in res.correlation.neurons],
            "critical_v_log10": [nr.fit_v.b for nr in res.correlation.neurons],
        }
    return out
