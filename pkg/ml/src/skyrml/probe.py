"""Bottleneck probing and the sigmoid-fit recovery of critical values.

The probe feeds labeled samples through a trained bottleneck model, records
the sigmoid-unit activations alongside each sample's stored order
parameters, flags misidentified samples (excluded from fits), fits
y = 1/(1 + exp(-k (x - b))) per neuron against each order parameter, and
classifies neurons as spatial, temporal, mixed, or flat from the fit R^2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import torch
from scipy.optimize import curve_fit

from .data import SplitData

R2_STRONG = 0.8
R2_WEAK = 0.2
R2_MIXED = 0.4
REDUNDANCY_CORRELATION = 0.95


@dataclass
class ProbeTable:
    """Per-sample bottleneck activations paired with order parameters."""

    s: np.ndarray
    v_bar: np.ndarray
    true_label: np.ndarray
    predicted_label: np.ndarray
    outputs: np.ndarray  # (n_samples, n_neurons) in [0, 1]
    misclassified: np.ndarray  # bool

    @property
    def n_neurons(self) -> int:
        return self.outputs.shape[1]

    def kept(self) -> "ProbeTable":
        """Rows with correct predictions (the fit population)."""
        keep = ~self.misclassified
        return ProbeTable(self.s[keep], self.v_bar[keep], self.true_label[keep],
                          self.predicted_label[keep], self.outputs[keep],
                          self.misclassified[keep])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["sample_id", "s", "v_bar", "true_label", "predicted_label",
                      "misclassified"]
            header += [f"o{i + 1}" for i in range(self.n_neurons)]
            writer.writerow(header)
            for k in range(len(self.s)):
                row = [k, repr(float(self.s[k])), repr(float(self.v_bar[k])),
                       int(self.true_label[k]), int(self.predicted_label[k]),
                       int(self.misclassified[k])]
                row += [repr(float(v)) for v in self.outputs[k]]
                writer.writerow(row)


@dataclass
class SigmoidFit:
    k: float
    b: float
    rmse: float
    converged: bool
    r_squared: float = 0.0

    @property
    def critical_value(self) -> float:
        return self.b

    def curve(self, x):
        return 1.0 / (1.0 + np.exp(-self.k * (np.asarray(x) - self.b)))


def probe(model, data: SplitData, batch_size: int = 256) -> ProbeTable:
    """Record bottleneck activations and predictions for every sample."""
    if getattr(model, "head", None) is None or model.head.bottleneck is None:
        raise ValueError("model has no bottleneck layer to probe")
    x = torch.from_numpy(data.x)
    outputs = []
    preds = []
    model.eval()
    with torch.no_grad():
        for i in range(0, len(x), batch_size):
            logits = model(x[i: i + batch_size])
            outputs.append(model.head.last_bottleneck.numpy().copy())
            preds.append(logits.argmax(dim=1).numpy())
    outputs = np.concatenate(outputs)
    preds = np.concatenate(preds)
    s = np.array([row["s"] for row in data.params])
    v_bar = np.array([row["v_bar"] for row in data.params])
    return ProbeTable(s=s, v_bar=v_bar, true_label=data.y.copy(),
                      predicted_label=preds, outputs=outputs,
                      misclassified=preds != data.y)


def fit_sigmoid(xs, ys) -> SigmoidFit:
    """Least-squares fit of the logistic curve; never silently defaults."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 20:
        raise ValueError("sigmoid fit needs at least 20 points")
    if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
        raise ValueError("sigmoid fit inputs must be finite")
    if np.ptp(ys) < 1e-6 or np.ptp(xs) == 0.0:
        return SigmoidFit(k=0.0, b=float(np.median(xs)), rmse=float(np.std(ys)),
                          converged=False)

    near_mid = np.abs(ys - 0.5) < 0.35
    b0 = float(np.median(xs[near_mid])) if near_mid.any() else float(np.median(xs))
    span = np.ptp(xs)
    sign = 1.0 if np.corrcoef(xs, ys)[0, 1] >= 0 else -1.0
    best = None
    for k0 in (sign * 4.0 / max(span, 1e-12), sign * 40.0 / max(span, 1e-12)):
        try:
            popt, _ = curve_fit(
                lambda x, k, b: 1.0 / (1.0 + np.exp(-np.clip(k * (x - b), -500, 500))),
                xs, ys, p0=(k0, b0), maxfev=20000)
        except RuntimeError:
            continue
        resid = ys - 1.0 / (1.0 + np.exp(-np.clip(popt[0] * (xs - popt[1]), -500, 500)))
        rmse = float(np.sqrt(np.mean(resid**2)))
        if best is None or rmse < best[1]:
            best = (popt, rmse)
    if best is None:
        return SigmoidFit(k=0.0, b=b0, rmse=float("inf"), converged=False)
    (k, b), rmse = best
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ys - SigmoidFit(k, b, 0, True).curve(xs)) ** 2)) / ss_tot \
        if ss_tot > 0 else 0.0
    return SigmoidFit(k=float(k), b=float(b), rmse=rmse, converged=True,
                      r_squared=max(r2, 0.0))


@dataclass
class NeuronReport:
    index: int
    kind: str  # spatial | temporal | mixed | flat
    fit_s: SigmoidFit
    fit_v: SigmoidFit


@dataclass
class CorrelationReport:
    neurons: list[NeuronReport]
    redundant_pairs: list[tuple[int, int]] = field(default_factory=list)

    def kinds(self) -> list[str]:
        return [n.kind for n in self.neurons]


def _classify_neuron(r2_s: float, r2_v: float) -> str:
    if r2_s >= R2_STRONG and r2_v <= R2_WEAK:
        return "spatial"
    if r2_v >= R2_STRONG and r2_s <= R2_WEAK:
        return "temporal"
    if r2_s >= R2_MIXED and r2_v >= R2_MIXED:
        return "mixed"
    return "flat"


def correlation_report(table: ProbeTable) -> CorrelationReport:
    """Classify each neuron by its sigmoid-fit R^2 against S and v_bar.

    Fits use only correctly classified rows. v_bar is fitted on a log axis
    (the moving/pinned threshold spans decades). Classification is invariant
    to neuron order; redundancy is flagged for output correlation > 0.95.
    """
    kept = table.kept()
    if len(kept.s) < 20:
        raise ValueError("not enough correctly classified rows to fit")
    log_v = np.log10(np.maximum(kept.v_bar, 1e-8))
    neurons = []
    for i in range(kept.n_neurons):
        fit_s = fit_sigmoid(kept.s, kept.outputs[:, i])
        fit_v = fit_sigmoid(log_v, kept.outputs[:, i])
        r2_s = fit_s.r_squared if fit_s.converged else 0.0
        r2_v = fit_v.r_squared if fit_v.converged else 0.0
        neurons.append(NeuronReport(index=i, kind=_classify_neuron(r2_s, r2_v),
                                    fit_s=fit_s, fit_v=fit_v))
    pairs = []
    for i in range(kept.n_neurons):
        for j in range(i + 1, kept.n_neurons):
            a, b = kept.outputs[:, i], kept.outputs[:, j]
            if a.std() < 1e-9 or b.std() < 1e-9:
                continue
            if np.corrcoef(a, b)[0, 1] > REDUNDANCY_CORRELATION:
                pairs.append((i, j))
    return CorrelationReport(neurons=neurons, redundant_pairs=pairs)


def fit_critical_value(table: ProbeTable, neuron: int, which: str) -> SigmoidFit:
    """Fit one neuron's output against an order parameter on linear axes.

    which: "s" or "v_bar". Misclassified rows are excluded.
    """
    kept = table.kept()
    xs = kept.s if which == "s" else kept.v_bar
    return fit_sigmoid(xs, kept.outputs[:, neuron])
