import numpy as np
import pytest

from skyrml.probe import (
    ProbeTable,
    correlation_report,
    fit_critical_value,
    fit_sigmoid,
)


def _sigmoid(x, k, b):
    return 1.0 / (1.0 + np.exp(-k * (x - b)))


def test_fit_recovers_step():
    rng = np.random.default_rng(0)
    xs = rng.uniform(0, 1, 400)
    ys = (xs > 0.4).astype(float)
    fit = fit_sigmoid(xs, ys)
    assert fit.converged
    assert abs(fit.b - 0.4) <= 1e-3
    assert abs(fit.k) > 100


def test_fit_recovers_synthetic_parameters():
    rng = np.random.default_rng(1)
    xs = rng.uniform(0, 1, 600)
    ys = _sigmoid(xs, 50.0, 0.37) + rng.normal(0, 0.02, xs.size)
    fit = fit_sigmoid(xs, ys)
    assert fit.converged
    assert abs(fit.k - 50.0) / 50.0 <= 0.10
    assert abs(fit.b - 0.37) <= 0.01


def test_fit_midpoint_identity():
    rng = np.random.default_rng(2)
    xs = rng.uniform(0, 2, 200)
    ys = _sigmoid(xs, 8.0, 1.1) + rng.normal(0, 0.05, xs.size)
    fit = fit_sigmoid(xs, ys)
    assert fit.converged
    assert float(fit.curve(fit.b)) == pytest.approx(0.5, abs=1e-12)


def test_fit_decreasing_sigmoid():
    rng = np.random.default_rng(3)
    xs = rng.uniform(0, 1, 300)
    ys = _sigmoid(xs, -30.0, 0.5) + rng.normal(0, 0.02, xs.size)
    fit = fit_sigmoid(xs, ys)
    assert fit.converged
    assert fit.k < 0
    assert abs(fit.b - 0.5) <= 0.02


def test_fit_degenerate_and_small_inputs():
    xs = np.linspace(0, 1, 50)
    flat = fit_sigmoid(xs, np.full(50, 0.7))
    assert not flat.converged
    with pytest.raises(ValueError):
        fit_sigmoid(xs[:10], xs[:10])
    with pytest.raises(ValueError):
        fit_sigmoid(xs, np.full(50, np.nan))


def _synthetic_table(n=500, seed=0, kinds=("spatial", "temporal", "flat")):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.05, 1.2, n)
    v = 10 ** rng.uniform(-5.5, -1.3, n)
    outputs = []
    for kind in kinds:
        if kind == "spatial":
            o = _sigmoid(s, 30, 0.4) + rng.normal(0, 0.03, n)
        elif kind == "temporal":
            o = _sigmoid(np.log10(v), 12, np.log10(0.0014)) + rng.normal(0, 0.03, n)
        elif kind == "mixed":
            # full-amplitude response to a combined spatiotemporal argument
            o = _sigmoid(6 * (s - 0.4) + 2 * (np.log10(v) + 2.85), 3, 0.0)
            o = o + rng.normal(0, 0.03, n)
        else:
            o = np.full(n, 0.5) + rng.normal(0, 0.01, n)
        outputs.append(np.clip(o, 0, 1))
    crystal = s > 0.4
    moving = v > 0.0014
    true = np.where(crystal, np.where(moving, 1, 0), np.where(moving, 3, 2))
    return ProbeTable(s=s, v_bar=v, true_label=true, predicted_label=true.copy(),
                      outputs=np.column_stack(outputs),
                      misclassified=np.zeros(n, dtype=bool))


def test_correlation_report_classifies_kinds():
    table = _synthetic_table()
    report = correlation_report(table)
    assert report.kinds() == ["spatial", "temporal", "flat"]
    assert report.neurons[0].fit_s.b == pytest.approx(0.4, abs=0.02)


def test_correlation_report_mixed_neuron():
    table = _synthetic_table(kinds=("mixed",))
    report = correlation_report(table)
    assert report.kinds() == ["mixed"]


def test_correlation_invariant_to_neuron_order():
    table = _synthetic_table()
    flipped = ProbeTable(table.s, table.v_bar, table.true_label,
                         table.predicted_label, table.outputs[:, ::-1].copy(),
                         table.misclassified)
    assert correlation_report(flipped).kinds() == ["flat", "temporal", "spatial"]


def test_redundant_pair_detection():
    table = _synthetic_table(kinds=("spatial", "spatial", "temporal"))
    report = correlation_report(table)
    assert (0, 1) in report.redundant_pairs
    assert (0, 2) not in report.redundant_pairs


def test_misclassified_rows_excluded_from_fits():
    table = _synthetic_table(n=300)
    table.misclassified[:150] = True
    kept = table.kept()
    assert len(kept.s) == 150
    assert not kept.misclassified.any()
    assert np.array_equal(kept.s, table.s[150:])
    fit = fit_critical_value(table, 0, "s")
    assert fit.converged


def test_probe_requires_bottleneck():
    import torch
    from skyrml import ArchitectureSpec, build_model
    from skyrml.data import SplitData
    from skyrml.probe import probe

    model = build_model(ArchitectureSpec("cnn"))
    data = SplitData(x=np.zeros((4, 36, 36), dtype=np.float32),
                     y=np.zeros(4, dtype=np.int64),
                     one_hot=np.zeros((4, 2), dtype=np.uint8),
                     train_count=2, params=[{}] * 4, classes=("a", "c"))
    with pytest.raises(ValueError):
        probe(model, data)


def test_probe_table_csv(tmp_path):
    table = _synthetic_table(n=40)
    path = tmp_path / "probe.csv"
    table.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "sample_id,s,v_bar,true_label,predicted_label,misclassified,o1,o2,o3"
    assert len(lines) == 41
