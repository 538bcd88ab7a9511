"""Scatter and feature-map figures for the probing pipeline."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import torch

from .archs import first_conv_feature_maps
from .probe import ProbeTable, SigmoidFit

_META = {"Software": "skyrml"}


def scatter_output_vs_parameter(table: ProbeTable, neuron: int, which: str,
                                path, fit: SigmoidFit | None = None,
                                threshold: float | None = None) -> None:
    """Neuron output against one order parameter, with the fitted curve."""
    kept = table.kept()
    xs = kept.s if which == "s" else kept.v_bar
    ys = kept.outputs[:, neuron]
    fig, ax = plt.subplots(figsize=(5, 3.6), dpi=130)
    ax.scatter(xs, ys, s=8, c="#1f77b4", alpha=0.6, edgecolors="none")
    if fit is not None and fit.converged:
        grid = np.linspace(xs.min(), xs.max(), 400)
        ax.plot(grid, fit.curve(grid), "-", color="green", lw=1.5)
        ax.axvline(fit.b, color="gray", ls=":", lw=1)
    if threshold is not None:
        ax.axvline(threshold, color="gray", ls="--", lw=1)
    ax.axhline(0.5, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("S" if which == "s" else "v_bar")
    ax.set_ylabel(f"neuron {neuron + 1} output")
    ax.set_ylim(-0.05, 1.05)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def scatter_plane_colored(table: ProbeTable, neuron: int, path,
                          s0: float = 0.4, v0: float = 0.0014) -> None:
    """Neuron output as color over the (S, v_bar) plane."""
    kept = table.kept()
    fig, ax = plt.subplots(figsize=(5, 3.6), dpi=130)
    sc = ax.scatter(kept.s, np.maximum(kept.v_bar, 1e-7), s=10,
                    c=kept.outputs[:, neuron], cmap="viridis", vmin=0, vmax=1,
                    edgecolors="none")
    ax.set_yscale("log")
    ax.axvline(s0, color="gray", ls="--", lw=1)
    ax.axhline(v0, color="gray", ls="--", lw=1)
    ax.set_xlabel("S")
    ax.set_ylabel("v_bar")
    fig.colorbar(sc, ax=ax, label=f"neuron {neuron + 1} output")
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def save_feature_maps(model, sample: np.ndarray, out_dir) -> list[Path]:
    """Write one image per first-layer filter activation."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    maps = first_conv_feature_maps(model, torch.from_numpy(
        np.asarray(sample, dtype=np.float32)))
    paths = []
    for i in range(maps.shape[0]):
        fig, ax = plt.subplots(figsize=(2.4, 2.4), dpi=100)
        ax.imshow(maps[i].numpy(), cmap="viridis", origin="lower")
        ax.set_axis_off()
        path = out_dir / f"filter_{i:02d}.png"
        fig.tight_layout(pad=0.1)
        fig.savefig(path, metadata=_META)
        plt.close(fig)
        paths.append(path)
    return paths
