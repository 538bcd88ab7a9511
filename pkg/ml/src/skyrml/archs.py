"""The three classifier architectures, with an optional sigmoid bottleneck.

cnn:      conv(32, 5x5) -> BN -> ReLU -> 2x2 pool, twice, -> FC 1024 -> softmax(2)
cnn_lstm: the same stack at 3x3 (pool 3x3) per frame -> LSTM(50) -> softmax(4)
cnn3d:    two 3D conv blocks (32 then 16 kernels, 3x3x3, 2x2x2 pool) -> softmax(4)

`add_bottleneck` inserts a fully-connected layer of n sigmoid units directly
in front of the output layer; its activations are what the parameter
visualization probes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import torch
from torch import nn

ARCH_KINDS = ("cnn", "cnn_lstm", "cnn3d")


@dataclass(frozen=True)
class ArchitectureSpec:
    kind: str
    bottleneck_n: int = 0

    def __post_init__(self):
        if self.kind not in ARCH_KINDS:
            raise ValueError(f"kind must be one of {ARCH_KINDS}")
        if self.bottleneck_n < 0:
            raise ValueError("bottleneck_n must be >= 0")

    @property
    def num_classes(self) -> int:
        return 2 if self.kind == "cnn" else 4


def add_bottleneck(spec: ArchitectureSpec, n: int) -> ArchitectureSpec:
    """Spec with an n-unit sigmoid layer in front of the output layer."""
    if n < 1:
        raise ValueError("bottleneck needs at least one unit")
    return replace(spec, bottleneck_n=n)


class _Head(nn.Module):
    """Optional sigmoid bottleneck followed by the linear output layer."""

    def __init__(self, in_features: int, num_classes: int, bottleneck_n: int):
        super().__init__()
        if bottleneck_n:
            self.bottleneck = nn.Linear(in_features, bottleneck_n)
            self.out = nn.Linear(bottleneck_n, num_classes)
        else:
            self.bottleneck = None
            self.out = nn.Linear(in_features, num_classes)
        self.last_bottleneck: torch.Tensor | None = None

    def forward(self, x):
        if self.bottleneck is not None:
            x = torch.sigmoid(self.bottleneck(x))
            self.last_bottleneck = x
        return self.out(x)


class Cnn(nn.Module):
    def __init__(self, bottleneck_n: int = 0):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(1, 32, 5, padding=2), nn.BatchNorm2d(32), nn.ReLU(),
            nn.MaxPool2d(2),
            nn.Conv2d(32, 32, 5, padding=2), nn.BatchNorm2d(32), nn.ReLU(),
            nn.MaxPool2d(2),
        )
        self.fc = nn.Sequential(nn.Flatten(), nn.Linear(32 * 9 * 9, 1024), nn.ReLU())
        self.head = _Head(1024, 2, bottleneck_n)

    def forward(self, x):  # x: (B, 36, 36)
        z = self.features(x.unsqueeze(1))
        return self.head(self.fc(z))


class CnnLstm(nn.Module):
    def __init__(self, bottleneck_n: int = 0):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(1, 32, 3, padding=1), nn.BatchNorm2d(32), nn.ReLU(),
            nn.MaxPool2d(3),
            nn.Conv2d(32, 32, 3, padding=1), nn.BatchNorm2d(32), nn.ReLU(),
            nn.MaxPool2d(3),
        )
        self.lstm = nn.LSTM(input_size=32 * 4 * 4, hidden_size=50, batch_first=True)
        self.head = _Head(50, 4, bottleneck_n)

    def forward(self, x):  # x: (B, 10, 36, 36)
        b, t = x.shape[0], x.shape[1]
        z = self.features(x.reshape(b * t, 1, 36, 36))
        z = z.reshape(b, t, -1)
        out, _ = self.lstm(z)
        return self.head(out[:, -1])


class Cnn3d(nn.Module):
    def __init__(self, bottleneck_n: int = 0):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv3d(1, 32, 3, padding=1), nn.BatchNorm3d(32), nn.ReLU(),
            nn.MaxPool3d(2),
            nn.Conv3d(32, 16, 3, padding=1), nn.BatchNorm3d(16), nn.ReLU(),
            nn.MaxPool3d(2),
        )
        self.flatten = nn.Flatten()
        self.head = _Head(16 * 2 * 9 * 9, 4, bottleneck_n)

    def forward(self, x):  # x: (B, 10, 36, 36)
        z = self.features(x.unsqueeze(1))
        return self.head(self.flatten(z))


def build_model(spec: ArchitectureSpec) -> nn.Module:
    if spec.kind == "cnn":
        return Cnn(spec.bottleneck_n)
    if spec.kind == "cnn_lstm":
        return CnnLstm(spec.bottleneck_n)
    return Cnn3d(spec.bottleneck_n)


def first_conv_feature_maps(model: nn.Module, sample: torch.Tensor) -> torch.Tensor:
    """Activations of the first convolutional layer for one input sample.

    Returns (n_filters, H, W) for the cnn; raises for architectures whose
    first layer is not 2D convolution over a single image.
    """
    if not isinstance(model, Cnn):
        raise ValueError("feature maps are defined for the image cnn")
    conv = model.features[0]
    with torch.no_grad():
        maps = torch.relu(conv(sample.reshape(1, 1, 36, 36)))
    return maps[0]
