"""Training protocol: Adam on cross entropy, five sessions, best-of-5.

Each session reshuffles the training split and reinitializes the model from
its own seed; the session with the highest validation accuracy supplies the
model used for testing and probing. Fixed seeds plus torch's deterministic
algorithms make repeated calls bit-reproducible on CPU.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .archs import ArchitectureSpec, build_model
from .data import SplitData

torch.use_deterministic_algorithms(True)


@dataclass
class TrainReport:
    arch: dict
    hyperparams: dict
    session_val_accuracy: list[float]
    best_session: int
    best_val_accuracy: float
    checkpoints: list[str] = field(default_factory=list)
    test_accuracy: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _session_seed(base_seed: int, session: int) -> int:
    return int(np.random.SeedSequence(base_seed, spawn_key=(session,))
               .generate_state(1, np.uint64)[0] % (2**31))


def _accuracy(model: nn.Module, x: torch.Tensor, y: torch.Tensor,
              batch_size: int = 256) -> float:
    model.eval()
    hits = 0
    with torch.no_grad():
        for i in range(0, len(x), batch_size):
            pred = model(x[i: i + batch_size]).argmax(dim=1)
            hits += int((pred == y[i: i + batch_size]).sum())
    return hits / len(x)


def train_one_session(spec: ArchitectureSpec, data: SplitData, seed: int,
                      epochs: int, lr: float, batch_size: int,
                      loss_log: list | None = None) -> tuple[nn.Module, float]:
    torch.manual_seed(seed)
    model = build_model(spec)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    x_train = torch.from_numpy(data.x_train)
    y_train = torch.from_numpy(data.y_train)
    x_val = torch.from_numpy(data.x_val)
    y_val = torch.from_numpy(data.y_val)
    rng = np.random.default_rng(seed)
    for epoch in range(epochs):
        model.train()
        order = rng.permutation(len(x_train))
        for i in range(0, len(order), batch_size):
            idx = order[i: i + batch_size]
            opt.zero_grad()
            loss = loss_fn(model(x_train[idx]), y_train[idx])
            loss.backward()
            opt.step()
            if loss_log is not None and epoch == 0:
                loss_log.append(float(loss))
    return model, _accuracy(model, x_val, y_val)


def train(spec: ArchitectureSpec, data: SplitData, sessions: int = 5,
          seed: int = 0, epochs: int = 20, lr: float = 1e-3,
          batch_size: int = 32, checkpoint_dir=None) -> tuple[TrainReport, nn.Module]:
    """Run `sessions` independent trainings; return the report and best model."""
    accs: list[float] = []
    best_model = None
    best_acc = -1.0
    best_session = 0
    paths: list[str] = []
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
    for session in range(sessions):
        model, acc = train_one_session(spec, data, _session_seed(seed, session),
                                       epochs, lr, batch_size)
        accs.append(acc)
        if checkpoint_dir is not None:
            path = checkpoint_dir / f"session_{session}.pt"
            torch.save(model.state_dict(), path)
            paths.append(str(path))
        if acc > best_acc:
            best_acc = acc
            best_model = model
            best_session = session
    report = TrainReport(
        arch={"kind": spec.kind, "bottleneck_n": spec.bottleneck_n},
        hyperparams={"sessions": sessions, "seed": seed, "epochs": epochs,
                     "lr": lr, "batch_size": batch_size},
        session_val_accuracy=accs,
        best_session=best_session,
        best_val_accuracy=best_acc,
        checkpoints=paths,
    )
    return report, best_model


def evaluate(model: nn.Module, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Accuracy plus per-sample predicted class indices."""
    xt = torch.from_numpy(np.asarray(x, dtype=np.float32))
    model.eval()
    preds = []
    with torch.no_grad():
        for i in range(0, len(xt), 256):
            preds.append(model(xt[i: i + 256]).argmax(dim=1).numpy())
    pred = np.concatenate(preds) if preds else np.empty(0, dtype=np.int64)
    acc = float((pred == np.asarray(y)).mean()) if len(pred) else 0.0
    return acc, pred


def softmax_probabilities(model: nn.Module, x: np.ndarray) -> np.ndarray:
    xt = torch.from_numpy(np.asarray(x, dtype=np.float32))
    model.eval()
    out = []
    with torch.no_grad():
        for i in range(0, len(xt), 256):
            out.append(torch.softmax(model(xt[i: i + 256]), dim=1).numpy())
    return np.concatenate(out)


def predict_diagram(model: nn.Module, test: SplitData) -> dict:
    """Predicted labels over the evenly-gridded test set plus boundary flips.

    Boundary points sit midway between adjacent grid points whose predicted
    labels disagree along a row or column.
    """
    acc, pred = evaluate(model, test.x, test.y)
    f_p = np.array([row["f_p"] for row in test.params])
    f_d = np.array([row["f_d"] for row in test.params])
    fps = np.unique(f_p)
    fds = np.unique(f_d)
    grid = -np.ones((len(fps), len(fds)), dtype=np.int64)
    for k in range(len(pred)):
        i = int(np.searchsorted(fps, f_p[k]))
        j = int(np.searchsorted(fds, f_d[k]))
        grid[i, j] = pred[k]
    boundary = []
    for i in range(len(fps)):
        for j in range(len(fds)):
            if j + 1 < len(fds) and grid[i, j] != grid[i, j + 1]:
                boundary.append((fps[i], 0.5 * (fds[j] + fds[j + 1])))
            if i + 1 < len(fps) and grid[i, j] != grid[i + 1, j]:
                boundary.append((0.5 * (fps[i] + fps[i + 1]), fds[j]))
    mis = [k for k in range(len(pred)) if pred[k] != test.y[k]]
    return {"accuracy": acc, "predictions": pred, "grid": grid,
            "f_p_values": fps, "f_d_values": fds,
            "boundary_points": np.array(boundary).reshape(-1, 2),
            "misclassified": mis}
