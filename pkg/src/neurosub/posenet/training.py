"""Pose-net training loop: Adam over the surrogate-BPTT gradients."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from ..errors import NumericError
from ..geometry import geodesic_angle
from .dataset import PoseDataset
from .model import PoseNet, PoseNetConfig, pose_loss


@dataclass
class TrainConfig:
    epochs: int = 40
    batch_size: int = 64
    lr: float = 2e-3
    beta_q: float = 8.0
    seed: int = 42
    val_fraction: float = 0.2
    net: PoseNetConfig = field(default_factory=PoseNetConfig)


@dataclass
class TrainResult:
    net: PoseNet
    history: list[dict]
    val_translation_rmse: float
    val_orientation_error_deg: float
    workspace_span: float


def _prepare(dataset: PoseDataset, net: PoseNet, seed: int):
    frames = torch.as_tensor(dataset.frames, dtype=torch.float32)
    unit = net.normalize_imu(torch.as_tensor(dataset.imu, dtype=torch.float32))
    # Fixed per-sample encoding keeps epochs deterministic.
    spikes = torch.stack(
        [net.encode_imu(unit[i], seed=seed + i).data for i in range(len(dataset))],
        dim=1,
    )  # [T, N, F]
    t = torch.as_tensor(dataset.translations, dtype=torch.float32)
    q = torch.as_tensor(dataset.quats, dtype=torch.float32)
    return frames, spikes, t, q


def evaluate(
    net: PoseNet,
    frames: torch.Tensor,
    spikes: torch.Tensor,
    t: torch.Tensor,
    q: torch.Tensor,
    batch_size: int = 64,
) -> tuple[float, float]:
    """(RMSE of the 3-D translation error norm in metres, mean geodesic
    angle in degrees)."""
    from ..snn import SpikeTrain

    net.eval()
    errs = []
    angles = []
    with torch.no_grad():
        for start in range(0, frames.shape[0], batch_size):
            sl = slice(start, start + batch_size)
            raw = net(frames[sl], SpikeTrain(spikes[:, sl]))
            t_hat_n, q_hat = PoseNet.split_outputs(raw)
            t_hat = torch.as_tensor(
                net.denormalize_translation(t_hat_n.numpy()), dtype=torch.float32
            )
            errs.append(((t_hat - t[sl]) ** 2).sum(dim=-1))
            for i in range(raw.shape[0]):
                angles.append(geodesic_angle(q_hat[i].numpy(), q[sl][i].numpy()))
    rmse = float(torch.sqrt(torch.cat(errs).mean()))
    return rmse, float(np.degrees(np.mean(angles)))


def _fit_normalization(config: PoseNetConfig, translations: np.ndarray) -> PoseNetConfig:
    lo = translations.min(axis=0)
    hi = translations.max(axis=0)
    center = (hi + lo) / 2.0
    scale = np.maximum((hi - lo) / 2.0, 1e-3)
    return replace(
        config,
        translation_center=tuple(float(v) for v in center),
        translation_scale=tuple(float(v) for v in scale),
    )


def train_pose_net(
    dataset: PoseDataset, config: TrainConfig | None = None
) -> TrainResult:
    from ..snn import SpikeTrain

    config = config or TrainConfig()
    torch.manual_seed(config.seed)

    n = len(dataset)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)
    n_val = max(1, int(n * config.val_fraction))
    val_idx = torch.as_tensor(order[:n_val].copy())
    train_idx = torch.as_tensor(order[n_val:].copy())

    net_config = _fit_normalization(
        config.net, dataset.translations[train_idx.numpy()]
    )
    net = PoseNet(net_config, seed=config.seed)
    frames, spikes, t, q = _prepare(dataset, net, config.seed)
    t_norm = net.normalize_translation(t)

    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=config.epochs)
    history = []
    g = torch.Generator().manual_seed(config.seed)
    for epoch in range(config.epochs):
        net.train()
        perm = train_idx[torch.randperm(len(train_idx), generator=g)]
        epoch_loss = 0.0
        for step, start in enumerate(range(0, len(perm), config.batch_size)):
            idx = perm[start : start + config.batch_size]
            raw = net(frames[idx], SpikeTrain(spikes[:, idx]))
            loss = pose_loss(raw, t_norm[idx], q[idx], beta_q=config.beta_q)
            if not torch.isfinite(loss):
                raise NumericError(f"non-finite loss in epoch {epoch}", step=step)
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach()) * len(idx)
        sched.step()
        rmse, angle = evaluate(
            net, frames[val_idx], spikes[:, val_idx], t[val_idx], q[val_idx]
        )
        history.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss / len(perm),
                "val_translation_rmse": rmse,
                "val_orientation_error_deg": angle,
            }
        )
    rmse, angle = evaluate(net, frames[val_idx], spikes[:, val_idx], t[val_idx], q[val_idx])
    return TrainResult(
        net=net,
        history=history,
        val_translation_rmse=rmse,
        val_orientation_error_deg=angle,
        workspace_span=dataset.workspace_span(),
    )


def save_checkpoint(result: TrainResult, directory: str | Path, seed: int) -> Path:
    return result.net.save(
        directory,
        seed=seed,
        extra={
            "task": "pose",
            "val_translation_rmse": result.val_translation_rmse,
            "val_orientation_error_deg": result.val_orientation_error_deg,
        },
    )
