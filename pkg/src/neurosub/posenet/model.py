"""Hybrid spiking CNN-LSTM multi-modal pose regressor.

Camera frames feed a direct-coded spiking conv stack, IMU windows a
rate-coded spiking dense layer; the fused spike vector drives a spiking LSTM
whose final hidden state is read out through a spiking dense layer into
seven non-spiking membrane-potential outputs (translation + quaternion).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..errors import ConfigurationError, DimensionError
from ..geometry import canonicalize_quat
from ..snn import LifParams, MembraneReadout, SpikeTrain, SpikingConv2d, SpikingDense
from ..snn.checkpoint import FORMAT, VERSION, read_layer_blob, write_layer_blob
from ..snn.layers import _SpikingModule, pool_spiking
from .lstm import SpikingLstmCell, lstm_sequence_forward

QUAT_EPS = 1e-8


@dataclass
class PoseEstimate:
    """Translation (m) and unit quaternion (w >= 0); fallback marks a
    degenerate zero-norm quaternion output replaced by identity."""

    translation: np.ndarray
    quat: np.ndarray
    fallback: bool = False

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=float)
        q = np.asarray(self.quat, dtype=float)
        n = np.linalg.norm(q)
        if n < QUAT_EPS:
            self.quat = np.array([1.0, 0.0, 0.0, 0.0])
            self.fallback = True
        else:
            self.quat = canonicalize_quat(q / n)


@dataclass(frozen=True)
class PoseNetConfig:
    width: int = 64
    height: int = 48
    imu_window: int = 10
    imu_channels: int = 6
    steps: int = 6
    head_steps: int = 6
    conv_channels: tuple[int, int, int] = (6, 12, 16)
    imu_features: int = 32
    lstm_hidden: int = 64
    head_hidden: int = 320
    accel_full_scale: float = 20.0
    gyro_full_scale: float = 2.0
    imu_max_rate: float = 1.0
    # Readouts regress translation in a normalized workspace frame; the
    # affine map is fitted by the trainer and travels with the checkpoint.
    translation_center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    translation_scale: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "imu_window": self.imu_window,
            "imu_channels": self.imu_channels,
            "steps": self.steps,
            "head_steps": self.head_steps,
            "conv_channels": list(self.conv_channels),
            "imu_features": self.imu_features,
            "lstm_hidden": self.lstm_hidden,
            "head_hidden": self.head_hidden,
            "accel_full_scale": self.accel_full_scale,
            "gyro_full_scale": self.gyro_full_scale,
            "imu_max_rate": self.imu_max_rate,
            "translation_center": list(self.translation_center),
            "translation_scale": list(self.translation_scale),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PoseNetConfig":
        data = dict(data)
        data["conv_channels"] = tuple(data.get("conv_channels", (6, 12, 16)))
        for key in ("translation_center", "translation_scale"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


class PoseNet(nn.Module):
    def __init__(self, config: PoseNetConfig | None = None, *, seed: int = 0):
        super().__init__()
        self.config = config or PoseNetConfig()
        cfg = self.config
        torch.manual_seed(seed)
        lif = LifParams()
        c1, c2, c3 = cfg.conv_channels
        # Init gains keep every spiking stage firing over the short horizon.
        # Total spatial downsampling is 4 (stride-2 conv + 2x current pool):
        # translation regression needs the finer feature grid.
        self.conv1 = SpikingConv2d(1, c1, 3, stride=2, padding=1, lif=lif, gain=6.0)
        self.conv2 = SpikingConv2d(c1, c2, 3, stride=1, padding=1, lif=lif, gain=6.0)
        self.conv3 = SpikingConv2d(c2, c3, 3, stride=1, padding=1, lif=lif, gain=6.0)
        w4, h4 = cfg.width // 4, cfg.height // 4
        self.visual_features = c3 * w4 * h4
        self.imu_dense = SpikingDense(
            cfg.imu_window * cfg.imu_channels, cfg.imu_features, lif, gain=4.0
        )
        self.fused_features = self.visual_features + cfg.imu_features
        self.lstm = SpikingLstmCell(self.fused_features, cfg.lstm_hidden)
        # The head sees the recurrent state alongside the fused feature
        # spikes: the FC spiking layers consume the fused one-dimensional
        # vector directly, the LSTM contributes its temporal summary.
        self.head_dense = SpikingDense(
            cfg.lstm_hidden + self.fused_features, cfg.head_hidden, lif, gain=4.0
        )
        self.readout = MembraneReadout(cfg.head_hidden, 7, lif)
        self.clip_counter = 0

    def set_spike_mode(self, mode: str) -> None:
        for module in self.modules():
            if isinstance(module, (_SpikingModule, SpikingLstmCell)):
                module.spike_mode = mode

    def visual_branch(self, frames: torch.Tensor) -> SpikeTrain:
        """[B, H, W] analog frames -> [T, B, F] feature spikes (direct code:
        the frame is the constant per-step drive of the first conv layer)."""
        cfg = self.config
        if frames.dim() != 3:
            raise DimensionError(f"expected [B,H,W] frames, got {tuple(frames.shape)}")
        x = frames.unsqueeze(1)  # [B,1,H,W]
        train = SpikeTrain(
            x.unsqueeze(0).expand(cfg.steps, *x.shape).contiguous()
        )
        out = pool_spiking(self.conv1(train), 2)  # fractional currents
        out = self.conv3(self.conv2(out))
        data = out.data
        return SpikeTrain(data.reshape(data.shape[0], data.shape[1], -1))

    def normalize_imu(self, window: np.ndarray | torch.Tensor) -> torch.Tensor:
        """[..., N, 6] raw samples -> [..., N*6] in [0,1] by full-scale range
        (clipped; clips counted)."""
        cfg = self.config
        w = torch.as_tensor(window, dtype=torch.float32)
        scale = torch.tensor(
            [cfg.accel_full_scale] * 3 + [cfg.gyro_full_scale] * 3
        )
        unit = w / (2.0 * scale) + 0.5
        clipped = ((unit < 0) | (unit > 1)).sum().item()
        self.clip_counter += int(clipped)
        unit = unit.clamp(0.0, 1.0)
        return unit.reshape(*unit.shape[:-2], cfg.imu_window * cfg.imu_channels)

    def encode_imu(self, unit: torch.Tensor, seed: int) -> SpikeTrain:
        """Rate-encode normalized IMU values over the step horizon."""
        cfg = self.config
        rng = np.random.default_rng(seed)
        p = unit.numpy() * cfg.imu_max_rate
        draws = rng.random((cfg.steps, *p.shape))
        return SpikeTrain(torch.as_tensor((draws < p), dtype=torch.float32))

    def inertial_branch(self, imu_spikes: SpikeTrain) -> SpikeTrain:
        return self.imu_dense(imu_spikes)

    @staticmethod
    def fuse(visual: SpikeTrain, inertial: SpikeTrain) -> SpikeTrain:
        """Concatenate along the neuron axis, visual first."""
        if visual.data.shape[0] != inertial.data.shape[0]:
            raise DimensionError(
                f"branch horizons differ: {visual.data.shape[0]} != {inertial.data.shape[0]}"
            )
        return SpikeTrain(torch.cat([visual.data, inertial.data], dim=-1), dt=visual.dt)

    def regression_head(
        self, hidden: torch.Tensor, fused: torch.Tensor | None = None
    ) -> torch.Tensor:
        """LSTM hidden activity plus the fused feature spikes, through the
        fully connected spiking layer into 7 membrane readouts that
        integrate over all steps. A bare final state [B, H] is tiled over
        head_steps; missing fused input is treated as silent."""
        cfg = self.config
        if hidden.dim() == 2:
            hidden = hidden.unsqueeze(0).expand(
                cfg.head_steps, *hidden.shape
            ).contiguous()
        if fused is None:
            fused = torch.zeros(
                *hidden.shape[:2], self.fused_features, dtype=hidden.dtype
            )
        current = torch.cat([hidden, fused], dim=-1)
        return self.readout(self.head_dense(SpikeTrain(current)))

    def forward(
        self, frames: torch.Tensor, imu_spikes: SpikeTrain
    ) -> torch.Tensor:
        fused = self.fuse(self.visual_branch(frames), self.inertial_branch(imu_spikes))
        state = self.lstm.zero_state(fused.data.shape[1], dtype=fused.data.dtype)
        hidden = []
        for t in range(fused.data.shape[0]):
            state, h_t = self.lstm.step(fused.data[t], state)
            hidden.append(h_t)
        return self.regression_head(torch.stack(hidden), fused.data)

    @staticmethod
    def split_outputs(raw: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Raw head outputs -> (normalized-frame translation, unit
        quaternion), keeping the graph differentiable."""
        t = raw[..., :3]
        q = raw[..., 3:]
        norm = q.norm(dim=-1, keepdim=True).clamp_min(QUAT_EPS)
        return t, q / norm

    def normalize_translation(self, t: torch.Tensor) -> torch.Tensor:
        center = torch.tensor(self.config.translation_center, dtype=t.dtype)
        scale = torch.tensor(self.config.translation_scale, dtype=t.dtype)
        return (t - center) / scale

    def denormalize_translation(self, t_norm: np.ndarray) -> np.ndarray:
        return np.asarray(t_norm) * np.array(self.config.translation_scale) + np.array(
            self.config.translation_center
        )

    @torch.no_grad()
    def predict(
        self, frame_pixels: np.ndarray, imu_window: np.ndarray, seed: int = 0
    ) -> PoseEstimate:
        frames = torch.as_tensor(frame_pixels, dtype=torch.float32).unsqueeze(0)
        unit = self.normalize_imu(torch.as_tensor(imu_window, dtype=torch.float32))
        spikes = self.encode_imu(unit.unsqueeze(0), seed)
        raw = self.forward(frames, spikes)[0].numpy()
        return PoseEstimate(
            translation=self.denormalize_translation(raw[:3]), quat=raw[3:]
        )

    # -- checkpointing ------------------------------------------------------

    _PARTS = ("conv1", "conv2", "conv3", "imu_dense", "lstm", "head_dense", "readout")

    def save(self, directory, *, seed: int | None = None, extra: dict | None = None) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format": FORMAT,
            "version": VERSION,
            "architecture": "pose_net",
            "seed": seed,
            "hyperparameters": {"config": self.config.to_dict(), **(extra or {})},
            "layers": [],
        }
        for i, part in enumerate(self._PARTS):
            module = getattr(self, part)
            arrays = [(name, p) for name, p in module.named_parameters()]
            blob = f"layer_{i:03d}.bin"
            manifest["layers"].append(
                {
                    "index": i,
                    "type": part,
                    "config": {},
                    "blob": blob,
                    "arrays": write_layer_blob(directory / blob, arrays),
                }
            )
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
        return directory / "manifest.json"

    @classmethod
    def load(cls, directory) -> "PoseNet":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        if manifest.get("architecture") != "pose_net":
            raise ConfigurationError(f"not a pose_net checkpoint: {directory}")
        config = PoseNetConfig.from_dict(manifest["hyperparameters"]["config"])
        net = cls(config)
        for entry in manifest["layers"]:
            module = getattr(net, entry["type"])
            values = read_layer_blob(directory / entry["blob"], entry["arrays"])
            state = {k: torch.as_tensor(v, dtype=torch.float32) for k, v in values.items()}
            module.load_state_dict(state)
        return net


def pose_loss(
    raw: torch.Tensor,
    target_t_norm: torch.Tensor,
    target_q: torch.Tensor,
    beta_q: float = 1.0,
) -> torch.Tensor:
    """||t_hat - t||^2 + beta_q * min(||q_hat - q||^2, ||q_hat + q||^2),
    double-cover safe; translation in the network's normalized frame."""
    t_hat, q_hat = PoseNet.split_outputs(raw)
    t_term = ((t_hat - target_t_norm) ** 2).sum(dim=-1)
    q_diff = ((q_hat - target_q) ** 2).sum(dim=-1)
    q_sum = ((q_hat + target_q) ** 2).sum(dim=-1)
    q_term = torch.minimum(q_diff, q_sum)
    return (t_term + beta_q * q_term).mean()
