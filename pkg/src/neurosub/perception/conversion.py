"""ANN-to-SNN conversion with channel-wise weight normalization and signed
neurons carrying imbalanced thresholds.

Weights are rescaled by the per-channel maximum activations of the source
network so converted firing rates track the normalized analog activations;
signed units reproduce leaky-ReLU's negative slope through a larger negative
threshold (rate ratio alpha).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ConversionError, DomainError
from ..snn import (
    LifParams,
    SignedNeuronParams,
    SignedSpikingConv2d,
    SpikeTrain,
    poisson_encode,
)
from .frame import Frame

logger = logging.getLogger(__name__)

# Near-IF regime. The Euler recurrence scales the drive by leak = dt/tau_m,
# so a threshold of exactly one charge quantum (v_th_pos = leak) makes the
# firing rate track the normalized current with bias -leak/2: rate-code
# linearity to a quarter percent at tau_m = 200.
CONVERSION_LIF = LifParams(tau_m=200.0, v_th=1.0, dt=1.0)


class ReluConvNet(nn.Module):
    """Toy analog source network: stacked conv layers with leaky-ReLU."""

    def __init__(
        self,
        channels: tuple[int, ...] = (1, 4, 4),
        kernel_size: int = 3,
        *,
        alpha: float = 0.1,
        stride: int = 1,
        seed: int = 0,
    ):
        super().__init__()
        self.alpha = alpha
        self.stride = stride
        torch.manual_seed(seed)
        self.convs = nn.ModuleList(
            nn.Conv2d(cin, cout, kernel_size, stride=stride, padding=kernel_size // 2)
            for cin, cout in zip(channels[:-1], channels[1:])
        )

    def forward_activations(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Post-activation map of every layer for input [B, C, H, W]."""
        acts = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), negative_slope=self.alpha)
            acts.append(x)
        return acts

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.forward_activations(x)[-1]


@dataclass
class CalibrationStats:
    """Per-layer, per-channel maximum activation over a calibration set."""

    lambdas: list[np.ndarray]

    def to_json(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(
            json.dumps({"lambdas": [lam.tolist() for lam in self.lambdas]}, indent=2)
        )
        return path

    @classmethod
    def from_json(cls, path: str | Path) -> "CalibrationStats":
        data = json.loads(Path(path).read_text())
        return cls(lambdas=[np.asarray(lam, dtype=float) for lam in data["lambdas"]])


def calibrate_channel_max(net: ReluConvNet, frames: list[Frame]) -> CalibrationStats:
    """Max activation per channel over all frames and spatial positions.

    Channels that never activate get lambda = 1 with a warning so the scale
    factors stay positive.
    """
    if not frames:
        raise DomainError("need at least one calibration frame")
    batch = torch.stack(
        [torch.as_tensor(f.pixels, dtype=torch.float32) for f in frames]
    ).unsqueeze(1)
    with torch.no_grad():
        acts = net.forward_activations(batch)
    lambdas = []
    for i, act in enumerate(acts):
        lam = act.amax(dim=(0, 2, 3)).numpy().astype(float)
        dead = lam <= 0.0
        if dead.any():
            logger.warning(
                "layer %d: %d dead channel(s); lambda forced to 1", i, int(dead.sum())
            )
            lam[dead] = 1.0
        lambdas.append(lam)
    return CalibrationStats(lambdas=lambdas)


class SignedSpikingNet(nn.Module):
    """Converted network of signed spiking conv layers (inference only)."""

    def __init__(self, layers: list[SignedSpikingConv2d]):
        super().__init__()
        self.layers = nn.ModuleList(layers)

    @torch.no_grad()
    def forward(self, train: SpikeTrain) -> list[SpikeTrain]:
        outputs = []
        for layer in self.layers:
            train = layer(train)
            outputs.append(train)
        return outputs

    @torch.no_grad()
    def firing_rates(self, frame: Frame, steps: int, seed: int = 0) -> list[np.ndarray]:
        """Signed spikes per step for every layer, Poisson-encoded input."""
        train = poisson_encode(frame.pixels, max_rate=1.0, steps=steps, seed=seed)
        train = SpikeTrain(train.data.unsqueeze(1).unsqueeze(1))  # [T,1,1,H,W]
        return [out.rate().squeeze(0).numpy() for out in self.forward(train)]


def ann_to_snn_convert(
    net: ReluConvNet,
    stats: CalibrationStats,
    neuron: SignedNeuronParams | None = None,
    lif: LifParams = CONVERSION_LIF,
) -> SignedSpikingNet:
    """Channel-wise normalization: w' = w * lambda_in / lambda_out,
    b' = b / lambda_out; activations become signed spiking units whose
    negative slope matches the source leaky-ReLU."""
    if neuron is None:
        alpha = net.alpha if net.alpha > 0 else 1e-3  # alpha -> 0: positive-only
        neuron = SignedNeuronParams(v_th_pos=lif.leak, alpha=alpha)
    if len(stats.lambdas) != len(net.convs):
        raise ConversionError(
            f"calibration covers {len(stats.lambdas)} layers, network has {len(net.convs)}"
        )
    layers = []
    lam_in = np.ones(net.convs[0].in_channels)
    for i, conv in enumerate(net.convs):
        if not isinstance(conv, nn.Conv2d):
            raise ConversionError(f"unsupported layer type at index {i}: {type(conv).__name__}")
        if conv.bias is None:
            raise ConversionError(f"layer {i} has no bias term")
        lam_out = stats.lambdas[i]
        w = conv.weight.detach().clone()
        scale = torch.as_tensor(
            lam_in[None, :, None, None] / lam_out[:, None, None, None],
            dtype=w.dtype,
        )
        w_scaled = w * scale
        b_scaled = conv.bias.detach() / torch.as_tensor(lam_out, dtype=w.dtype)
        layers.append(
            SignedSpikingConv2d(
                w_scaled,
                b_scaled,
                neuron,
                lif,
                stride=conv.stride[0],
                padding=conv.padding[0],
            )
        )
        lam_in = lam_out
    return SignedSpikingNet(layers)


def save_relu_net(net: ReluConvNet, directory: str | Path) -> Path:
    """Analog source-network checkpoint (same manifest+blob layout)."""
    from ..snn.checkpoint import FORMAT, VERSION, write_layer_blob

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "architecture": "relu_conv",
        "hyperparameters": {"alpha": net.alpha, "stride": net.stride},
        "layers": [],
    }
    for i, conv in enumerate(net.convs):
        blob = f"layer_{i:03d}.bin"
        arrays = [("weight", conv.weight), ("bias", conv.bias)]
        manifest["layers"].append(
            {
                "index": i,
                "type": "conv2d_leaky_relu",
                "config": {
                    "in_channels": conv.in_channels,
                    "out_channels": conv.out_channels,
                    "kernel_size": conv.kernel_size[0],
                },
                "blob": blob,
                "arrays": write_layer_blob(directory / blob, arrays),
            }
        )
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return directory / "manifest.json"


def load_relu_net(directory: str | Path) -> ReluConvNet:
    from ..errors import ConfigurationError
    from ..snn.checkpoint import read_layer_blob

    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("architecture") != "relu_conv":
        raise ConfigurationError(f"not a relu_conv checkpoint: {directory}")
    channels = [manifest["layers"][0]["config"]["in_channels"]]
    channels += [entry["config"]["out_channels"] for entry in manifest["layers"]]
    net = ReluConvNet(
        channels=tuple(channels),
        kernel_size=manifest["layers"][0]["config"]["kernel_size"],
        alpha=manifest["hyperparameters"]["alpha"],
        stride=manifest["hyperparameters"]["stride"],
    )
    for entry, conv in zip(manifest["layers"], net.convs):
        values = read_layer_blob(directory / entry["blob"], entry["arrays"])
        with torch.no_grad():
            conv.weight.copy_(torch.as_tensor(values["weight"].copy()))
            conv.bias.copy_(torch.as_tensor(values["bias"].copy()))
    return net


def save_signed_net(
    net: SignedSpikingNet, directory: str | Path, *, seed: int | None = None
) -> Path:
    from ..snn.checkpoint import FORMAT, VERSION, write_layer_blob

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    first = net.layers[0]
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "architecture": "signed_sequential",
        "seed": seed,
        "hyperparameters": {
            "v_th_pos": first.signed.v_th_pos,
            "alpha": first.signed.alpha,
            "tau_m": first.lif.tau_m,
            "dt": first.lif.dt,
        },
        "layers": [],
    }
    for i, layer in enumerate(net.layers):
        blob = f"layer_{i:03d}.bin"
        arrays = [("weight", layer.weight), ("bias", layer.bias)]
        manifest["layers"].append(
            {
                "index": i,
                "type": "signed_spiking_conv2d",
                "config": {"stride": layer.stride, "padding": layer.padding},
                "blob": blob,
                "arrays": write_layer_blob(directory / blob, arrays),
            }
        )
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return directory / "manifest.json"


def load_signed_net(directory: str | Path) -> SignedSpikingNet:
    from ..errors import ConfigurationError
    from ..snn.checkpoint import read_layer_blob
    from ..snn.layers import SignedSpikingConv2d

    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("architecture") != "signed_sequential":
        raise ConfigurationError(f"not a signed_sequential checkpoint: {directory}")
    hp = manifest["hyperparameters"]
    neuron = SignedNeuronParams(v_th_pos=hp["v_th_pos"], alpha=hp["alpha"])
    lif = LifParams(tau_m=hp["tau_m"], v_th=1.0, dt=hp["dt"])
    layers = []
    for entry in manifest["layers"]:
        values = read_layer_blob(directory / entry["blob"], entry["arrays"])
        layers.append(
            SignedSpikingConv2d(
                torch.as_tensor(values["weight"].copy()),
                torch.as_tensor(values["bias"].copy()),
                neuron,
                lif,
                stride=entry["config"]["stride"],
                padding=entry["config"]["padding"],
            )
        )
    return SignedSpikingNet(layers)


def normalized_activations(
    net: ReluConvNet, stats: CalibrationStats, frame: Frame
) -> list[np.ndarray]:
    """Analog activations divided by the per-channel maxima; the quantity a
    converted network's firing rates should track."""
    x = torch.as_tensor(frame.pixels, dtype=torch.float32).reshape(
        1, 1, *frame.pixels.shape
    )
    with torch.no_grad():
        acts = net.forward_activations(x)
    return [
        (act.squeeze(0).numpy() / lam[:, None, None])
        for act, lam in zip(acts, stats.lambdas)
    ]
