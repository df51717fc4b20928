"""Network checkpoints: JSON manifest + one float32 little-endian blob per
layer, named by layer index."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..errors import ConfigurationError
from .layers import (
    CurrentAvgPool,
    FlattenSpace,
    MembraneReadout,
    SpikingConv2d,
    SpikingDense,
)
from .neuron import LifParams
from .network import SpikingSequential

FORMAT = "neurosub-checkpoint"
VERSION = 1

# Architectures beyond plain sequential register a loader here (name -> fn).
ARCHITECTURES: dict[str, dict] = {}


def _lif_config(lif: LifParams) -> dict:
    return {"tau_m": lif.tau_m, "v_th": lif.v_th, "dt": lif.dt}


def _layer_spec(layer: nn.Module) -> tuple[str, dict, list[tuple[str, torch.Tensor]]]:
    if isinstance(layer, SpikingConv2d):
        cfg = {
            "in_channels": layer.in_channels,
            "out_channels": layer.out_channels,
            "kernel_size": layer.kernel_size,
            "stride": layer.stride,
            "padding": layer.padding,
            "lif": _lif_config(layer.lif),
        }
        return "spiking_conv2d", cfg, [("weight", layer.weight), ("bias", layer.bias)]
    if isinstance(layer, SpikingDense):
        cfg = {
            "in_features": layer.in_features,
            "out_features": layer.out_features,
            "lif": _lif_config(layer.lif),
        }
        return "spiking_dense", cfg, [("weight", layer.weight), ("bias", layer.bias)]
    if isinstance(layer, MembraneReadout):
        cfg = {
            "in_features": layer.in_features,
            "out_features": layer.out_features,
            "lif": _lif_config(layer.lif),
        }
        return "membrane_readout", cfg, [("weight", layer.weight), ("bias", layer.bias)]
    if isinstance(layer, CurrentAvgPool):
        return "current_avg_pool", {"window": layer.window}, []
    if isinstance(layer, FlattenSpace):
        return "flatten_space", {}, []
    raise ConfigurationError(f"cannot checkpoint layer type {type(layer).__name__}")


def _build_layer(kind: str, cfg: dict, dtype=torch.float32) -> nn.Module:
    if kind == "spiking_conv2d":
        return SpikingConv2d(
            cfg["in_channels"],
            cfg["out_channels"],
            cfg["kernel_size"],
            stride=cfg["stride"],
            padding=cfg["padding"],
            lif=LifParams(**cfg["lif"]),
            dtype=dtype,
        )
    if kind == "spiking_dense":
        return SpikingDense(
            cfg["in_features"], cfg["out_features"], LifParams(**cfg["lif"]), dtype=dtype
        )
    if kind == "membrane_readout":
        return MembraneReadout(
            cfg["in_features"], cfg["out_features"], LifParams(**cfg["lif"]), dtype=dtype
        )
    if kind == "current_avg_pool":
        return CurrentAvgPool(cfg["window"])
    if kind == "flatten_space":
        return FlattenSpace()
    raise ConfigurationError(f"unknown checkpoint layer type {kind!r}")


def write_layer_blob(path: Path, arrays: list[tuple[str, torch.Tensor]]) -> list[dict]:
    """Concatenate arrays as float32 LE into one blob; return the index."""
    specs = []
    chunks = []
    offset = 0
    for name, tensor in arrays:
        arr = tensor.detach().cpu().numpy().astype("<f4")
        specs.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.size
    path.write_bytes(b"".join(chunks))
    return specs


def read_layer_blob(path: Path, specs: list[dict]) -> dict[str, np.ndarray]:
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    out = {}
    for spec in specs:
        size = int(np.prod(spec["shape"])) if spec["shape"] else 1
        out[spec["name"]] = raw[spec["offset"] : spec["offset"] + size].reshape(
            spec["shape"]
        )
    return out


def save_sequential(
    network: SpikingSequential,
    directory: str | Path,
    *,
    hyperparameters: dict | None = None,
    seed: int | None = None,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "architecture": "sequential",
        "seed": seed,
        "hyperparameters": hyperparameters or {},
        "layers": [],
    }
    for i, layer in enumerate(network.layers):
        kind, cfg, arrays = _layer_spec(layer)
        entry = {"index": i, "type": kind, "config": cfg}
        if arrays:
            blob = f"layer_{i:03d}.bin"
            entry["blob"] = blob
            entry["arrays"] = write_layer_blob(directory / blob, arrays)
        manifest["layers"].append(entry)
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return directory / "manifest.json"


def load_sequential(directory: str | Path, dtype=torch.float32) -> SpikingSequential:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("format") != FORMAT:
        raise ConfigurationError(f"not a {FORMAT} manifest: {directory}")
    if manifest.get("architecture") != "sequential":
        raise ConfigurationError(
            f"expected sequential architecture, got {manifest.get('architecture')!r}"
        )
    layers = []
    for entry in manifest["layers"]:
        layer = _build_layer(entry["type"], entry["config"], dtype=dtype)
        if entry.get("blob"):
            values = read_layer_blob(directory / entry["blob"], entry["arrays"])
            state = {k: torch.as_tensor(v, dtype=dtype) for k, v in values.items()}
            layer.load_state_dict(state)
        layers.append(layer)
    return SpikingSequential(*layers)


def load_manifest(directory: str | Path) -> dict:
    return json.loads((Path(directory) / "manifest.json").read_text())
