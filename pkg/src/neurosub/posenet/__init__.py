"""Hybrid spiking CNN-LSTM pose regression."""

from .dataset import (
    PoseDataset,
    WorkspaceSpec,
    generate_pose_dataset,
    load_pose_dataset,
)
from .lstm import SpikingLstmCell, lstm_sequence_forward, spiking_lstm_step
from .model import PoseEstimate, PoseNet, PoseNetConfig, pose_loss
from .training import TrainConfig, TrainResult, save_checkpoint, train_pose_net

__all__ = [
    "PoseDataset",
    "WorkspaceSpec",
    "generate_pose_dataset",
    "load_pose_dataset",
    "SpikingLstmCell",
    "lstm_sequence_forward",
    "spiking_lstm_step",
    "PoseEstimate",
    "PoseNet",
    "PoseNetConfig",
    "pose_loss",
    "TrainConfig",
    "TrainResult",
    "save_checkpoint",
    "train_pose_net",
]
