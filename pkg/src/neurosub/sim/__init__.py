"""Deterministic fixed-step world: plant, renderer, IMU and scenarios."""

from .camera import CameraModel, TargetModel, render_frame
from .imu import ImuNoise, ImuSample, hover_imu, simulate_imu
from .scenario import (
    COLUMNS,
    CurrentProfile,
    RunResult,
    Scenario,
    ScenarioRunner,
    run_scenario,
    shared_control_scenario,
)
from .vehicle import VehicleState, step_dynamics

__all__ = [
    "CameraModel",
    "TargetModel",
    "render_frame",
    "ImuNoise",
    "ImuSample",
    "hover_imu",
    "simulate_imu",
    "COLUMNS",
    "CurrentProfile",
    "RunResult",
    "Scenario",
    "ScenarioRunner",
    "run_scenario",
    "shared_control_scenario",
    "VehicleState",
    "step_dynamics",
]
