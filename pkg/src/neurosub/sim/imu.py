"""IMU synthesis from consecutive vehicle states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .vehicle import VehicleState

GRAVITY = 9.81  # m/s^2, world +z (z points down)


@dataclass(frozen=True)
class ImuNoise:
    sigma_a: float = 0.2
    sigma_g: float = 0.01
    bias_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bias_g: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "bias_a", np.asarray(self.bias_a, dtype=float))
        object.__setattr__(self, "bias_g", np.asarray(self.bias_g, dtype=float))


@dataclass
class ImuSample:
    accel: np.ndarray
    gyro: np.ndarray
    timestamp: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.accel, self.gyro])


def simulate_imu(
    prev: VehicleState,
    curr: VehicleState,
    dt: float,
    noise: ImuNoise,
    rng: np.random.Generator,
    timestamp: float = 0.0,
) -> ImuSample:
    """Specific force from finite-difference world acceleration plus gravity;
    gyro from body rates. Deterministic for a given generator state."""
    v_prev = prev.rotation() @ prev.nu[:3]
    v_curr = curr.rotation() @ curr.nu[:3]
    accel_world = (v_curr - v_prev) / dt
    gravity_world = np.array([0.0, 0.0, GRAVITY])
    specific_force = curr.rotation().T @ (accel_world - gravity_world)
    accel = specific_force + noise.bias_a + rng.normal(0.0, noise.sigma_a, 3)
    gyro = curr.nu[3:] + noise.bias_g + rng.normal(0.0, noise.sigma_g, 3)
    return ImuSample(accel=accel, gyro=gyro, timestamp=timestamp)


def hover_imu(
    state: VehicleState, noise: ImuNoise, rng: np.random.Generator, timestamp: float = 0.0
) -> ImuSample:
    """IMU for a static pose (window generation for pose datasets)."""
    return simulate_imu(state, state, 1.0, noise, rng, timestamp)
