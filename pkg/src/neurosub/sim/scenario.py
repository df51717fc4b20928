"""Deterministic fixed-step scenario execution.

One loop owns all state: render at camera rate, enhance, detect, compute the
lateral-error (haptics) and pose-error (PBVS) paths at control rate, blend
through the conditional controller, integrate the joystick/operator and the
vehicle every tick, and log everything. Identical scenario + seed gives
bit-identical CSV logs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import ConfigurationError, DomainError
from ..geometry import quat_from_euler
from ..haptics import (
    ErrorRateFilter,
    HapticGains,
    JoystickState,
    OperatorModel,
    desired_displacement,
    joystick_torque,
    lateral_error,
    operator_step,
)
from ..pbvs import (
    DEFAULT_TORQUE_MAP,
    DEFAULT_VELOCITY_LIMITS,
    HysteresisGate,
    final_control,
    pbvs_law,
    pose_error,
)
from ..perception.detector import (
    BoundingBox,
    DetectionTracker,
    SnnDetector,
    centroid,
    classical_detect,
)
from ..perception.frame import write_pgm
from ..perception.haze import HazeParams, enhance
from .camera import CameraModel, TargetModel, render_frame
from .imu import ImuNoise, simulate_imu
from .vehicle import VehicleState, step_dynamics


@dataclass
class CurrentProfile:
    """Water-current disturbance, world frame (m/s)."""

    type: str = "none"  # "none" | "constant"
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t_start: float = 0.0
    t_end: float | None = None
    enabled: bool = True

    def __post_init__(self):
        self.velocity = np.asarray(self.velocity, dtype=float)

    def at(self, t: float) -> np.ndarray:
        if not self.enabled or self.type == "none" or t < self.t_start:
            return np.zeros(3)
        if self.t_end is not None and t >= self.t_end:
            return np.zeros(3)
        return self.velocity


@dataclass
class Scenario:
    name: str = "scenario"
    duration: float = 30.0
    dt_sim: float = 0.01
    control_rate: float = 20.0
    camera_rate: float = 10.0
    seed: int = 42
    haze: HazeParams = field(default_factory=lambda: HazeParams(beta=0.3, airlight=0.7))
    camera: CameraModel = field(default_factory=CameraModel)
    target: TargetModel = field(default_factory=TargetModel)
    initial_position: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.0, 0.0]))
    initial_rpy: tuple[float, float, float] = (0.0, 0.0, 0.0)
    station: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.0, 0.0]))
    mode: str = "station"  # "station" | "cruise"
    surge_speed: float = 0.2
    lam: float = 0.5
    velocity_limits: np.ndarray = field(default_factory=lambda: DEFAULT_VELOCITY_LIMITS.copy())
    torque_map: np.ndarray = field(default_factory=lambda: DEFAULT_TORQUE_MAP.copy())
    hysteresis_band: float = 5.0
    haptics_enabled: bool = True
    gains: HapticGains = field(default_factory=HapticGains)
    operator: OperatorModel = field(default_factory=OperatorModel)
    current: CurrentProfile = field(default_factory=CurrentProfile)
    imu_noise: ImuNoise = field(default_factory=ImuNoise)
    detector: str = "classical"  # "classical" | "truth" | checkpoint path
    pose_source: str = "truth"  # "truth" | checkpoint path
    frame_dump_every: int = 0
    max_stale_frames: int = 10

    def __post_init__(self):
        self.initial_position = np.asarray(self.initial_position, dtype=float)
        self.station = np.asarray(self.station, dtype=float)
        self.velocity_limits = np.asarray(self.velocity_limits, dtype=float)
        self.torque_map = np.asarray(self.torque_map, dtype=float)
        if self.duration <= 0 or self.dt_sim <= 0:
            raise DomainError("duration and dt_sim must be positive")
        for rate, label in ((self.control_rate, "control"), (self.camera_rate, "camera")):
            ticks = 1.0 / (rate * self.dt_sim)
            if abs(ticks - round(ticks)) > 1e-9:
                raise DomainError(f"{label} rate must divide 1/dt_sim")
        if self.mode not in ("station", "cruise"):
            raise DomainError(f"unknown scenario mode {self.mode!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "Scenario":
        data = json.loads(Path(path).read_text())
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        kw = dict(data)
        if "haze" in kw:
            kw["haze"] = HazeParams(**kw["haze"])
        if "camera" in kw:
            kw["camera"] = CameraModel(**kw["camera"])
        if "target" in kw:
            tgt = dict(kw["target"])
            if "rpy" in tgt:
                tgt["quat"] = quat_from_euler(*tgt.pop("rpy"))
            kw["target"] = TargetModel(**tgt)
        if "gains" in kw:
            kw["gains"] = HapticGains(**kw["gains"])
        if "operator" in kw:
            kw["operator"] = OperatorModel(**kw["operator"])
        if "current" in kw:
            kw["current"] = CurrentProfile(**kw["current"])
        if "imu_noise" in kw:
            kw["imu_noise"] = ImuNoise(**kw["imu_noise"])
        if "initial_rpy" in kw:
            kw["initial_rpy"] = tuple(kw["initial_rpy"])
        return cls(**kw)


COLUMNS = (
    ["tick", "t", "e_l", "e_l_rate", "gate", "mode_haptic", "tau_j", "tau_final"]
    + ["theta_x", "theta_x_dot", "theta_d", "theta_cmd"]
    + ["det_stale", "det_lost", "centroid_x", "centroid_y"]
    + ["bbox_cx", "bbox_cy", "bbox_w", "bbox_h"]
    + [f"e_p_{i}" for i in range(6)]
    + [f"v_pbvs_{i}" for i in range(6)]
    + [f"v_final_{i}" for i in range(6)]
    + [f"nu_{i}" for i in range(6)]
    + ["pos_x", "pos_y", "pos_z", "q_w", "q_x", "q_y", "q_z"]
    + ["cur_x", "cur_y", "cur_z"]
)


@dataclass
class RunResult:
    scenario: Scenario
    rows: list[list[float]]
    events: list[dict]
    csv_path: Path | None = None

    def column(self, name: str) -> np.ndarray:
        idx = COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows], dtype=float)

    def csv_bytes(self) -> bytes:
        lines = [",".join(COLUMNS)]
        for row in self.rows:
            lines.append(",".join(repr(v) for v in row))
        return ("\n".join(lines) + "\n").encode("ascii")


class ScenarioRunner:
    """Holds the mutable loop state; serve() drives it tick by tick."""

    def __init__(self, scenario: Scenario, out_dir: str | Path | None = None):
        self.scenario = scenario
        self.out_dir = Path(out_dir) if out_dir else None
        s = scenario
        self.camera_every = round(1.0 / (s.camera_rate * s.dt_sim))
        self.control_every = round(1.0 / (s.control_rate * s.dt_sim))
        self.n_ticks = round(s.duration / s.dt_sim)
        self.snn_detector = None
        if s.detector not in ("classical", "truth"):
            self.snn_detector = SnnDetector.from_checkpoint(s.detector)
        self.pose_net = None
        if s.pose_source != "truth":
            from ..posenet.model import PoseNet

            self.pose_net = PoseNet.load(s.pose_source)
        self.reset()

    def reset(self) -> None:
        s = self.scenario
        self.rng = np.random.default_rng(s.seed)
        self.vehicle = VehicleState(
            position=s.initial_position.copy(), quat=quat_from_euler(*s.initial_rpy)
        )
        self.prev_vehicle = self.vehicle.copy()
        self.joystick = JoystickState()
        self.gate = HysteresisGate(e_th=s.gains.e_th, band=s.hysteresis_band)
        self.err_filter = ErrorRateFilter()
        self.tracker = DetectionTracker(max_stale=s.max_stale_frames)
        self.operator = s.operator
        self.external_theta = 0.0
        self.tick = 0
        self.e_l = 0.0
        self.e_l_rate = 0.0
        self.theta_d = 0.0
        self.tau_j = 0.0
        self.tau_final = 0.0
        self.mode = "pbvs"
        self.centroid_px = (s.camera.cx, s.camera.cy)
        self.bbox: BoundingBox | None = None
        self.det_stale = False
        self.det_lost = False
        self.measured_position = self.vehicle.position.copy()
        self.measured_quat = self.vehicle.quat.copy()
        self.e_p = np.zeros(6)
        self.v_pbvs = np.zeros(6)
        self.v_cmd = np.zeros(6)
        self.last_frame = None
        self.last_enhanced = None
        self.imu_window: list[np.ndarray] = []
        self.rows: list[list[float]] = []
        self.events: list[dict] = []
        self.current_enabled = s.current.enabled

    # -- tick phases --------------------------------------------------------

    def _perceive(self, t: float) -> None:
        s = self.scenario
        frame, gt_box, depth = render_frame(
            self.vehicle, s.camera, s.target, s.haze, timestamp=t
        )
        self.last_frame = frame
        if s.haze.beta > 0:
            enhanced = enhance(frame, s.haze, depth)
        else:
            enhanced = frame
        self.last_enhanced = enhanced

        if s.detector == "truth":
            box = gt_box
        elif self.snn_detector is not None:
            box = self.snn_detector.detect(enhanced)
        else:
            box = classical_detect(enhanced)
        tracked = self.tracker.update(box)
        was_lost = self.det_lost
        self.det_stale = tracked.stale
        self.det_lost = tracked.lost
        if self.det_lost and not was_lost:
            self.events.append({"tick": self.tick, "type": "detection_lost"})
        self.bbox = tracked.box
        if tracked.box is not None:
            c = centroid(tracked.box, s.camera.width, s.camera.height)
            self.centroid_px = (c.x_l, c.y_l)
            self.e_l = lateral_error(s.camera.cx, c.x_l)

        if self.pose_net is not None and len(self.imu_window) >= 10:
            est = self.pose_net.predict(
                enhanced.pixels, np.stack(self.imu_window[-10:]), seed=s.seed + self.tick
            )
            self.measured_position = est.translation
            self.measured_quat = est.quat
        else:
            self.measured_position = self.vehicle.position.copy()
            self.measured_quat = self.vehicle.quat.copy()

        if self.out_dir and s.frame_dump_every and (
            self.tick // self.camera_every
        ) % s.frame_dump_every == 0:
            dump = self.out_dir / "frames"
            dump.mkdir(parents=True, exist_ok=True)
            write_pgm(frame, dump / f"raw_{self.tick:06d}.pgm")
            write_pgm(enhanced, dump / f"enh_{self.tick:06d}.pgm")

    def _control(self) -> None:
        s = self.scenario
        control_dt = 1.0 / s.control_rate
        self.e_l_rate = self.err_filter.update(self.e_l, control_dt)
        self.theta_d = desired_displacement(self.e_l, self.e_l_rate, s.gains)
        self.tau_j = joystick_torque(self.joystick, self.theta_d, s.gains)
        if s.haptics_enabled:
            was = self.gate.engaged
            engaged = self.gate.update(self.e_l)
            if engaged != was:
                self.events.append(
                    {
                        "tick": self.tick,
                        "type": "gate_engaged" if engaged else "gate_released",
                        "e_l": self.e_l,
                    }
                )
        else:
            engaged = False
        self.tau_final = self.tau_j if engaged else 0.0

        err = pose_error(self.measured_position, self.measured_quat, s.station)
        v_raw = pbvs_law(err, self.measured_position, s.lam)
        self.e_p = err.vector
        if self.det_lost:
            v_raw[:3] = 0.0  # freeze translation commands on detection loss
        if s.mode == "cruise":
            v_raw[0] = s.surge_speed
        self.v_pbvs = np.clip(v_raw, -s.velocity_limits, s.velocity_limits)
        cmd = final_control(
            self.v_pbvs,
            self.tau_final,
            engaged,
            torque_map=s.torque_map,
            limits=s.velocity_limits,
        )
        self.v_cmd = cmd.v
        self.mode = cmd.mode

    def step(self) -> None:
        s = self.scenario
        t = self.tick * s.dt_sim
        if self.tick % self.camera_every == 0:
            self._perceive(t)
        if self.tick % self.control_every == 0:
            self._control()

        tau = self.tau_final if s.haptics_enabled else 0.0
        self.joystick = operator_step(
            self.joystick, tau, self.operator, s.dt_sim, external_theta=self.external_theta
        )

        current = s.current.at(t) if self.current_enabled else np.zeros(3)
        self.prev_vehicle = self.vehicle
        self.vehicle = step_dynamics(self.vehicle, self.v_cmd, current, s.dt_sim)
        imu = simulate_imu(
            self.prev_vehicle, self.vehicle, s.dt_sim, s.imu_noise, self.rng, timestamp=t
        )
        self.imu_window.append(imu.as_array())
        if len(self.imu_window) > 20:
            self.imu_window = self.imu_window[-20:]

        self._log_row(t, current)
        self.tick += 1

    def _log_row(self, t: float, current: np.ndarray) -> None:
        bbox = self.bbox
        row = (
            [
                float(self.tick),
                t,
                self.e_l,
                self.e_l_rate,
                1.0 if self.gate.engaged else 0.0,
                1.0 if self.mode == "pbvs+haptic" else 0.0,
                self.tau_j,
                self.tau_final,
                self.joystick.theta_x,
                self.joystick.theta_x_dot,
                self.theta_d,
                self.external_theta,
                1.0 if self.det_stale else 0.0,
                1.0 if self.det_lost else 0.0,
                self.centroid_px[0],
                self.centroid_px[1],
            ]
            + (
                [bbox.cx, bbox.cy, bbox.w, bbox.h]
                if bbox is not None
                else [float("nan")] * 4
            )
            + list(self.e_p)
            + list(self.v_pbvs)
            + list(self.v_cmd)
            + list(self.vehicle.nu)
            + list(self.vehicle.position)
            + list(self.vehicle.quat)
            + list(current)
        )
        self.rows.append(row)

    def run(self, tick_hook: Callable[["ScenarioRunner"], None] | None = None) -> RunResult:
        while self.tick < self.n_ticks:
            self.step()
            if tick_hook is not None:
                tick_hook(self)
        return self.finish()

    def finish(self) -> RunResult:
        result = RunResult(scenario=self.scenario, rows=self.rows, events=self.events)
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            csv_path = self.out_dir / f"{self.scenario.name}.csv"
            csv_path.write_bytes(result.csv_bytes())
            result.csv_path = csv_path
            events_path = self.out_dir / f"{self.scenario.name}_events.jsonl"
            with open(events_path, "w") as fh:
                for event in self.events:
                    fh.write(json.dumps(event) + "\n")
        return result


def run_scenario(
    scenario: Scenario,
    out_dir: str | Path | None = None,
    tick_hook: Callable[[ScenarioRunner], None] | None = None,
) -> RunResult:
    return ScenarioRunner(scenario, out_dir=out_dir).run(tick_hook)


def shared_control_scenario(
    operator_profile: str = "compliant",
    haptics_enabled: bool = True,
    seed: int = 42,
    duration: float = 30.0,
) -> Scenario:
    """Acceptance scenario S1: a lateral current pushes the centroid past the
    gate threshold; the haptic path (compliant operator) recovers it."""
    return Scenario(
        name=f"s1_{operator_profile}" + ("" if haptics_enabled else "_nohaptics"),
        duration=duration,
        seed=seed,
        mode="station",
        haptics_enabled=haptics_enabled,
        operator=OperatorModel(profile=operator_profile),
        current=CurrentProfile(type="constant", velocity=[0.0, 0.25, 0.0], t_start=1.0),
        gains=HapticGains(),
        target=TargetModel(position=np.array([3.0, 0.0, 0.0]), side=0.5, albedo=0.9),
        station=np.array([0.5, 0.0, 0.0]),
        initial_position=np.array([0.5, 0.0, 0.0]),
    )
