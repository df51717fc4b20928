"""Lateral haptic force feedback.

Tracks the image-plane lateral error of the detected target, turns it into a
desired joystick displacement (PD), renders a spring-damper torque around the
joystick's lateral axis, and gates that torque off while the target sits
inside the allowable visual range. A small joystick/operator model closes
the loop for headless runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError

OPERATOR_PROFILES = ("passive", "compliant", "stubborn", "external")


@dataclass(frozen=True)
class HapticGains:
    """Spring/damper torque gains, PD error gains and the gate threshold.

    a converts radians of stick deflection to pixels of correction
    (px/rad); e_th is the allowable visual range in pixels.
    """

    A: float = 2.0
    B: float = 0.5
    a: float = 100.0
    k_p: float = 0.24
    k_v: float = 0.05
    e_th: float = 40.0

    def __post_init__(self):
        if min(self.A, self.B, self.a, self.e_th) <= 0:
            raise DomainError("A, B, a and e_th must be positive")
        if self.k_p < 0 or self.k_v < 0:
            raise DomainError("k_p and k_v must be non-negative")


@dataclass
class JoystickState:
    theta_x: float = 0.0
    theta_x_dot: float = 0.0


@dataclass(frozen=True)
class OperatorModel:
    """Joystick inertia/friction plus a scripted human torque profile."""

    inertia: float = 0.02
    friction: float = 0.1
    profile: str = "passive"
    theta_max: float = 0.5
    # Human hand as a light centering spring ("compliant") or a stiff hold
    # toward a commanded angle ("external").
    hold_stiffness: float = 2.0
    hold_damping: float = 0.5

    def __post_init__(self):
        if self.inertia <= 0 or self.friction < 0:
            raise DomainError("inertia must be positive, friction non-negative")
        if self.profile not in OPERATOR_PROFILES:
            raise DomainError(f"unknown operator profile {self.profile!r}")


def lateral_error(x_c: float, x_l: float) -> float:
    """Pixels between the frame centre x and the target centroid x."""
    return x_c - x_l


@dataclass
class ErrorRateFilter:
    """Backward difference low-passed with a first-order filter (tau_f s)."""

    tau_f: float = 0.1
    _prev_error: float | None = None
    _rate: float = 0.0
    primed: bool = field(default=False)

    def update(self, e_l: float, dt: float) -> float:
        if dt <= 0:
            raise DomainError("dt must be positive")
        if self._prev_error is None:
            self._prev_error = e_l
            self.primed = False  # single sample: rate defined as 0
            return 0.0
        raw = (e_l - self._prev_error) / dt
        self._prev_error = e_l
        alpha = dt / (self.tau_f + dt)
        self._rate += alpha * (raw - self._rate)
        self.primed = True
        return self._rate

    @property
    def rate(self) -> float:
        return self._rate if self.primed else 0.0


def desired_displacement(e_l: float, e_l_rate: float, gains: HapticGains) -> float:
    """PD law for the desired lateral stick angle (rad)."""
    return -(gains.k_p * e_l + gains.k_v * e_l_rate) / gains.a


def joystick_torque(state: JoystickState, theta_x_d: float, gains: HapticGains) -> float:
    """Spring toward the desired deflection plus rate damping (N*m)."""
    return -gains.A * (state.theta_x - theta_x_d) - gains.B * state.theta_x_dot


def gate_torque(tau_j_x: float, e_l: float, e_th: float) -> float:
    """Memoryless gate: torque passes only when |e_l| >= e_th (boundary
    inclusive). The closed-loop controller layers hysteresis on top."""
    if e_th <= 0:
        raise DomainError("e_th must be positive")
    return tau_j_x if abs(e_l) >= e_th else 0.0


def operator_step(
    state: JoystickState,
    tau_final: float,
    model: OperatorModel,
    dt: float,
    *,
    external_theta: float = 0.0,
) -> JoystickState:
    """Semi-implicit Euler step of the joystick under feedback torque and the
    scripted human torque; deflection clamped at the hardware limit."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    if model.profile == "stubborn":
        return JoystickState(theta_x=state.theta_x, theta_x_dot=0.0)

    if model.profile == "passive":
        tau_human = 0.0
    elif model.profile == "compliant":
        tau_human = -model.hold_stiffness * state.theta_x - model.hold_damping * state.theta_x_dot
    else:  # external: hand drives the stick toward the commanded angle
        tau_human = (
            model.hold_stiffness * (external_theta - state.theta_x)
            - model.hold_damping * state.theta_x_dot
        )

    accel = (tau_final + tau_human - model.friction * state.theta_x_dot) / model.inertia
    vel = state.theta_x_dot + accel * dt
    theta = state.theta_x + vel * dt
    if theta > model.theta_max:
        theta, vel = model.theta_max, 0.0
    elif theta < -model.theta_max:
        theta, vel = -model.theta_max, 0.0
    return JoystickState(theta_x=theta, theta_x_dot=vel)
