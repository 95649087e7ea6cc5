"""Planar missile and reference-target kinematics.

Missiles follow a second-order unicycle model driven by longitudinal and
lateral acceleration; the reference target is a first-order unicycle driven
by speed and turn-rate commands. Units are km, s and rad throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

G_KM = 9.8e-3  # standard gravity, km/s^2


def wrap_angle(a: float) -> float:
    """Map an angle to (-pi, pi], sending -pi to +pi."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class SystemConstraints:
    v_min: float = 0.3
    v_max: float = 0.8
    a_vmax: float = 30 * G_KM
    a_lmax: float = 40 * G_KM
    tau: float = 0.1

    def __post_init__(self):
        for name in ("v_min", "v_max", "a_vmax", "a_lmax", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be below v_max")


@dataclass(frozen=True)
class MissileState:
    x: float
    y: float
    heading: float
    speed: float


@dataclass(frozen=True)
class ActuationCommand:
    a_v: float = 0.0
    a_l: float = 0.0


@dataclass(frozen=True)
class TargetState:
    x: float
    y: float
    heading: float


@dataclass(frozen=True)
class TargetCommand:
    v_r: float
    w_r: float


class InvalidTargetCommand(ValueError):
    """Target command outside the speed or lateral-acceleration envelope."""


def saturate(a_v: float, a_l: float, constraints: SystemConstraints) -> ActuationCommand:
    c = constraints
    return ActuationCommand(
        min(max(a_v, -c.a_vmax), c.a_vmax),
        min(max(a_l, -c.a_lmax), c.a_lmax),
    )


def step_missile(
    state: MissileState, cmd: ActuationCommand, constraints: SystemConstraints
) -> MissileState:
    """One explicit-Euler step; speed is clamped and heading wrapped afterwards."""
    tau = constraints.tau
    v = state.speed
    assert v > 0.0, "heading rate is singular at zero speed"
    x = state.x + v * math.cos(state.heading) * tau
    y = state.y + v * math.sin(state.heading) * tau
    heading = wrap_angle(state.heading + cmd.a_l / v * tau)
    speed = min(max(v + cmd.a_v * tau, constraints.v_min), constraints.v_max)
    return MissileState(x, y, heading, speed)


def check_target_command(cmd: TargetCommand, constraints: SystemConstraints, tol: float = 1e-12):
    if not (constraints.v_min - tol <= cmd.v_r <= constraints.v_max + tol):
        raise InvalidTargetCommand(f"target speed {cmd.v_r} outside [{constraints.v_min}, {constraints.v_max}]")
    if abs(cmd.w_r * cmd.v_r) > constraints.a_lmax + tol:
        raise InvalidTargetCommand(
            f"target lateral acceleration {abs(cmd.w_r * cmd.v_r):.4g} exceeds {constraints.a_lmax}"
        )


def step_target(state: TargetState, cmd: TargetCommand, constraints: SystemConstraints) -> TargetState:
    check_target_command(cmd, constraints)
    tau = constraints.tau
    return TargetState(
        state.x + cmd.v_r * math.cos(state.heading) * tau,
        state.y + cmd.v_r * math.sin(state.heading) * tau,
        wrap_angle(state.heading + cmd.w_r * tau),
    )
