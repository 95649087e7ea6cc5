"""Displacement-based formation errors, their dynamics and the step fitness.

This is the scalar reference path, one agent at a time. The batched rollout
kernels compute the same quantities for whole populations and are tested
against these functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dynamics import ActuationCommand, MissileState, SystemConstraints, TargetCommand, TargetState, wrap_angle
from .formation import FormationPattern


class IsolatedNodeWarning(RuntimeWarning):
    """A follower has no neighbours and no target feed; its error is forced to zero."""


@dataclass(frozen=True)
class CostWeights:
    k1: float = 0.15
    k2: float = 0.15
    k3: float = 0.1

    def __post_init__(self):
        if min(self.k1, self.k2, self.k3) <= 0:
            raise ValueError("cost weights must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3])


@dataclass(frozen=True)
class ErrorVector:
    e_x: float
    e_y: float
    e_theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.e_x, self.e_y, self.e_theta])


@dataclass(frozen=True)
class NeighborView:
    """What agent ``i`` may use: who it hears from and whether it sees the target."""

    neighbors: tuple[int, ...]
    zeta: int = 0

    def __post_init__(self):
        if self.zeta not in (0, 1):
            raise ValueError("zeta must be 0 or 1")


def tracking_error(
    i: int,
    states: Mapping[int, MissileState],
    pattern: FormationPattern,
    view: NeighborView,
    target: TargetState,
) -> np.ndarray:
    """Global-frame error of agent ``i``; heading terms are wrapped one by one."""
    if not view.neighbors and not view.zeta:
        warnings.warn(f"node {i} is isolated (no neighbours, no target)", IsolatedNodeWarning, stacklevel=2)
        return np.zeros(3)
    si = states[i]
    pi = pattern.offset(i)
    e = np.zeros(3)
    for j in view.neighbors:
        sj = states[j]
        pj = pattern.offset(j)
        e[0] += (pi[0] - pj[0]) - (si.x - sj.x)
        e[1] += (pi[1] - pj[1]) - (si.y - sj.y)
        e[2] += wrap_angle(sj.heading - si.heading)
    if view.zeta:
        e[0] += target.x + pi[0] - si.x
        e[1] += target.y + pi[1] - si.y
        e[2] += wrap_angle(target.heading - si.heading)
    return e


def rotate_error(e, alpha: float) -> ErrorVector:
    c, s = math.cos(alpha), math.sin(alpha)
    return ErrorVector(c * e[0] + s * e[1], -s * e[0] + c * e[1], wrap_angle(e[2]))


def error_rate(
    i: int,
    e_r: ErrorVector,
    states: Mapping[int, MissileState],
    commands: Mapping[int, ActuationCommand],
    view: NeighborView,
    target: TargetState | None,
    target_cmd: TargetCommand | None,
    constraints: SystemConstraints,
) -> np.ndarray:
    """Time derivative of the rotated error under the current commands.

    G_i u_i + sum_j F_ij u_j + D_i u_r + H_i, with the tau factors on the
    longitudinal-acceleration columns of G_i and F_ij kept as in the
    discrete-time construction.
    """
    tau = constraints.tau
    si = states[i]
    involved = [i, *view.neighbors]
    slow = [k for k in involved if states[k].speed < constraints.v_min - 1e-12]
    if slow:
        raise ValueError(f"speed below v_min for nodes {slow}")
    ui = commands[i]
    vi = si.speed
    big_l = len(view.neighbors)
    xi = view.zeta
    lx = big_l + xi
    rate = np.array([
        -tau * lx * ui.a_v + e_r.e_y / vi * ui.a_l - lx * vi,
        -e_r.e_x / vi * ui.a_l,
        -lx / vi * ui.a_l,
    ])
    for j in view.neighbors:
        sj = states[j]
        uj = commands[j]
        th = sj.heading - si.heading
        c, s = math.cos(th), math.sin(th)
        rate[0] += tau * c * uj.a_v + c * sj.speed
        rate[1] += tau * s * uj.a_v + s * sj.speed
        rate[2] += uj.a_l / sj.speed
    if xi:
        th = target.heading - si.heading
        rate[0] += math.cos(th) * target_cmd.v_r
        rate[1] += math.sin(th) * target_cmd.v_r
        rate[2] += target_cmd.w_r
    return rate


def fitness_step(e_r: ErrorVector, weights: CostWeights) -> float:
    return math.exp(-(weights.k1 * e_r.e_x ** 2 + weights.k2 * e_r.e_y ** 2 + weights.k3 * e_r.e_theta ** 2))


def resultant_error(e_r) -> float:
    if isinstance(e_r, ErrorVector):
        e_r = e_r.as_array()
    return float(np.linalg.norm(e_r))
