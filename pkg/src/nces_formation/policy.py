"""Bias-free single-hidden-layer controller and its flat parameter vector."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ActuationCommand, SystemConstraints, wrap_angle
from .error_model import ErrorVector

HIDDEN = 16
OUTPUTS = 2


class LayoutMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    n_in: int = 5
    hidden: int = HIDDEN
    n_out: int = OUTPUTS

    @property
    def size(self) -> int:
        return self.hidden * self.n_in + self.n_out * self.hidden

    @classmethod
    def for_scenario(cls, with_switch_signal: bool) -> "Layout":
        return cls(6 if with_switch_signal else 5)


def param_count(layout: Layout) -> int:
    return layout.size


@dataclass(frozen=True)
class PolicyParams:
    w1: np.ndarray  # (hidden, n_in)
    w2: np.ndarray  # (n_out, hidden)

    @property
    def layout(self) -> Layout:
        return Layout(self.w1.shape[1], self.w1.shape[0], self.w2.shape[0])

    @classmethod
    def zeros(cls, layout: Layout) -> "PolicyParams":
        return unflatten(np.zeros(layout.size), layout)


@dataclass(frozen=True)
class Observation:
    alpha: float
    speed: float
    e_r: ErrorVector
    ts: float | None = None

    def as_array(self) -> np.ndarray:
        z = [wrap_angle(self.alpha), self.speed, self.e_r.e_x, self.e_r.e_y, self.e_r.e_theta]
        if self.ts is not None:
            z.append(float(self.ts))
        return np.array(z)


def flatten(params: PolicyParams) -> np.ndarray:
    return np.concatenate([params.w1.ravel(), params.w2.ravel()])


def unflatten(vec, layout: Layout) -> PolicyParams:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (layout.size,):
        raise LayoutMismatch(f"expected {layout.size} parameters, got shape {vec.shape}")
    k = layout.hidden * layout.n_in
    return PolicyParams(vec[:k].reshape(layout.hidden, layout.n_in).copy(),
                        vec[k:].reshape(layout.n_out, layout.hidden).copy())


def sigmoid(x):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def forward(params: PolicyParams, obs: Observation, constraints: SystemConstraints) -> ActuationCommand:
    z = obs.as_array()
    if z.shape[0] != params.w1.shape[1]:
        raise LayoutMismatch(f"observation has {z.shape[0]} inputs, policy expects {params.w1.shape[1]}")
    raw = np.tanh(params.w2 @ sigmoid(params.w1 @ z))
    return ActuationCommand(constraints.a_vmax * float(raw[0]), constraints.a_lmax * float(raw[1]))


# -- persistence ------------------------------------------------------------

PARAMS_FORMAT = "nces-formation/params/1"


def save_params(path, params: list[np.ndarray], layout: Layout, scenario: str, seed: int, extra: dict | None = None):
    doc = {
        "format": PARAMS_FORMAT,
        "layout": {"n_in": layout.n_in, "hidden": layout.hidden, "n_out": layout.n_out},
        "scenario": scenario,
        "seed": seed,
        "agents": [[float(v) for v in np.asarray(p).ravel()] for p in params],
    }
    if extra:
        doc.update(extra)
    from .io import atomic_write_text

    atomic_write_text(path, json.dumps(doc, indent=1))


def load_params(path) -> tuple[list[np.ndarray], Layout, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != PARAMS_FORMAT:
        raise LayoutMismatch(f"{path}: not a parameter file ({doc.get('format')!r})")
    layout = Layout(**doc["layout"])
    agents = [np.array(a, dtype=float) for a in doc["agents"]]
    for a in agents:
        if a.shape != (layout.size,):
            raise LayoutMismatch(f"{path}: agent vector of length {a.size}, layout needs {layout.size}")
    return agents, layout, doc

