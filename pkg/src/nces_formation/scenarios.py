"""Scenario definitions: target programs, initial conditions, obstacles, failures.

Scenarios round-trip through TOML so the built-ins can be exported, edited
and loaded back.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np
import tomli_w

from .dynamics import (
    SystemConstraints,
    TargetCommand,
    TargetState,
    check_target_command,
)
from .error_model import CostWeights
from .formation import FormationPattern, PatternKind, polygon_pattern

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class TargetProgram:
    """Open-loop target command as a function of time.

    constant: (v, w); ramp: (v + dv t, w + dw t); sinusoid: (v, amp cos(freq t)).
    """

    kind: str = "constant"
    v: float = 0.5
    w: float = 0.0
    dv: float = 0.0
    dw: float = 0.0
    amp: float = 0.0
    freq: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "ramp", "sinusoid"):
            raise ScenarioError(f"unknown target program {self.kind!r}")

    def command(self, t: float) -> TargetCommand:
        if self.kind == "constant":
            return TargetCommand(self.v, self.w)
        if self.kind == "ramp":
            return TargetCommand(self.v + self.dv * t, self.w + self.dw * t)
        return TargetCommand(self.v, self.amp * math.cos(self.freq * t))


@dataclass(frozen=True)
class InitSpec:
    """Initial missile states.

    ``formation``: on the pattern slots around the target, with the target's
    heading and ``speed``, optionally jittered by up to ``jitter`` km per axis.
    ``box``: uniform positions in [x0, x1] x [y0, y1], headings uniform in
    (-pi, pi], all at ``speed``.
    """

    kind: str = "formation"
    speed: float = 0.5
    jitter: float = 0.0
    x0: float = 0.0
    x1: float = 0.0
    y0: float = 0.0
    y1: float = 0.0

    def __post_init__(self):
        if self.kind not in ("formation", "box"):
            raise ScenarioError(f"unknown init kind {self.kind!r}")
        if self.kind == "box" and not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ScenarioError("random init box must have positive area")

    @property
    def random(self) -> bool:
        return self.kind == "box" or self.jitter > 0


@dataclass(frozen=True)
class Obstacle:
    """Two collinear wall segments leaving a gap, perpendicular to travel.

    The wall lies on the line ``axis`` = ``position`` (axis 'y' means a wall
    of constant y crossed while flying towards +y). The gap is centred at
    ``center`` on the other axis. While the head is inside the detection
    window the swarm flies ``alternate`` instead of the base pattern.
    """

    position: float
    center: float
    gap: float
    alternate: FormationPattern
    axis: str = "y"
    length: float = 3.0

    def __post_init__(self):
        if not self.gap > 0:
            raise ScenarioError("wall gap width must be positive")
        if self.axis not in ("x", "y"):
            raise ScenarioError("obstacle axis must be 'x' or 'y'")

    def along(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return xy[..., 1] if self.axis == "y" else xy[..., 0]

    def lateral(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return xy[..., 0] if self.axis == "y" else xy[..., 1]

    def segments(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        lo, hi = self.center - self.gap / 2, self.center + self.gap / 2
        spans = [(lo - self.length, lo), (hi, hi + self.length)]
        if self.axis == "y":
            return [((a, self.position), (b, self.position)) for a, b in spans]
        return [((self.position, a), (self.position, b)) for a, b in spans]


def lateral_half_width(pattern: FormationPattern, axis: str) -> float:
    """Largest offset of any kept node across the direction of travel."""
    idx = [i - 1 for i in pattern.ids]
    col = 0 if axis == "y" else 1
    return float(np.max(np.abs(pattern.offsets[idx, col])))


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    pattern: FormationPattern
    target_program: TargetProgram
    target_start: TargetState = TargetState(0.0, 0.0, 0.0)
    init: InitSpec = InitSpec()
    obstacles: tuple[Obstacle, ...] = ()
    failures: tuple[tuple[float, tuple[int, ...]], ...] = ()
    episode_length: float = 40.0
    detection_range: float | None = None
    safe_distance: float = 1.0
    seed: int = 0
    constraints: SystemConstraints = field(default_factory=SystemConstraints)
    weights: CostWeights = field(default_factory=CostWeights)

    def __post_init__(self):
        times = [t for t, _ in self.failures]
        if times != sorted(times):
            raise ScenarioError("failure times must be increasing")
        for t, nodes in self.failures:
            if not 0 <= t < self.episode_length:
                raise ScenarioError(f"failure at t={t} lies outside the episode")
            bad = [k for k in nodes if not 1 <= k <= self.n_missiles]
            if bad:
                raise ScenarioError(f"failure names unknown nodes {bad}")
        for ob in self.obstacles:
            if ob.alternate.n != self.pattern.n:
                raise ScenarioError("alternate pattern must have the same node count")
        pos = [ob.position for ob in self.obstacles]
        if pos != sorted(pos):
            raise ScenarioError("obstacles must be ordered along the path")

    @property
    def n_missiles(self) -> int:
        return self.pattern.n

    @property
    def with_switch_signal(self) -> bool:
        return bool(self.obstacles)

    @property
    def n_steps(self) -> int:
        return int(round(self.episode_length / self.constraints.tau))

    @property
    def d_c(self) -> float:
        if self.detection_range is not None:
            return self.detection_range
        return self.pattern.n * self.pattern.l_f

    def patterns(self) -> list[FormationPattern]:
        """Base pattern followed by each obstacle's alternate."""
        return [self.pattern, *(ob.alternate for ob in self.obstacles)]

    def validate_target_program(self):
        tau = self.constraints.tau
        for k in range(self.n_steps):
            check_target_command(self.target_program.command(k * tau), self.constraints)

    def initial_states(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """(N, 4) array of x, y, heading, speed."""
        n = self.n_missiles
        init = self.init
        out = np.empty((n, 4))
        if init.kind == "formation":
            t = self.target_start
            out[:, 0] = t.x + self.pattern.offsets[:, 0]
            out[:, 1] = t.y + self.pattern.offsets[:, 1]
            out[:, 2] = t.heading
            if init.jitter > 0:
                out[:, :2] += rng.uniform(-init.jitter, init.jitter, size=(n, 2))
        else:
            out[:, 0] = rng.uniform(init.x0, init.x1, size=n)
            out[:, 1] = rng.uniform(init.y0, init.y1, size=n)
            # uniform on (-pi, pi]
            out[:, 2] = np.pi - rng.uniform(0.0, 2.0 * np.pi, size=n)
        out[:, 3] = init.speed
        return out

    # -- TOML ------------------------------------------------------------

    def to_dict(self) -> dict:
        c = self.constraints
        d = {
            "name": self.name,
            "episode_length": self.episode_length,
            "seed": self.seed,
            "safe_distance": self.safe_distance,
            "pattern": self.pattern.to_dict(),
            "target": {
                "start": {"x": self.target_start.x, "y": self.target_start.y, "heading": self.target_start.heading},
                "program": _nonzero(self.target_program.__dict__, keep=("kind", "v")),
            },
            "init": _nonzero(self.init.__dict__, keep=("kind", "speed")),
            "constraints": {"v_min": c.v_min, "v_max": c.v_max, "a_vmax": c.a_vmax, "a_lmax": c.a_lmax, "tau": c.tau},
            "weights": {"k1": self.weights.k1, "k2": self.weights.k2, "k3": self.weights.k3},
        }
        if self.detection_range is not None:
            d["detection_range"] = self.detection_range
        if self.failures:
            d["failures"] = [{"time": t, "nodes": list(nodes)} for t, nodes in self.failures]
        if self.obstacles:
            d["obstacles"] = [
                {"axis": o.axis, "position": o.position, "center": o.center, "gap": o.gap,
                 "length": o.length, "alternate": o.alternate.to_dict()}
                for o in self.obstacles
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        try:
            target = d.get("target", {})
            start = target.get("start", {})
            kw = dict(
                name=d["name"],
                pattern=FormationPattern.from_dict(d["pattern"]),
                target_program=TargetProgram(**target.get("program", {})),
                target_start=TargetState(float(start.get("x", 0.0)), float(start.get("y", 0.0)),
                                         float(start.get("heading", 0.0))),
                init=InitSpec(**d.get("init", {})),
                obstacles=tuple(
                    Obstacle(position=o["position"], center=o["center"], gap=o["gap"],
                             alternate=FormationPattern.from_dict(o["alternate"]),
                             axis=o.get("axis", "y"), length=o.get("length", 3.0))
                    for o in d.get("obstacles", [])
                ),
                failures=tuple((float(f["time"]), tuple(int(k) for k in f["nodes"])) for f in d.get("failures", [])),
                episode_length=float(d.get("episode_length", 40.0)),
                detection_range=d.get("detection_range"),
                safe_distance=float(d.get("safe_distance", 1.0)),
                seed=int(d.get("seed", 0)),
                constraints=SystemConstraints(**d.get("constraints", {})),
                weights=CostWeights(**d.get("weights", {})),
            )
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc
        return cls(**kw)

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "ScenarioSpec":
        return cls.from_dict(tomllib.loads(text))

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return replace(self, seed=seed)


def _nonzero(d: dict, keep=()) -> dict:
    return {k: v for k, v in d.items() if k in keep or v}


def load_scenario(path) -> ScenarioSpec:
    with open(path, "rb") as fh:
        return ScenarioSpec.from_dict(tomllib.load(fh))


def switch_signal(head_xy, obstacles, d_c: float, safe_distance: float):
    """Switch signal and active obstacle index (-1 for none) for head position(s).

    TS is 1 from the moment the head is within ``d_c`` of a wall until it is
    ``safe_distance`` past it. Accepts a single (2,) position or an (m, 2)
    batch.
    """
    head_xy = np.asarray(head_xy, dtype=float)
    active = np.full(head_xy.shape[:-1], -1, dtype=np.int64)
    for k, ob in enumerate(obstacles):
        rel = ob.along(head_xy) - ob.position
        inside = (rel >= -d_c) & (rel <= safe_distance)
        active = np.where((active < 0) & inside, k, active)
    ts = (active >= 0).astype(float)
    if head_xy.ndim == 1:
        return float(ts), int(active)
    return ts, active


# -- built-ins -------------------------------------------------------------

def builtin_scenarios() -> dict[str, ScenarioSpec]:
    pent = polygon_pattern(5, 0.0, 0.5)
    hexa = polygon_pattern(6, 0.0, 0.5)
    north = TargetState(0.0, 0.0, math.pi / 2)
    specs = [
        ScenarioSpec(
            "basic-linear", pent, TargetProgram("constant", v=0.5),
            target_start=TargetState(0.0, 0.0, math.pi / 4),
        ),
        ScenarioSpec(
            "basic-spiral", pent, TargetProgram("ramp", v=0.65, w=0.1, dv=-0.01, dw=0.01),
            target_start=TargetState(0.0, 0.0, 0.0),
            # v_r reaches v_min = 0.3 km/s at t = 35 s
            episode_length=35.0,
        ),
        ScenarioSpec(
            "move-into-formation", pent, TargetProgram("constant", v=0.5),
            target_start=north,
            init=InitSpec("box", speed=0.5, x0=-2.0, x1=2.0, y0=-3.5, y1=-0.5),
        ),
        ScenarioSpec(
            "switch-formation", pent, TargetProgram("constant", v=0.5),
            target_start=north,
            obstacles=(
                Obstacle(position=6.0, center=0.0, gap=1.0, alternate=polygon_pattern(5, -math.pi / 4, 0.5)),
                Obstacle(position=14.0, center=0.0, gap=0.6, alternate=polygon_pattern(5, 0.0, 0.2)),
            ),
        ),
        ScenarioSpec(
            "node-failure", hexa, TargetProgram("sinusoid", v=0.5, amp=0.3, freq=0.15),
            target_start=TargetState(0.0, 0.0, 0.0),
            failures=((20.0, (1, 4)),),
        ),
    ]
    return {s.name: s for s in specs}


def get_scenario(name: str) -> ScenarioSpec:
    specs = builtin_scenarios()
    if name not in specs:
        raise ScenarioError(f"unknown scenario {name!r}; choose from {sorted(specs)}")
    return specs[name]


__all__ = [
    "InitSpec", "Obstacle", "ScenarioError", "ScenarioSpec", "TargetProgram", "PatternKind",
    "builtin_scenarios", "get_scenario", "lateral_half_width", "load_scenario", "switch_signal",
]
