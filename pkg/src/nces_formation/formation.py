"""Parametric formation patterns and their inter-node distances."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class PatternKind(str, enum.Enum):
    POLYGON = "polygon"
    LINE = "line"


def rotate2(alpha: float, v) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


@dataclass(frozen=True)
class FormationPattern:
    """Offsets of nodes 1..N from the formation centre.

    ``mask`` optionally removes nodes to build asymmetric shapes (wedge,
    crescent); removed nodes keep their slot so ids stay stable.
    """

    kind: PatternKind
    n: int
    alpha_p: float
    l_f: float
    mask: tuple[bool, ...] | None = None
    offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"a formation needs at least 2 nodes, got {self.n}")
        if not self.l_f > 0:
            raise ValueError(f"formation size l_f must be positive, got {self.l_f}")
        if self.mask is not None and len(self.mask) != self.n:
            raise ValueError("mask length must equal n")
        object.__setattr__(self, "kind", PatternKind(self.kind))
        offsets = _offsets(self.kind, self.n, self.alpha_p, self.l_f)
        offsets.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)

    @property
    def ids(self) -> list[int]:
        if self.mask is None:
            return list(range(1, self.n + 1))
        return [i + 1 for i, keep in enumerate(self.mask) if keep]

    def offset(self, node: int) -> np.ndarray:
        return self.offsets[node - 1]

    def half_width(self) -> float:
        """Largest distance of any kept node from the centre."""
        idx = [i - 1 for i in self.ids]
        return float(np.max(np.hypot(self.offsets[idx, 0], self.offsets[idx, 1])))

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "n": self.n, "alpha_p": self.alpha_p, "l_f": self.l_f}
        if self.mask is not None:
            d["mask"] = list(self.mask)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FormationPattern":
        mask = d.get("mask")
        return cls(PatternKind(d["kind"]), int(d["n"]), float(d.get("alpha_p", 0.0)), float(d["l_f"]),
                   None if mask is None else tuple(bool(m) for m in mask))


def _offsets(kind: PatternKind, n: int, alpha_p: float, l_f: float) -> np.ndarray:
    i = np.arange(1, n + 1)
    if kind is PatternKind.POLYGON:
        phi = 2.0 * np.pi * (i - 1) / n
        base = np.stack([l_f * np.cos(phi), l_f * np.sin(phi)], axis=1)
    else:
        base = np.stack([l_f * (n - 2 * i + 1) / 2.0, np.zeros(n)], axis=1)
    c, s = math.cos(alpha_p), math.sin(alpha_p)
    rot = np.array([[c, -s], [s, c]])
    return base @ rot.T


def polygon_pattern(n: int, alpha_p: float = 0.0, l_f: float = 1.0) -> FormationPattern:
    return FormationPattern(PatternKind.POLYGON, n, alpha_p, l_f)


def line_pattern(n: int, alpha_p: float = 0.0, l_f: float = 1.0) -> FormationPattern:
    return FormationPattern(PatternKind.LINE, n, alpha_p, l_f)


def distance_matrix(pattern: FormationPattern) -> np.ndarray:
    diff = pattern.offsets[:, None, :] - pattern.offsets[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])
