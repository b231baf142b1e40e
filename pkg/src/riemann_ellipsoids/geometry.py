"""Shape domain, shape-triangle coordinates and the Z4 x Z2 momentum symmetry."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DOMAIN_MARGIN = 1e-10

COVER_MATRICES = (
    np.eye(3),
    np.diag([1.0, -1.0, -1.0]),
    np.diag([-1.0, 1.0, -1.0]),
    np.diag([-1.0, -1.0, 1.0]),
)
for _R in COVER_MATRICES:
    _R.flags.writeable = False


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class SemiAxes:
    """Point ``(b1, b2)`` of the shape domain; ``b3 = 1/(b1 b2)`` is derived.

    Membership requires ``b1 > b2 > b3`` with a relative margin, which keeps
    points off the coincident-axis set where the mass matrix blows up.
    """

    b1: float
    b2: float
    margin: float = DOMAIN_MARGIN

    def __post_init__(self):
        b1, b2 = float(self.b1), float(self.b2)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)
        if not (b1 > 0 and b2 > 0):
            raise DomainError(f"semiaxes must be positive: {(b1, b2)}")
        b3 = 1.0 / (b1 * b2)
        m = self.margin
        if not (b1 - b2 > m * b1 and b2 - b3 > m * b2):
            raise DomainError(f"b=({b1}, {b2}) is not in the domain b1 > b2 > b1^(-1/2)")

    @property
    def b3(self) -> float:
        return 1.0 / (self.b1 * self.b2)

    @property
    def axes(self):
        return (self.b1, self.b2, self.b3)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.b1, self.b2])

    def shifted(self, d1, d2) -> "SemiAxes":
        return SemiAxes(self.b1 + d1, self.b2 + d2, self.margin)


@dataclass(frozen=True)
class ShapeCoords:
    """``(x, y) = (b2/b1, b3/b1)`` in the open triangle ``0 < y < x < 1``."""

    x: float
    y: float

    def __post_init__(self):
        if not (0 < self.y < self.x < 1):
            raise DomainError(f"({self.x}, {self.y}) is outside the shape triangle")


@dataclass(frozen=True)
class MomentumPair:
    m_l: tuple
    m_r: tuple

    def __post_init__(self):
        object.__setattr__(self, "m_l", tuple(float(v) for v in self.m_l))
        object.__setattr__(self, "m_r", tuple(float(v) for v in self.m_r))
        if len(self.m_l) != 3 or len(self.m_r) != 3:
            raise ValueError("momenta are 3-vectors")

    @property
    def array(self) -> np.ndarray:
        """Stacked 6-vector ``(m_l, m_r)``."""
        return np.array(self.m_l + self.m_r)

    @classmethod
    def from_array(cls, v):
        v = np.asarray(v, dtype=float)
        return cls(tuple(v[:3]), tuple(v[3:]))

    def swapped(self) -> "MomentumPair":
        return MomentumPair(self.m_r, self.m_l)

    def is_zero(self) -> bool:
        return not any(self.m_l) and not any(self.m_r)


def to_shape_coords(b: SemiAxes) -> ShapeCoords:
    return ShapeCoords(b.b2 / b.b1, b.b3 / b.b1)


def from_shape_coords(s: ShapeCoords, margin=DOMAIN_MARGIN) -> SemiAxes:
    b1 = (s.x * s.y) ** (-1.0 / 3.0)
    return SemiAxes(b1, s.x * b1, margin)


def semiaxes_from_xy(x, y, margin=DOMAIN_MARGIN) -> SemiAxes:
    return from_shape_coords(ShapeCoords(x, y), margin)


def z4z2_orbit(m: MomentumPair):
    """Distinct images ``+-R_i m``; 8, 4 or 2 points (1 for ``m = 0``)."""
    v = m.array
    out = []
    for R in COVER_MATRICES:
        for sgn in (1.0, -1.0):
            w = sgn * np.concatenate([R @ v[:3], R @ v[3:]])
            if not any(np.array_equal(w, o) for o in out):
                out.append(w)
    return [MomentumPair.from_array(w) for w in out]


def are_equivalent(m: MomentumPair, n: MomentumPair, tol=0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    target = n.array
    return any(np.all(np.abs(o.array - target) <= tol) for o in z4z2_orbit(m))


def sample_shape_points(rng, count, margin=1e-3):
    """Uniform random points of the shape triangle kept ``margin`` off its edges."""
    pts = []
    while len(pts) < count:
        x, y = rng.uniform(0.0, 1.0, 2)
        if margin < y < x - margin and x < 1 - margin:
            pts.append((float(x), float(y)))
    return pts


def distance_to_edges(x, y) -> float:
    """Euclidean distance from ``(x, y)`` to the boundary of the shape triangle."""
    return min(y, 1.0 - x, (x - y) / math.sqrt(2.0))
