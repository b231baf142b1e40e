"""The five families of Riemann ellipsoids: existence regions and momenta.

Index conventions are frozen per family; the generic permutation machinery
used to cross-check them lives in :mod:`riemann_ellipsoids.oracles`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import MomentumPair, SemiAxes
from .potential import c1_c2

RADICAND_CLIP = 1e-12


class EllipsoidType(str, enum.Enum):
    S2 = "S2"
    S3 = "S3"
    I = "I"
    II = "II"
    III = "III"

    @property
    def is_s_type(self) -> bool:
        return self in (EllipsoidType.S2, EllipsoidType.S3)


class Branch(str, enum.Enum):
    PlusMinus = "PlusMinus"   # m_l = mu^+, m_r = mu^-
    MinusPlus = "MinusPlus"   # adjoint: m_l = mu^-, m_r = mu^+


class Parallelism(str, enum.Enum):
    Coparallel = "Coparallel"
    Counterparallel = "Counterparallel"
    Irrotational = "Irrotational"
    Planar = "Planar"


class RegionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scalar family functions (arguments are semiaxes x, y, z in any order)


def GS(sign, x, y, z, g=1.0):
    """``G^S_+`` for ``sign=+1`` and ``G^S_-`` for ``sign=-1``."""
    c1, c2 = c1_c2((x, y, z), g)
    return (x - sign * z) ** 4 / (x * z) * (
        (x * y * y * z + sign * (x * x * y * y - x * x * z * z + y * y * z * z)) * c1
        + (x * z + sign * y * y) * c2)


def GS_plus(x, y, z, g=1.0):
    return GS(+1, x, y, z, g)


def GS_minus(x, y, z, g=1.0):
    return GS(-1, x, y, z, g)


def Gtilde(x, y, z, g=1.0):
    c1, c2 = c1_c2((x, y, z), g)
    return x * x * (y * y - z * z) * c1 + (y * y - 4 * z * z) * (z * z * c1 + c2)


def Dfun(x, y, z):
    return x * x * (y * y - z * z) + z * z * (4 * z * z - y * y)


def GR(sign, x, y, z, g=1.0):
    return ((y - sign * z) ** 4 * (x * x - (y + sign * 2 * z) ** 2)
            * (x * x - z * z) / (x * x - y * y) * Gtilde(x, y, z, g) / Dfun(x, y, z))


def GR_plus(x, y, z, g=1.0):
    return GR(+1, x, y, z, g)


def GR_minus(x, y, z, g=1.0):
    return GR(-1, x, y, z, g)


def _root(v, name):
    if v < 0:
        if v < -RADICAND_CLIP * max(1.0, abs(v)):
            raise RegionError(f"negative radicand {name}={v:.3e}")
        return 0.0
    return math.sqrt(v)


def _N(G, sign, x, y, z, g):
    return 0.5 * (_root(G(+1, x, y, z, g), "G+") + sign * _root(G(-1, x, y, z, g), "G-"))


def NS(sign, x, y, z, g=1.0):
    return _N(GS, sign, x, y, z, g)


def NR(sign, x, y, z, g=1.0):
    return _N(GR, sign, x, y, z, g)


def zero_pressure(b: SemiAxes, g=1.0):
    """Left side of the zero-pressure curve ``D(b1,b3,b2) C0 + 6 b2^2 C1 + 3 C2``."""
    from .potential import cn
    b1, b2, b3 = b.axes
    a = (b1, b2, b3)
    return Dfun(b1, b3, b2) * cn(a, 0, g) + 6 * b2 * b2 * cn(a, 1, g) + 3 * cn(a, 2, g)


def irrotational_I(b: SemiAxes):
    """Vanishes on the curve of irrotational type-I ellipsoids."""
    b1, b2, b3 = b.axes
    return b1 * b1 * b2 * b2 + b1 * b1 * b3 * b3 + b2 * b2 * b3 * b3 - 3 * b2 ** 4


# ---------------------------------------------------------------------------
# regions and momenta


def region_contains(kind, b: SemiAxes, g=1.0) -> bool:
    kind = EllipsoidType(kind)
    b1, b2, b3 = b.axes
    if kind is EllipsoidType.S2:
        return GS(-1, b1, b2, b3, g) >= 0
    if kind is EllipsoidType.S3:
        return GS(+1, b1, b3, b2, g) >= 0
    if kind is EllipsoidType.I:
        return b1 <= 2 * b2 - b3
    if kind is EllipsoidType.II:
        return b1 >= 2 * b2 + b3 and Dfun(b1, b3, b2) < 0
    return b1 >= b2 + 2 * b3 and Gtilde(b1, b2, b3, g) > 0


def region_overlays(kind, b: SemiAxes, g=1.0) -> dict:
    """Scalar functions whose sign changes trace the region borders."""
    kind = EllipsoidType(kind)
    b1, b2, b3 = b.axes
    if kind is EllipsoidType.S2:
        return {"GS_plus": GS(+1, b1, b2, b3, g), "GS_minus": GS(-1, b1, b2, b3, g),
                "Gtilde": Gtilde(b1, b2, b3, g)}
    if kind is EllipsoidType.S3:
        return {"GS_plus": GS(+1, b1, b3, b2, g), "GS_minus": GS(-1, b1, b3, b2, g)}
    if kind is EllipsoidType.I:
        return {"line": 2 * b2 - b3 - b1, "irrotational": irrotational_I(b)}
    if kind is EllipsoidType.II:
        return {"line": b1 - 2 * b2 - b3, "D": Dfun(b1, b3, b2)}
    return {"line": b1 - b2 - 2 * b3, "Gtilde": Gtilde(b1, b2, b3, g)}


def mu_pair(kind, b: SemiAxes, g=1.0):
    """``(mu^+(b), mu^-(b))`` as 3-vectors, per family."""
    kind = EllipsoidType(kind)
    b1, b2, b3 = b.axes
    plus, minus = np.zeros(3), np.zeros(3)
    if kind is EllipsoidType.S2:
        plus[1], minus[1] = NS(+1, b1, b2, b3, g), NS(-1, b1, b2, b3, g)
    elif kind is EllipsoidType.S3:
        plus[2], minus[2] = NS(+1, b1, b3, b2, g), NS(-1, b1, b3, b2, g)
    elif kind is EllipsoidType.I:
        plus[0], minus[0] = NR(+1, b1, b3, b2, g), NR(-1, b1, b3, b2, g)
        plus[2], minus[2] = NR(+1, b3, b1, b2, g), NR(-1, b3, b1, b2, g)
    elif kind is EllipsoidType.II:
        plus[0], minus[0] = NR(+1, b1, b3, b2, g), NR(-1, b1, b3, b2, g)
        plus[2], minus[2] = NR(-1, b3, b1, b2, g), NR(+1, b3, b1, b2, g)
    else:
        plus[0], minus[0] = NR(+1, b1, b2, b3, g), NR(-1, b1, b2, b3, g)
        plus[1], minus[1] = NR(-1, b2, b1, b3, g), NR(+1, b2, b1, b3, g)
    return plus, minus


def momenta(kind, b: SemiAxes, branch=Branch.PlusMinus, g=1.0) -> MomentumPair:
    if not region_contains(kind, b, g):
        raise RegionError(f"b={b.axes} is outside the existence region of type {EllipsoidType(kind).value}")
    plus, minus = mu_pair(kind, b, g)
    if Branch(branch) is Branch.PlusMinus:
        return MomentumPair(tuple(plus), tuple(minus))
    return MomentumPair(tuple(minus), tuple(plus))


@dataclass(frozen=True)
class EquilibriumPoint:
    """Relative equilibrium ``(b, c = 0, M)`` of the reduced system."""

    b: SemiAxes
    kind: EllipsoidType
    branch: Branch
    M: MomentumPair
    g: float = 1.0

    @property
    def c(self):
        return np.zeros(2)

    @property
    def is_generic(self) -> bool:
        """Both momenta nonzero: the reduced space has four degrees of freedom."""
        return any(self.M.m_l) and any(self.M.m_r)


def equilibrium(kind, b: SemiAxes, branch=Branch.PlusMinus, g=1.0) -> EquilibriumPoint:
    kind = EllipsoidType(kind)
    branch = Branch(branch)
    return EquilibriumPoint(b, kind, branch, momenta(kind, b, branch, g), g)


def reduced_hamiltonian_tilde(b: SemiAxes, m: MomentumPair, g=1.0) -> float:
    """``1/2 m.J(b) m + V(b)`` (the c-independent part at c = 0)."""
    from .potential import potential_V
    from .reduced import mass_matrices
    mm = mass_matrices(b)
    v = m.array
    return 0.5 * v @ mm.J @ v + potential_V(b, g)


def critical_point_residual(e: EquilibriumPoint, step=1e-5):
    """``(|grad_b H~|, |m x grad_m H~|)`` at the equilibrium.

    The b-gradient is a central finite difference of the reduced
    Hamiltonian; the torque uses ``grad_m H~ = J(b) m`` exactly.
    """
    from .reduced import mass_matrices
    grad = np.zeros(2)
    for i in range(2):
        d = np.zeros(2)
        d[i] = step
        hp = reduced_hamiltonian_tilde(e.b.shifted(*d), e.M, e.g)
        hm = reduced_hamiltonian_tilde(e.b.shifted(*(-d)), e.M, e.g)
        grad[i] = (hp - hm) / (2 * step)
    v = e.M.array
    w = mass_matrices(e.b).J @ v
    torque = np.concatenate([np.cross(v[:3], w[:3]), np.cross(v[3:], w[3:])])
    return float(np.linalg.norm(grad)), float(np.linalg.norm(torque))


def classify_parallelism(e: EquilibriumPoint) -> Parallelism:
    ml, mr = np.array(e.M.m_l), np.array(e.M.m_r)
    if not ml.any() or not mr.any():
        return Parallelism.Irrotational
    if not e.kind.is_s_type:
        return Parallelism.Planar
    return Parallelism.Coparallel if ml @ mr > 0 else Parallelism.Counterparallel
