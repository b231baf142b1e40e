"""Independent cross-checks for the family tables.

The existence sets and momenta are rebuilt here from the generic
critical-point conditions, written over arbitrary permutations ``(i, j, k)``
of the axes.  The per-family code in :mod:`riemann_ellipsoids.families` is
hard-wired to specific index orders; agreement between the two is the
oracle.  Indices in this module are zero-based.
"""

from __future__ import annotations

import math

import numpy as np

from .families import Dfun, GR, GS, EllipsoidType
from .geometry import MomentumPair, SemiAxes, are_equivalent


def s_set(b: SemiAxes, j: int, g=1.0) -> bool:
    """Generic S-type set for momenta along ``e_j`` (``j`` in {1, 2})."""
    a = b.axes
    k = 3 - j
    return GS(-1, a[0], a[j], a[k], g) >= 0 and GS(+1, a[0], a[j], a[k], g) >= 0


def r_set(b: SemiAxes, i: int, j: int, sign: int, g=1.0) -> bool:
    """Generic planar set ``B^sign_ij`` (``i < j``) for momenta in ``e_i + e_j``."""
    a = b.axes
    k = 3 - i - j
    if not a[j] <= sign * (a[i] - 2 * a[k]):
        return False
    if Dfun(a[i], a[j], a[k]) == 0:
        return False
    return GR(-sign, a[i], a[j], a[k], g) > 0 and GR(sign, a[j], a[i], a[k], g) > 0


# the identification of generic sets with the five families
FAMILY_SETS = {
    EllipsoidType.S2: ("S", 1),
    EllipsoidType.S3: ("S", 2),
    EllipsoidType.I: ("R", 0, 2, -1),
    EllipsoidType.II: ("R", 0, 2, +1),
    EllipsoidType.III: ("R", 0, 1, +1),
}
EMPTY_SETS = ((1, 2, +1), (1, 2, -1), (0, 1, -1))


def generic_contains(kind, b: SemiAxes, g=1.0) -> bool:
    entry = FAMILY_SETS[EllipsoidType(kind)]
    if entry[0] == "S":
        return s_set(b, entry[1], g)
    return r_set(b, entry[1], entry[2], entry[3], g)


def _sqrt0(v):
    return math.sqrt(v) if v > 0 else 0.0


def generic_momenta(kind, b: SemiAxes, g=1.0) -> MomentumPair:
    """A momentum pair solving the generic critical-point conditions."""
    entry = FAMILY_SETS[EllipsoidType(kind)]
    a = b.axes
    ml, mr = np.zeros(3), np.zeros(3)
    if entry[0] == "S":
        j = entry[1]
        k = 3 - j
        sp = _sqrt0(GS(+1, a[0], a[j], a[k], g))
        sm = _sqrt0(GS(-1, a[0], a[j], a[k], g))
        ml[j], mr[j] = 0.5 * (sp + sm), 0.5 * (sp - sm)
        return MomentumPair(ml, mr)
    _, i, j, _ = entry
    k = 3 - i - j
    sum_i = _sqrt0(GR(+1, a[i], a[j], a[k], g))
    dif_i = _sqrt0(GR(-1, a[i], a[j], a[k], g))
    sum_j = _sqrt0(GR(+1, a[j], a[i], a[k], g))
    sign = np.sign((2 * a[k] - a[i] - a[j]) * sum_j * sum_i / dif_i)
    dif_j = sign * _sqrt0(GR(-1, a[j], a[i], a[k], g))
    ml[i], mr[i] = 0.5 * (sum_i + dif_i), 0.5 * (sum_i - dif_i)
    ml[j], mr[j] = 0.5 * (sum_j + dif_j), 0.5 * (sum_j - dif_j)
    return MomentumPair(ml, mr)


def matches_table(kind, b: SemiAxes, table: MomentumPair, g=1.0, rtol=1e-9) -> bool:
    """Generic momenta are Z4 x Z2 equivalent to ``table`` or to its adjoint."""
    gen = generic_momenta(kind, b, g)
    tol = rtol * max(1.0, np.abs(table.array).max())
    return are_equivalent(gen, table, tol) or are_equivalent(gen, table.swapped(), tol)


def identity_residuals(kind, b: SemiAxes, m: MomentumPair, g=1.0) -> float:
    """Max relative error of ``(m_l +- m_r)^2 = G_+-`` on the momentum axes."""
    kind = EllipsoidType(kind)
    entry = FAMILY_SETS[kind]
    a = b.axes
    ml, mr = np.array(m.m_l), np.array(m.m_r)
    errs = []

    def rel(x, y):
        return abs(x - y) / max(1.0, abs(y))

    if entry[0] == "S":
        j = entry[1]
        k = 3 - j
        for s in (+1, -1):
            errs.append(rel((ml[j] + s * mr[j]) ** 2, GS(s, a[0], a[j], a[k], g)))
    else:
        _, i, j, _ = entry
        k = 3 - i - j
        for s in (+1, -1):
            errs.append(rel((ml[i] + s * mr[i]) ** 2, GR(s, a[i], a[j], a[k], g)))
            errs.append(rel((ml[j] + s * mr[j]) ** 2, GR(s, a[j], a[i], a[k], g)))
    return max(errs)


def sign_rule_holds(kind, b: SemiAxes, m: MomentumPair) -> bool:
    """Sign relation between the two planar components (planar types only).

    Checked up to the Z4 x Z2 action and adjointness, under which the
    relation is invariant only after normalising the first component.
    """
    entry = FAMILY_SETS[EllipsoidType(kind)]
    if entry[0] == "S":
        return True
    _, i, j, _ = entry
    k = 3 - i - j
    a = b.axes
    ml, mr = np.array(m.m_l), np.array(m.m_r)
    lhs = ml[j] - mr[j]
    rhs = np.sign((2 * a[k] - a[i] - a[j]) * (ml[j] + mr[j]) * (ml[i] + mr[i]) / (ml[i] - mr[i]))
    return bool(np.sign(lhs) == rhs or lhs == 0)
