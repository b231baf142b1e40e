"""Reduced Hamiltonian, Poincare charts on the momentum spheres, linearization.

Coordinates at an equilibrium are ordered ``(b1, b2, c1, c2, q1, q2, p1, p2)``
with ``b`` the offset from ``b*``.  Hamilton's equations use the structure
matrix ``J8 = diag(J4, J4)``, so ``b' = dH/dc`` and ``q' = dH/dp``.  On the
momentum spheres the physical flow is ``m' = m x dH/dm``; that differs from
the chart convention by the time reversal ``(c, t) -> (-c, -t)``, which is a
symmetry of ``H`` and leaves spectra and normal-form verdicts unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import elliprd

from . import polyalg
from .families import EllipsoidType, EquilibriumPoint
from .geometry import DomainError, SemiAxes
from .potential import potential_V

S = polyalg.TruncatedSeries

TOL_ELL = 1e-7
BLOCK_TOL = 1e-9
SINGULAR_GAP = 1e-10

J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
J8 = np.block([[J4, np.zeros((4, 4))], [np.zeros((4, 4)), J4]])
for _m in (J4, J8):
    _m.flags.writeable = False

# index slices into the (b, c, q, p) ordering
B, C, Q, P = slice(0, 2), slice(2, 4), slice(4, 6), slice(6, 8)
BLOCK_NAMES = {"b": B, "c": C, "q": Q, "p": P}


class SingularMassMatrix(DomainError):
    pass


class FrameError(RuntimeError):
    """The Hessian lacks the zero blocks implied by the chart frame."""


class NotGenericError(ValueError):
    """Both momenta must be nonzero for the four-degree-of-freedom analysis."""


# ---------------------------------------------------------------------------
# mass matrices


@dataclass(frozen=True)
class MassMatrices:
    K: np.ndarray
    J1: np.ndarray
    J2: np.ndarray

    @property
    def J(self) -> np.ndarray:
        return np.block([[self.J1, self.J2], [self.J2, self.J1]])


def _check_gaps(a):
    a1, a2, a3 = (abs(v) for v in a)
    for u, v in ((a2, a3), (a1, a3), (a1, a2)):
        if abs(u * u - v * v) < SINGULAR_GAP:
            raise SingularMassMatrix(f"coincident semiaxes {u} and {v}")


def _mass_entries(b1, b2):
    """``(K11, K12, K22, J1 diag, J2 diag)``; works for complex arguments."""
    b3 = 1.0 / (b1 * b2)
    s1, s2, s3 = b1 * b1, b2 * b2, b3 * b3
    den = s2 * s3 + s1 * s3 + s1 * s2
    K = (s1 * (s2 + s3) / den, -b3 / den, s2 * (s1 + s3) / den)
    j1 = ((s2 + s3) / (s2 - s3) ** 2, (s1 + s3) / (s1 - s3) ** 2, (s1 + s2) / (s1 - s2) ** 2)
    j2 = (2 * b2 * b3 / (s2 - s3) ** 2, 2 * b1 * b3 / (s1 - s3) ** 2, 2 * b1 * b2 / (s1 - s2) ** 2)
    return K, j1, j2


def mass_matrices(b: SemiAxes) -> MassMatrices:
    _check_gaps(b.axes)
    K, j1, j2 = _mass_entries(b.b1, b.b2)
    return MassMatrices(np.array([[K[0], K[1]], [K[1], K[2]]]), np.diag(j1), np.diag(j2))


def mass_matrices_gradient(b: SemiAxes):
    """``(dK/db_i, dJ/db_i)`` for ``i = 1, 2`` by complex-step differentiation."""
    _check_gaps(b.axes)
    h = 1e-30
    out = []
    for d in ((1j * h, 0), (0, 1j * h)):
        K, j1, j2 = _mass_entries(b.b1 + d[0], b.b2 + d[1])
        dK = np.array([[K[0], K[1]], [K[1], K[2]]]).imag / h
        dJ1, dJ2 = np.diag(np.imag(j1)) / h, np.diag(np.imag(j2)) / h
        out.append((dK, np.block([[dJ1, dJ2], [dJ2, dJ1]])))
    return out


def mass_matrix_series(b: SemiAxes, order=4, variables=(0, 1)):
    """Taylor series of the entries of K and J in the offset ``b - b*``.

    Returns ``(K, j1, j2)`` with ``K`` a 2x2 nested list of series and
    ``j1``, ``j2`` the three diagonal entries of ``J1`` and ``J2``.
    """
    _check_gaps(b.axes)
    x1 = S.variable(variables[0], 1.0, order) + b.b1
    x2 = S.variable(variables[1], 1.0, order) + b.b2
    x3 = polyalg.reciprocal(x1 * x2)
    s1, s2, s3 = x1 * x1, x2 * x2, x3 * x3
    inv_den = polyalg.reciprocal(s2 * s3 + s1 * s3 + s1 * s2)
    k12 = -x3 * inv_den
    K = [[s1 * (s2 + s3) * inv_den, k12], [k12, s2 * (s1 + s3) * inv_den]]

    def inv_sq(d):
        return polyalg.reciprocal(d * d)

    g23, g13, g12 = inv_sq(s2 - s3), inv_sq(s1 - s3), inv_sq(s1 - s2)
    j1 = [(s2 + s3) * g23, (s1 + s3) * g13, (s1 + s2) * g12]
    j2 = [x2 * x3 * g23 * 2.0, x1 * x3 * g13 * 2.0, x1 * x2 * g12 * 2.0]
    return K, j1, j2


class Jet2:
    """Second-order jet ``(value, gradient, Hessian)`` in the two shape offsets."""

    __slots__ = ("v", "g", "H")

    def __init__(self, v, g=None, H=None):
        self.v = v
        self.g = np.zeros(2) if g is None else g
        self.H = np.zeros((2, 2)) if H is None else H

    @classmethod
    def var(cls, value, i):
        g = np.zeros(2)
        g[i] = 1.0
        return cls(value, g)

    def __add__(self, o):
        if not isinstance(o, Jet2):
            return Jet2(self.v + o, self.g, self.H)
        return Jet2(self.v + o.v, self.g + o.g, self.H + o.H)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.v, -self.g, -self.H)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if not isinstance(o, Jet2):
            return Jet2(self.v * o, self.g * o, self.H * o)
        outer = np.outer(self.g, o.g)
        return Jet2(self.v * o.v, self.v * o.g + o.v * self.g,
                    self.v * o.H + o.v * self.H + outer + outer.T)

    __rmul__ = __mul__

    def inv(self):
        r = 1.0 / self.v
        return Jet2(r, -self.g * r * r, -self.H * r * r + 2.0 * np.outer(self.g, self.g) * r ** 3)

    def __truediv__(self, o):
        return self * o.inv() if isinstance(o, Jet2) else self * (1.0 / o)


def mass_matrix_jets(b: SemiAxes):
    """Entries of K, J1, J2 as second-order jets in ``(b1, b2)``."""
    _check_gaps(b.axes)
    x1, x2 = Jet2.var(b.b1, 0), Jet2.var(b.b2, 1)
    x3 = (x1 * x2).inv()
    s1, s2, s3 = x1 * x1, x2 * x2, x3 * x3
    inv_den = (s2 * s3 + s1 * s3 + s1 * s2).inv()
    K = [s1 * (s2 + s3) * inv_den, -x3 * inv_den, s2 * (s1 + s3) * inv_den]
    d23, d13, d12 = s2 - s3, s1 - s3, s1 - s2
    g23, g13, g12 = (d23 * d23).inv(), (d13 * d13).inv(), (d12 * d12).inv()
    j1 = [(s2 + s3) * g23, (s1 + s3) * g13, (s1 + s2) * g12]
    j2 = [x2 * x3 * g23 * 2.0, x1 * x3 * g13 * 2.0, x1 * x2 * g12 * 2.0]
    return K, j1, j2


def potential_hessian_b(b: SemiAxes, g=1.0):
    """``(grad, Hessian)`` of ``V(b1, b2, 1/(b1 b2))`` from index integrals.

    Uses ``dV/da_i = a_i I(e_i)`` and
    ``d2V/da_i da_j = delta_ij I(e_i) - (1 + 2 delta_ij) a_i a_j I(e_i + e_j)``.
    """
    from .potential import index_integrals
    a = np.array(b.axes)
    single = [tuple(int(k == i) for k in range(3)) for i in range(3)]
    pairs = [(i, j) for i in range(3) for j in range(i, 3)]
    idx = [(p, 0) for p in single] + [(tuple(int(k == i) + int(k == j) for k in range(3)), 0) for i, j in pairs]
    vals = index_integrals(a, idx, g)
    I1 = vals[:3]
    I2 = np.zeros((3, 3))
    for (i, j), v in zip(pairs, vals[3:]):
        I2[i, j] = I2[j, i] = v
    dV = a * I1
    d2V = np.diag(I1) - (1.0 + 2.0 * np.eye(3)) * np.outer(a, a) * I2
    b1, b2, b3 = a
    da = np.array([[1.0, 0.0], [0.0, 1.0], [-b3 / b1, -b3 / b2]])
    d2a3 = np.array([[2 * b3 / b1 ** 2, b3 / (b1 * b2)], [b3 / (b1 * b2), 2 * b3 / b2 ** 2]])
    return da.T @ dV, da.T @ d2V @ da + dV[2] * d2a3


# ---------------------------------------------------------------------------
# potential gradient (fast path for the integrator)


def potential_gradient_b(b: SemiAxes, g=1.0) -> np.ndarray:
    """``(dV/db1, dV/db2)`` through Carlson's ``R_D``."""
    a = np.array(b.axes)
    u = a * a
    dVda = np.array([
        a[i] * 2 * math.pi * g * (2.0 / 3.0) * float(elliprd(u[(i + 1) % 3], u[(i + 2) % 3], u[i]))
        for i in range(3)
    ])
    b3 = b.b3
    return np.array([dVda[0] - dVda[2] * b3 / b.b1, dVda[1] - dVda[2] * b3 / b.b2])


# ---------------------------------------------------------------------------
# Poincare charts


DISTINGUISHED_AXIS = {
    EllipsoidType.S2: 0,
    EllipsoidType.S3: 0,
    EllipsoidType.I: 1,
    EllipsoidType.II: 1,
    EllipsoidType.III: 2,
}


def chart_frame(center, axis: int) -> np.ndarray:
    """Rotation with third column ``center/|center|`` and first column ``e_axis``."""
    center = np.asarray(center, dtype=float)
    rho = np.linalg.norm(center)
    if rho == 0:
        raise ValueError("chart center must be nonzero")
    e3 = center / rho
    e1 = np.zeros(3)
    e1[axis] = 1.0
    if abs(e1 @ e3) > 1e-12:
        raise FrameError(f"axis e{axis + 1} is not orthogonal to the chart center")
    return np.column_stack([e1, np.cross(e3, e1), e3])


@dataclass(frozen=True)
class PoincareChart:
    center: tuple
    frame: np.ndarray = field(compare=False)

    @property
    def rho(self) -> float:
        return float(np.linalg.norm(self.center))

    @classmethod
    def at(cls, center, axis: int):
        center = tuple(float(v) for v in center)
        return cls(center, chart_frame(center, axis))


def standard_chart(rho, q, p):
    """The half-sphere parametrization centred at ``(0, 0, rho)``."""
    r2 = q * q + p * p
    if not r2 < 2 * rho:
        raise DomainError(f"(q, p) = ({q}, {p}) outside the chart disk of radius sqrt(2 rho)")
    s = math.sqrt(rho - r2 / 4)
    return np.array([p * s, -q * s, rho - r2 / 2])


def poincare_embed(chart: PoincareChart, q, p) -> np.ndarray:
    return chart.frame @ standard_chart(chart.rho, q, p)


def poincare_inverse(chart: PoincareChart, m) -> tuple:
    """Chart coordinates of ``m``; requires ``m`` off the antipode of the center."""
    v = chart.frame.T @ np.asarray(m, dtype=float)
    rho = chart.rho
    if not rho + v[2] > 0:
        raise DomainError("point at the antipode of the chart center")
    f = math.sqrt(2.0 / (rho + v[2]))
    return f * -v[1], f * v[0]


def chart_series(chart: PoincareChart, qvar, pvar, order=4):
    """Components of ``poincare_embed`` as series in variables ``qvar``, ``pvar``."""
    rho = chart.rho
    q = S.variable(qvar, 1.0, order)
    p = S.variable(pvar, 1.0, order)
    r2 = q * q + p * p
    s = polyalg.sqrt_series(r2 * -0.25 + rho)
    local = [p * s, -(q * s), r2 * -0.5 + rho]
    R = chart.frame
    return [sum((local[j] * R[i, j] for j in range(3) if R[i, j] != 0), S.zero(order))
            for i in range(3)]


def equilibrium_charts(e: EquilibriumPoint):
    axis = DISTINGUISHED_AXIS[e.kind]
    charts = []
    for m in (e.M.m_l, e.M.m_r):
        charts.append(PoincareChart.at(m, axis) if any(m) else None)
    return tuple(charts)


# ---------------------------------------------------------------------------
# reduced Hamiltonian


def hamiltonian_bcm(b: SemiAxes, c, m, g=1.0) -> float:
    """``1/2 c.K c + 1/2 m.J m + V`` at a point of the (unreduced-chart) space."""
    mm = mass_matrices(b)
    c = np.asarray(c, dtype=float)
    m = np.asarray(m, dtype=float)
    return 0.5 * c @ mm.K @ c + 0.5 * m @ mm.J @ m + potential_V(b, g)


def reduced_hamiltonian(e: EquilibriumPoint, db, c, q, p, potential=potential_V) -> float:
    """Reduced Hamiltonian in chart coordinates around ``e``.

    ``q`` and ``p`` hold one entry per nonzero momentum.  With both momenta
    nonzero this is the four-degree-of-freedom Hamiltonian; if one vanishes
    only ``m_l`` (or ``m_r``) is charted and ``J1`` alone acts on it.
    ``potential`` selects the evaluation route for ``V``.
    """
    b = e.b.shifted(*db)
    charts = equilibrium_charts(e)
    mm = mass_matrices(b)
    c = np.asarray(c, dtype=float)
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    live = [ch for ch in charts if ch is not None]
    if len(q) != len(live) or len(p) != len(live):
        raise ValueError(f"expected {len(live)} chart coordinate pairs")
    kin = 0.5 * c @ mm.K @ c
    if len(live) == 2:
        m = np.concatenate([poincare_embed(live[0], q[0], p[0]), poincare_embed(live[1], q[1], p[1])])
        rot = 0.5 * m @ mm.J @ m
    elif len(live) == 1:
        m = poincare_embed(live[0], q[0], p[0])
        rot = 0.5 * m @ mm.J1 @ m
    else:
        rot = 0.0
    return kin + rot + potential(b, e.g)


def reduced_hamiltonian_vec(e: EquilibriumPoint, xi, potential=potential_V) -> float:
    """``reduced_hamiltonian`` at ``xi = (b, c, q, p)`` (generic case)."""
    xi = np.asarray(xi, dtype=float)
    return reduced_hamiltonian(e, xi[B], xi[C], xi[Q], xi[P], potential)


def hamiltonian_series(e: EquilibriumPoint, order=4):
    """Taylor expansion of the reduced Hamiltonian in ``(b, c, q, p)`` offsets.

    Variables are numbered in the coordinate order ``0..7``.  The constant
    term is kept; callers drop it as needed.
    """
    if not e.is_generic:
        raise NotGenericError("Taylor expansion needs both momenta nonzero")
    cl, cr = equilibrium_charts(e)
    K, j1, j2 = mass_matrix_series(e.b, order)
    cvar = [S.variable(2, 1.0, order), S.variable(3, 1.0, order)]
    H = S.zero(order)
    for i in range(2):
        for j in range(2):
            H = H + K[i][j] * (cvar[i] * cvar[j]) * 0.5
    ml = chart_series(cl, 4, 6, order)
    mr = chart_series(cr, 5, 7, order)
    for k in range(3):
        H = H + j1[k] * (ml[k] * ml[k] + mr[k] * mr[k]) * 0.5 + j2[k] * (ml[k] * mr[k])
    return H + _potential_series(e)


def _potential_series(e):
    from .potential import potential_series
    return potential_series(e.b, 4, e.g)


# ---------------------------------------------------------------------------
# Hessian and linearization


_D_Q = np.array([0.0, -1.0, 0.0])   # d m~/dq at 0, per sqrt(rho)
_D_P = np.array([1.0, 0.0, 0.0])    # d m~/dp at 0, per sqrt(rho)
_D_QQ = np.array([0.0, 0.0, -1.0])  # second derivatives in q and in p


def _chart_jets(charts):
    """First and second derivatives of ``M(q, p)`` at the origin as 6-vectors."""
    d1 = {}
    d2 = {}
    for side, ch in enumerate(charts):
        sl = slice(3 * side, 3 * side + 3)
        r = math.sqrt(ch.rho)
        for name, vec in (("q", _D_Q * r), ("p", _D_P * r)):
            v = np.zeros(6)
            v[sl] = ch.frame @ vec
            d1[(name, side)] = v
            v2 = np.zeros(6)
            v2[sl] = ch.frame @ _D_QQ
            d2[(name, side)] = v2
    return d1, d2


def hessian_at_equilibrium(e: EquilibriumPoint, check=True, tol=BLOCK_TOL):
    """Analytic Hessian of the reduced Hamiltonian at ``e`` and its block report.

    Returns ``(hessian, report)`` where ``report`` maps block names such as
    ``"cb"`` to their max-abs entries relative to the largest Hessian entry.
    With ``check`` the zero blocks forced by the chart frame are asserted.
    """
    if not e.is_generic:
        raise NotGenericError("Hessian assembly needs both momenta nonzero")
    charts = equilibrium_charts(e)
    K, j1, j2 = mass_matrix_jets(e.b)
    _, Vbb = potential_hessian_b(e.b, e.g)
    Mstar = e.M.array

    def jmat(part):
        a = np.array([part(s) for s in j1])
        d = np.array([part(s) for s in j2])
        return np.block([[np.diag(a), np.diag(d)], [np.diag(d), np.diag(a)]])

    J0 = jmat(lambda s: s.v)
    dJ = [jmat(lambda s, i=i: s.g[i]) for i in range(2)]
    d2J = [[jmat(lambda s, i=i, j=j: s.H[i, j]) for j in range(2)] for i in range(2)]
    Kmat = np.array([[K[0].v, K[1].v], [K[1].v, K[2].v]])
    d1, d2 = _chart_jets(charts)

    Hs = np.zeros((8, 8))
    for i in range(2):
        for j in range(2):
            Hs[i, j] = 0.5 * Mstar @ d2J[i][j] @ Mstar + Vbb[i, j]
            Hs[2 + i, 2 + j] = Kmat[i, j]
    idx = {("q", 0): 4, ("q", 1): 5, ("p", 0): 6, ("p", 1): 7}
    for key, k in idx.items():
        for i in range(2):
            Hs[i, k] = Hs[k, i] = d1[key] @ dJ[i] @ Mstar
        for key2, k2 in idx.items():
            val = d1[key] @ J0 @ d1[key2]
            if key == key2:
                val += d2[key] @ J0 @ Mstar
            Hs[k, k2] = val
    report = block_report(Hs)
    if check:
        zero = ["cb", "cq", "cp", "bp", "qp"]
        if e.kind.is_s_type:
            zero.append("bq")
        bad = {k: report[k] for k in zero if report[k] > tol}
        if bad:
            raise FrameError(f"nonzero Hessian blocks {bad}")
        kc = np.abs(Hs[C, C] - mass_matrices(e.b).K).max() / max(1.0, np.abs(Hs).max())
        if kc > tol:
            raise FrameError(f"H_cc differs from K by {kc:.2e}")
    return Hs, report


def block_report(H) -> dict:
    scale = max(np.abs(H).max(), 1e-300)
    out = {}
    for a, sa in BLOCK_NAMES.items():
        for bname, sb in BLOCK_NAMES.items():
            out[a + bname] = float(np.abs(H[sa, sb]).max() / scale)
    return out


def fd_hessian(f, n, step=1e-4):
    """Central-difference Hessian of ``f`` at the origin of R^n."""
    H = np.zeros((n, n))
    E = np.eye(n) * step
    f0 = f(np.zeros(n))
    for i in range(n):
        H[i, i] = (f(E[i]) - 2 * f0 + f(-E[i])) / step ** 2
        for j in range(i):
            v = (f(E[i] + E[j]) - f(E[i] - E[j]) - f(-E[i] + E[j]) + f(-E[i] - E[j])) / (4 * step ** 2)
            H[i, j] = H[j, i] = v
    return H


@dataclass(frozen=True)
class LinearizationReport:
    hessian: np.ndarray
    X: np.ndarray
    eigenvalues: np.ndarray
    elliptic: bool
    zero_modes: int
    margin_flag: bool
    symmetric_spectrum: bool
    tol_ell: float = TOL_ELL

    @property
    def frequencies(self) -> np.ndarray:
        """The four values ``|Im lambda|`` of the eigenvalues with ``Im >= 0``, descending."""
        im = np.sort(np.abs(self.eigenvalues.imag))[::-1]
        return im[::2].copy()

    @property
    def max_real_part(self) -> float:
        return float(np.abs(self.eigenvalues.real).max())


def spectrum_is_hamiltonian(ev, tol=1e-9) -> bool:
    """Eigenvalue multiset closed under ``-lambda`` and ``conj(lambda)``."""
    ev = np.asarray(ev)
    scale = max(1.0, np.abs(ev).max())
    for img in (-ev, ev.conj()):
        used = np.zeros(len(ev), bool)
        for lam in img:
            d = np.abs(ev - lam)
            d[used] = np.inf
            k = int(np.argmin(d))
            if d[k] > tol * scale:
                return False
            used[k] = True
    return True


def ellipticity(ev, tol_ell=TOL_ELL):
    """``(elliptic, margin_flag)``: all ``|Re l| <= tol max(1, |l|)``."""
    ev = np.asarray(ev)
    thresh = tol_ell * np.maximum(1.0, np.abs(ev))
    re = np.abs(ev.real)
    elliptic = bool(np.all(re <= thresh))
    margin = bool(np.any(np.abs(re - thresh) < 10 * thresh))
    return elliptic, margin


def linearize(e: EquilibriumPoint, tol_ell=TOL_ELL, check_blocks=True) -> LinearizationReport:
    H, _ = hessian_at_equilibrium(e, check=check_blocks)
    return linearization_from_hessian(H, tol_ell)


def linearization_from_hessian(H, tol_ell=TOL_ELL) -> LinearizationReport:
    X = J8 @ H
    ev = np.linalg.eigvals(X)
    ell, margin = ellipticity(ev, tol_ell)
    zero = int(np.sum(np.abs(ev) <= 1e-9 * max(1.0, np.abs(ev).max())))
    return LinearizationReport(H, X, ev, ell, zero, margin, spectrum_is_hamiltonian(ev), tol_ell)


# ---------------------------------------------------------------------------
# verification integrator


@dataclass
class FlowResult:
    t: np.ndarray
    states: np.ndarray          # rows (b1, b2, c1, c2, m_l, m_r)
    energy_drift: float         # max relative |H(t) - H(0)|
    max_drift: float            # max distance from the equilibrium state
    truncated: bool
    message: str = ""


def _flow_rhs(state, g):
    b = SemiAxes(state[0], state[1], margin=0.0)
    c = state[2:4]
    m = state[4:10]
    mm = mass_matrices(b)
    grads = mass_matrices_gradient(b)
    dV = potential_gradient_b(b, g)
    dc = np.array([-(0.5 * c @ dK @ c + 0.5 * m @ dJ @ m + dV[i]) for i, (dK, dJ) in enumerate(grads)])
    w = mm.J @ m
    dm = np.concatenate([np.cross(m[:3], w[:3]), np.cross(m[3:], w[3:])])
    return np.concatenate([mm.K @ c, dc, dm])


def integrate_reduced_flow(e: EquilibriumPoint, offset=None, T=100.0, dt=1.0,
                           rtol=1e-12, atol=1e-14) -> FlowResult:
    """Integrate the reduced flow from ``e`` shifted by ``offset`` in ``(b, c, q, p)``.

    The momenta evolve as ``m' = m x J(b) m`` on their spheres, so the
    integration itself needs no chart; ``offset`` is pushed through the
    Poincare charts only to build the initial state.  Uses DOP853.
    """
    if not e.is_generic:
        raise NotGenericError("flow integration implemented for generic equilibria")
    offset = np.zeros(8) if offset is None else np.asarray(offset, dtype=float)
    cl, cr = equilibrium_charts(e)
    b0 = e.b.shifted(*offset[B])
    m0 = np.concatenate([poincare_embed(cl, offset[4], offset[6]), poincare_embed(cr, offset[5], offset[7])])
    y0 = np.concatenate([b0.array, offset[C], m0])
    ystar = np.concatenate([e.b.array, np.zeros(2), e.M.array])

    def energy(y):
        return hamiltonian_bcm(SemiAxes(y[0], y[1], margin=0.0), y[2:4], y[4:10], e.g)

    def rhs(t, y):
        return _flow_rhs(y, e.g)

    def leaves(t, y):
        b1, b2 = y[0], y[1]
        b3 = 1.0 / (b1 * b2)
        return min(b1 - b2, b2 - b3) - 1e-6 * b1
    leaves.terminal = True

    t_eval = np.arange(0.0, T + 0.5 * dt, dt)
    t_eval = t_eval[t_eval <= T]
    try:
        sol = solve_ivp(rhs, (0.0, T), y0, method="DOP853", t_eval=t_eval,
                        rtol=rtol, atol=atol, events=leaves)
    except DomainError as exc:
        return FlowResult(np.array([0.0]), y0[None, :], 0.0, 0.0, True, str(exc))
    ys = sol.y.T
    H0 = energy(y0)
    drift_e = max(abs(energy(y) - H0) for y in ys) / max(abs(H0), 1e-300)
    drift = float(np.max(np.linalg.norm(ys - ystar[None, :], axis=1)))
    truncated = sol.status == 1 or not sol.success
    return FlowResult(sol.t, ys, float(drift_e), drift, bool(truncated), sol.message)
