"""Self-gravitational potential of a homogeneous ellipsoid and its derivatives.

All quantities are built from the index integrals

    I(a; p, n) = 2 pi g  int_0^inf  s^n  prod_k (s + a_k^2)^(-p_k - 1/2) ds

with ``V(a) = -I(a; (0,0,0), 0)`` and ``C_n(a) = I(a; (1,1,1), n)``.
Differentiation acts on the exponents only:
``dI/da_i = -(2 p_i + 1) a_i I(a; p + e_i, n)``, so every derivative of V
is again a finite combination of index integrals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ellipkinc

from . import polyalg
from .geometry import SemiAxes

# integrands are positive, so a pure relative criterion is well posed;
# an absolute floor would swamp the tiny high-order integrals of flat shapes
EPSABS = 0.0
EPSREL = 1e-12

_GL_LO = np.polynomial.legendre.leggauss(16)
_GL_HI = np.polynomial.legendre.leggauss(32)


class QuadratureError(RuntimeError):
    def __init__(self, achieved, requested):
        self.achieved = achieved
        self.requested = requested
        super().__init__(f"quadrature did not converge: relative error {achieved:.2e} > {requested:.1e}")

    def __reduce__(self):
        return type(self), (self.achieved, self.requested)


@dataclass(frozen=True)
class PotentialConstants:
    g: float = 1.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("gravitational constant must be positive")


@dataclass(frozen=True)
class IntegralIndex:
    p: tuple
    n: int = 0

    def __post_init__(self):
        if len(self.p) != 3 or min(self.p) < 0 or self.n < 0:
            raise ValueError(f"bad integral index {self}")
        if sum(self.p) < self.n:
            raise ValueError(f"index integral diverges for {self}")


def _integrand(w, u, c, p, n):
    """Integrand after ``s = c (1/w^2 - 1)``; analytic on [0, 1]."""
    # (s + u_k) = (c (1 - w^2) + u_k w^2) / w^2
    w = w[None, :]
    w2 = w * w
    out = 2.0 * c ** (n[:, None] + 1) * (1.0 - w2) ** n[:, None] * w ** (2 * (p.sum(axis=1) - n))[:, None]
    for k in range(3):
        base = c * (1.0 - w2) + u[k] * w2
        out = out * base ** (-p[:, k:k + 1] - 0.5)
    return out


def _gauss(f, lo, hi, rule):
    x, wts = rule
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = f(nodes).reshape(-1, lo.size, x.size)
    return (vals * wts[None, None, :]).sum(axis=2) * half[None, :]


def adaptive_integrate(f, epsabs=EPSABS, epsrel=EPSREL, max_iter=40, max_intervals=2048):
    """Integrate a vector-valued ``f`` over [0, 1] by bisection of Gauss rules.

    ``f`` maps an array of nodes to an array of shape ``(ncomp, nnodes)``.
    Intervals are split until the 16/32-point discrepancy of every component
    is within its share of ``max(epsabs, epsrel * |I|)``.  When bisection
    stalls (roundoff on very flat shapes makes the per-width share
    unreachable) the summed discrepancy of the open intervals is checked
    against the global tolerance instead.
    """
    lo = np.array([0.0])
    hi = np.array([1.0])
    done = None
    for it in range(max_iter):
        g32 = _gauss(f, lo, hi, _GL_HI)
        g16 = _gauss(f, lo, hi, _GL_LO)
        partial = g32.sum(axis=1) + (done if done is not None else 0.0)
        tol = np.maximum(epsabs, epsrel * np.abs(partial))
        err = np.abs(g32 - g16)
        ok = np.all(err <= 0.5 * tol[:, None] * (hi - lo)[None, :], axis=0)
        acc = g32[:, ok].sum(axis=1)
        done = acc if done is None else done + acc
        if ok.all():
            return done
        stalled = it == max_iter - 1 or 2 * np.count_nonzero(~ok) > max_intervals
        if stalled:
            # accepted intervals carry at most tol/2 in total
            if np.all(err[:, ~ok].sum(axis=1) <= 0.5 * tol):
                return done + g32[:, ~ok].sum(axis=1)
            break
        lo, hi = lo[~ok], hi[~ok]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    total = done + g32[:, ~ok].sum(axis=1)
    achieved = float(np.max(err[:, ~ok].sum(axis=1) / np.maximum(np.abs(total), 1e-300)))
    raise QuadratureError(achieved, epsrel)


@lru_cache(maxsize=65536)
def _cached_integrals(u, indices, g):
    p = np.array([i[0] for i in indices], dtype=np.int64)
    n = np.array([i[1] for i in indices], dtype=np.int64)
    u = np.asarray(u)
    c = float(u.min())
    vals = adaptive_integrate(lambda w: _integrand(w, u, c, p, n))
    vals.flags.writeable = False
    return 2.0 * math.pi * g * vals


def index_integrals(a, indices, g=1.0):
    """Vector of ``I(a; p, n)`` for a sequence of ``(p, n)`` pairs.

    Results are memoized on the exact ``(a, indices, g)`` values; the cache
    is an :func:`functools.lru_cache`, which is safe under threads.
    """
    a = tuple(float(v) for v in a)
    if min(a) <= 0:
        raise ValueError("semiaxes must be positive")
    u = tuple(v * v for v in a)
    key = tuple((tuple(int(x) for x in (idx.p if isinstance(idx, IntegralIndex) else idx[0])),
                 int(idx.n if isinstance(idx, IntegralIndex) else idx[1])) for idx in indices)
    for p, n in key:
        IntegralIndex(p, n)
    return _cached_integrals(u, key, float(g)).copy()


def index_integral(a, idx, g=1.0) -> float:
    if not isinstance(idx, IntegralIndex):
        idx = IntegralIndex(tuple(idx[0]), int(idx[1]))
    return float(index_integrals(a, [idx], g)[0])


def index_integral_gradient(a, idx, g=1.0):
    """``dI/da_i = -(2 p_i + 1) a_i I(a; p + e_i, n)`` for i = 1..3."""
    if not isinstance(idx, IntegralIndex):
        idx = IntegralIndex(tuple(idx[0]), int(idx[1]))
    shifted = []
    for i in range(3):
        p = list(idx.p)
        p[i] += 1
        shifted.append((tuple(p), idx.n))
    vals = index_integrals(a, shifted, g)
    return np.array([-(2 * idx.p[i] + 1) * a[i] * vals[i] for i in range(3)])


def cn(a, n, g=1.0) -> float:
    """``C_n(x, y, z)``, symmetric in its three arguments."""
    if n not in (0, 1, 2):
        raise ValueError("n must be 0, 1 or 2")
    return index_integral(a, ((1, 1, 1), n), g)


def c1_c2(a, g=1.0):
    v = index_integrals(sorted(a), [((1, 1, 1), 1), ((1, 1, 1), 2)], g)
    return float(v[0]), float(v[1])


def potential_axes(a, g=1.0) -> float:
    """V as a function of all three semiaxes (no volume constraint)."""
    return -index_integral(a, ((0, 0, 0), 0), g)


def potential_V(b: SemiAxes, g=1.0) -> float:
    return potential_axes(b.axes, g)


def potential_V_elliptic(b: SemiAxes, g=1.0) -> float:
    """Closed form through the incomplete elliptic integral of the first kind."""
    b1, b2, b3 = b.axes
    phi = math.acos(b3 / b1)
    m = (b1 * b1 - b2 * b2) / (b1 * b1 - b3 * b3)
    return -4.0 * math.pi * g / math.sqrt(b1 * b1 - b3 * b3) * float(ellipkinc(phi, m))


# ---------------------------------------------------------------------------
# Taylor expansion in b


def _rising_half(k):
    return math.prod(j + 0.5 for j in range(k))


def _multi_indices(order):
    return [al for al in itertools.product(range(order + 1), repeat=3) if sum(al) <= order]


def squared_axes_taylor(a, order=4, g=1.0):
    """Coefficients ``d^al V / du^al / al!`` with ``u = a**2``, |al| <= order."""
    alphas = _multi_indices(order)
    vals = index_integrals(a, [(al, 0) for al in alphas], g)
    coeffs = {}
    for al, v in zip(alphas, vals):
        sign = (-1) ** sum(al)
        fac = math.prod(_rising_half(k) / math.factorial(k) for k in al)
        coeffs[al] = -sign * fac * v
    return coeffs


def potential_series(b: SemiAxes, order=4, g=1.0, variables=(0, 1)):
    """``V(b + delta)`` as a series in ``delta`` (polyalg variables ``variables``).

    Built by composing the Taylor expansion in squared semiaxes with
    ``u = (b1 + d1)^2, (b2 + d2)^2, ((b1 + d1)(b2 + d2))^-2``.
    """
    b1, b2, _ = b.axes
    S = polyalg.TruncatedSeries
    x1 = S.variable(variables[0], 1.0, order) + b1
    x2 = S.variable(variables[1], 1.0, order) + b2
    u_ser = [x1 * x1, x2 * x2, polyalg.power_series(x1 * x2, -2.0)]
    du = [s - s.constant_term() for s in u_ser]
    coeffs = squared_axes_taylor(b.axes, order, g)
    powers = [[S.constant(1.0, order)] for _ in range(3)]
    for k in range(3):
        for _ in range(order):
            powers[k].append(powers[k][-1] * du[k])
    out = S.zero(order)
    for al, c in coeffs.items():
        out = out + powers[0][al[0]] * powers[1][al[1]] * powers[2][al[2]] * c
    return out


def potential_derivatives(b: SemiAxes, max_order=4, g=1.0):
    """Derivative tensors of ``V(b1, b2, 1/(b1 b2))``.

    Returns a list ``D`` with ``D[k]`` the symmetric array of shape ``(2,)*k``
    holding all k-th partial derivatives in ``(b1, b2)``; ``D[0]`` is V.
    """
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must be between 0 and 4")
    ser = potential_series(b, order=max(max_order, 1), g=g)
    out = []
    for k in range(max_order + 1):
        t = np.zeros((2,) * k)
        for idx in itertools.product(range(2), repeat=k):
            e = [0] * polyalg.NVARS
            for i in idx:
                e[i] += 1
            t[idx] = ser.coefficient(e).real * math.prod(math.factorial(v) for v in e)
        out.append(t if k else float(t))
    return out
