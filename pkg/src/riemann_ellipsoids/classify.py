"""Convexity taxonomy of the quartic normal form and KAM nondegeneracy."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .normalform import NormalFormReport

N_THETA = 101
CLASSIFY_TOL = 1e-9
SIGN_TOL = 1e-10
KAM_TOL = 1e-10


class StabilityTag(str, enum.Enum):
    NotElliptic = "NotElliptic"
    Resonant = "Resonant"
    Convex = "Convex"
    QuasiConvex = "QuasiConvex"
    DirectionallyQuasiConvex = "DirectionallyQuasiConvex"
    Indeterminate = "Indeterminate"


_STRENGTH = {
    StabilityTag.Convex: 3,
    StabilityTag.QuasiConvex: 2,
    StabilityTag.DirectionallyQuasiConvex: 1,
}


@dataclass(frozen=True)
class StabilityClass:
    tag: StabilityTag
    kam_nondegenerate: bool = False
    resonance_order: int | None = None
    diagnostic: str = ""

    @property
    def label(self) -> str:
        if self.tag is StabilityTag.Resonant:
            return f"Resonant({self.resonance_order})"
        return self.tag.value

    @property
    def nekhoroshev_exponents(self):
        return nekhoroshev_exponents(self)

    def at_least(self, tag: StabilityTag) -> bool:
        return _STRENGTH.get(self.tag, 0) >= _STRENGTH[tag]


def omega_frame(Omega) -> np.ndarray:
    """Orthogonal 4x4 matrix ``R`` with ``R Omega = |Omega| e1``.

    Built from a Householder reflection with the sign chosen to avoid
    cancellation; rows are flipped so that ``R Omega`` points along ``+e1``
    and ``det R = +1``.
    """
    w = np.asarray(Omega, dtype=float)
    n = np.linalg.norm(w)
    if n == 0:
        raise ValueError("Omega must be nonzero")
    u = w / n
    v = u.copy()
    # the reflection maps u to -sign(u1) e1
    sgn = 1.0 if u[0] >= 0 else -1.0
    v[0] += sgn
    v /= np.linalg.norm(v)
    R = np.eye(len(w)) - 2.0 * np.outer(v, v)
    R[0] *= -sgn
    if np.linalg.det(R) < 0:
        R[-1] *= -1.0
    return R


def reduced_form(A, Omega):
    """``(R, A~)``: ``A~`` is the lower-right 3x3 block of ``R A R^T``."""
    R = omega_frame(Omega)
    return R, (R @ np.asarray(A) @ R.T)[1:, 1:]


def _definite(eigs, tol):
    return bool(np.all(eigs > tol) or np.all(eigs < -tol))


def cone_ellipse(alphas, theta, sign=+1):
    """Unit asymptotic vectors of ``diag(a1, -|a2|, -|a3|)`` (``a1 > 0``)."""
    a1, a2, a3 = alphas[0], abs(alphas[1]), abs(alphas[2])
    c, s = np.cos(theta), np.sin(theta)
    x1 = sign * np.sqrt(a2 / (a1 + a2) * c * c + a3 / (a1 + a3) * s * s)
    return np.stack([x1, np.sqrt(a1 / (a1 + a2)) * c, np.sqrt(a1 / (a1 + a3)) * s], axis=-1)


def asymptotic_vectors(A, Omega, n_theta=N_THETA, tol=CLASSIFY_TOL):
    """``I+(theta)`` in R^4 on the cone ``I.A I = 0, Omega.I = 0``.

    ``None`` when the restricted form is degenerate or definite (no real cone).
    """
    R, At = reduced_form(A, Omega)
    eigs, vecs = np.linalg.eigh(At)
    scale = max(np.abs(eigs).max(), 1e-300)
    if np.min(np.abs(eigs)) <= tol * scale or np.all(eigs > 0) or np.all(eigs < 0):
        return None
    if np.sum(eigs > 0) == 2:
        eigs, vecs = -eigs, vecs
    order = np.argsort(-eigs)  # the single positive eigenvalue first
    eigs, Smat = eigs[order], vecs[:, order]
    if np.linalg.det(Smat) < 0:
        Smat[:, -1] *= -1.0
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta)
    xhat = cone_ellipse(eigs, theta, +1)
    Ihat = xhat @ Smat.T
    full = np.concatenate([np.zeros((n_theta, 1)), Ihat], axis=1)
    return full @ R, eigs


def classify_normal_form(nf: NormalFormReport, tol=CLASSIFY_TOL, n_theta=N_THETA) -> StabilityClass:
    """Strongest of convex, quasi-convex and directionally quasi-convex that holds."""
    if not nf.constructed:
        order = min((o for _, o, _ in nf.resonances_hit), default=None)
        return StabilityClass(StabilityTag.Resonant, False, order, "normal form not constructed")
    return classify_matrix(nf.A, nf.Omega, tol, n_theta)


def classify_matrix(A, Omega, tol=CLASSIFY_TOL, n_theta=N_THETA) -> StabilityClass:
    A = np.asarray(A, dtype=float)
    kam = kam_check_matrix(A)
    scale = max(np.abs(A).max(), 1e-300)
    if _definite(np.linalg.eigvalsh(A), tol * scale):
        return StabilityClass(StabilityTag.Convex, kam)
    _, At = reduced_form(A, Omega)
    at_eigs = np.linalg.eigvalsh(At)
    if _definite(at_eigs, tol * scale):
        return StabilityClass(StabilityTag.QuasiConvex, kam)
    res = asymptotic_vectors(A, Omega, n_theta, tol)
    if res is None:
        return StabilityClass(StabilityTag.Indeterminate, kam,
                              diagnostic=f"degenerate restricted form, eigenvalues {at_eigs}")
    Iplus, _ = res
    if all(_mixed_signs(v) for v in Iplus):
        return StabilityClass(StabilityTag.DirectionallyQuasiConvex, kam)
    return StabilityClass(StabilityTag.Indeterminate, kam, diagnostic="asymptotic vector in the positive orthant")


def _mixed_signs(v, rel=SIGN_TOL) -> bool:
    t = rel * np.linalg.norm(v)
    return bool(np.any(v > t) and np.any(v < -t))


def nekhoroshev_exponents(cls: StabilityClass):
    """Exponent pairs ``(alpha, beta)`` available for the class, strongest first."""
    if cls.tag not in _STRENGTH:
        return None
    out = [(0.25, 0.25)]
    if cls.at_least(StabilityTag.QuasiConvex):
        out.append((1.0, 1.0 / 16.0))
    return out


def det_lu(A) -> float:
    with warnings.catch_warnings():
        # an exactly singular A is a legitimate input here
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(np.asarray(A, dtype=float))
    sign = (-1) ** int(np.sum(piv != np.arange(len(piv))))
    return float(sign * np.prod(np.diag(lu)))


def det_eig(A) -> float:
    return float(np.prod(np.linalg.eigvalsh(np.asarray(A, dtype=float))))


def kam_check_matrix(A, tol=KAM_TOL) -> bool:
    """``|det A|`` against the product of the row norms (Hadamard's bound).

    The ratio lies in [0, 1] and ignores row scaling, which matters near
    coincident semiaxes where a few entries of ``A`` grow by orders of magnitude.
    """
    A = np.asarray(A, dtype=float)
    rows = np.linalg.norm(A, axis=1)
    if not np.all(rows > 0):
        return False
    return bool(abs(det_lu(A)) > tol * np.prod(rows))


def kam_check(nf: NormalFormReport, tol=KAM_TOL) -> bool:
    """``det A`` bounded away from zero relative to the Hadamard bound."""
    if not nf.constructed:
        return False
    return kam_check_matrix(nf.A, tol)
