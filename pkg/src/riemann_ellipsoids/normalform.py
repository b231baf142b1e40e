"""Symplectic diagonalization and the fourth-order Birkhoff normal form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import polyalg
from .families import EquilibriumPoint
from .polyalg import ResonanceError
from .reduced import J8, LinearizationReport, hamiltonian_series, linearize

SPECTRAL_TOL = 1e-10
SYMPLECTIC_TOL = 1e-9


class DegenerateModeError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FrequencyData:
    omega: np.ndarray        # positive frequencies, in mode order
    signs: np.ndarray        # s_j = sign(Gamma_j)
    Gamma: np.ndarray
    T: np.ndarray            # xi = T Xi, columns (u1, u2, v1, v2, u3, u4, v3, v4)/gamma
    orientation: str = "columns"
    permutation: tuple = ()  # eigenvalue index of each mode

    @property
    def Omega(self) -> np.ndarray:
        return self.signs * self.omega

    def symplectic_residual(self) -> float:
        return float(np.abs(self.T.T @ J8 @ self.T - J8).max())

    def h2_residual(self, hessian) -> float:
        """Max deviation of ``T^T H T`` from ``diag(s w)`` relative to ``max w``."""
        target = np.diag(_pair_layout(self.Omega))
        return float(np.abs(self.T.T @ hessian @ self.T - target).max() / self.omega.max())


def _pair_layout(v):
    """Entries per Xi coordinate ``(B1, B2, C1, C2, Q1, Q2, P1, P2)``."""
    return np.array([v[0], v[1], v[0], v[1], v[2], v[3], v[2], v[3]])


def _fix_phase(x):
    k = int(np.argmax(np.abs(x)))
    x = x * (abs(x[k]) / x[k])
    return x / np.linalg.norm(x)


def _positive_modes(X, idx):
    """Eigenpairs of ``X[idx, idx]`` with positive imaginary part, embedded in R^8."""
    sub = X[np.ix_(idx, idx)]
    ev, vec = np.linalg.eig(sub)
    keep = np.where(ev.imag > 0)[0]
    modes = []
    for k in keep:
        x = np.zeros(8, complex)
        x[idx] = vec[:, k]
        modes.append((float(ev[k].imag), _fix_phase(x), complex(ev[k])))
    # descending frequency, ties broken on the support of the eigenvector
    modes.sort(key=lambda m: (-round(m[0], 12), tuple(-np.round(np.abs(m[1]), 12))))
    return modes


def _check_distinct(omega, pairs, res_tol):
    for j, w in enumerate(omega):
        if w <= res_tol:
            nu = [0] * 4
            nu[j] = 1
            raise ResonanceError(nu, w)
    # with w_j > 0, s_j w_j +- s_k w_k vanishes for some sign iff w_j = w_k
    for j, k in pairs:
        if abs(omega[j] - omega[k]) <= res_tol:
            nu = [0] * 4
            nu[j], nu[k] = 1, -1
            raise ResonanceError(nu, abs(omega[j] - omega[k]))


def symplectic_diagonalize(report: LinearizationReport, s_type=False, res_tol=None) -> FrequencyData:
    """Build the linear symplectic map ``T`` that diagonalizes ``H2``.

    For equilibria of type S the two 4x4 blocks of ``X`` are diagonalized
    separately, modes 1, 2 coming from ``(b, c)`` and 3, 4 from ``(q, p)``;
    otherwise modes are sorted by decreasing frequency.
    """
    if not report.elliptic:
        raise ValueError("symplectic diagonalization needs an elliptic equilibrium")
    X = report.X
    if s_type:
        modes = _positive_modes(X, np.arange(4)) + _positive_modes(X, np.arange(4, 8))
        pairs = [(0, 1), (2, 3)]
    else:
        modes = _positive_modes(X, np.arange(8))
        pairs = [(j, k) for j in range(4) for k in range(j + 1, 4)]
    if len(modes) != 4:
        raise ResonanceError([1, 0, 0, 0], 0.0, "zero frequency: fewer than four positive modes")
    omega = np.array([m[0] for m in modes])
    if res_tol is None:
        res_tol = 1e-6 * np.linalg.norm(omega)
    _check_distinct(omega, pairs, res_tol)

    cols_u, cols_v, Gam = [], [], []
    for w, x, _ in modes:
        xr, xi = x.real, x.imag
        G = float(xr @ J8 @ xi)
        if abs(G) < 1e-12:
            raise DegenerateModeError(f"Gamma = {G:.2e} for frequency {w}")
        u, v = (xr, xi) if G > 0 else (xi, xr)
        gam = np.sqrt(abs(G))
        cols_u.append(u / gam)
        cols_v.append(v / gam)
        Gam.append(G)
    Tc = np.column_stack([cols_u[0], cols_u[1], cols_v[0], cols_v[1],
                          cols_u[2], cols_u[3], cols_v[2], cols_v[3]])
    signs = np.sign(Gam)
    perm = tuple(int(np.argmin(np.abs(report.eigenvalues - m[2]))) for m in modes)
    best = None
    for orient, T in (("columns", Tc), ("rows", Tc.T)):
        fd = FrequencyData(omega, signs, np.array(Gam), T, orient, perm)
        res = max(fd.symplectic_residual(), fd.h2_residual(report.hessian))
        if res <= SYMPLECTIC_TOL:
            return fd
        if best is None or res < best[0]:
            best = (res, fd)
    raise DegenerateModeError(f"no orientation of T passes the symplectic/H2 self-test (residual {best[0]:.2e})")


# ---------------------------------------------------------------------------
# complex coordinates


_SIGMA4 = np.array([[1j, 0, 1, 0],
                    [0, 1j, 0, 1],
                    [-1, 0, -1j, 0],
                    [0, -1, 0, -1j]]) / np.sqrt(2.0)
SIGMA = np.block([[_SIGMA4, np.zeros((4, 4))], [np.zeros((4, 4)), _SIGMA4]])
# U ordering (W1, W2, Z1, Z2, W3, W4, Z3, Z4) -> series variable numbers
_U_TO_VAR = (0, 1, 4, 5, 2, 3, 6, 7)
_PERM = np.zeros((8, 8))
for _k, _v in enumerate(_U_TO_VAR):
    _PERM[_k, _v] = 1.0


def complex_substitution(freq: FrequencyData) -> np.ndarray:
    """Matrix ``M`` with ``xi = M u`` for ``u`` in series variable order (W1..W4, Z1..Z4)."""
    return freq.T @ SIGMA @ _PERM


def complexify(series, freq: FrequencyData):
    return polyalg.linear_substitute(series, complex_substitution(freq))


def taylor_hamiltonian(e: EquilibriumPoint, order=4):
    """``H2 + H3 + H4`` in the real offsets ``(b, c, q, p)``; constant dropped."""
    H = hamiltonian_series(e, order)
    return H - H.constant_term()


# ---------------------------------------------------------------------------
# Birkhoff normal form


@dataclass
class NormalFormReport:
    freq: FrequencyData | None
    A: np.ndarray | None
    resonances_hit: list
    constructed: bool
    spectrum3: frozenset = frozenset()
    spectrum4: frozenset = frozenset()
    diagnostics: dict = field(default_factory=dict)
    H4_avg: object = None

    @property
    def Omega(self):
        return None if self.freq is None else self.freq.Omega

    def to_dict(self) -> dict:
        out = {
            "constructed": self.constructed,
            "Omega": None if self.freq is None else [float(v) for v in self.freq.Omega],
            "A": None if self.A is None else [[float(v) for v in row] for row in self.A],
            "resonances": [{"nu": list(nu), "order": int(o), "divisor": float(d)}
                           for nu, o, d in self.resonances_hit],
        }
        return out

    def serialize(self) -> str:
        """Deterministic JSON with floats written by ``repr`` (17 significant digits)."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def action_matrix(h4avg) -> np.ndarray:
    """``A`` with ``H4''(I) = 1/2 I.A I`` for ``I_j = i W_j Z_j``."""
    A = np.zeros((4, 4))
    imag = 0.0
    for j in range(4):
        for k in range(j, 4):
            e = [0] * 8
            e[j] += 1
            e[k] += 1
            e[4 + j] += 1
            e[4 + k] += 1
            c = h4avg.coefficient(e)
            # W_j Z_j W_k Z_k = -I_j I_k
            val = -2.0 * c if j == k else -c
            A[j, k] = A[k, j] = val.real
            imag = max(imag, abs(val.imag))
    return A, imag


def _divisors(omega, nus):
    return {nu: float(abs(np.dot(omega, nu))) for nu in nus}


def birkhoff_order4(e: EquilibriumPoint, res_tol=None, report: LinearizationReport | None = None,
                    spectral_tol=SPECTRAL_TOL) -> NormalFormReport:
    """Order-four Birkhoff normal form of the reduced Hamiltonian at ``e``.

    Resonances of order one or two abort at diagonalization; those of order
    three or four are collected and reported with ``constructed = False``.
    """
    if report is None:
        report = linearize(e)
    return normal_form_from_series(taylor_hamiltonian(e), report, e.kind.is_s_type, res_tol, spectral_tol)


def normal_form_from_series(H, report: LinearizationReport, s_type=False, res_tol=None,
                            spectral_tol=SPECTRAL_TOL) -> NormalFormReport:
    """Normal form of a real series ``H`` (no constant term) whose quadratic part matches ``report``."""
    if not report.elliptic:
        raise ValueError("normal form needs an elliptic equilibrium")
    try:
        freq = symplectic_diagonalize(report, s_type, res_tol)
    except ResonanceError as exc:
        return NormalFormReport(None, None, [(exc.nu, exc.order, exc.divisor)], False,
                                diagnostics={"failure": str(exc)})
    Omega = freq.Omega
    if res_tol is None:
        res_tol = 1e-6 * np.linalg.norm(Omega)

    Hc = complexify(H, freq)
    H2, H3, H4 = Hc.homogeneous(2), Hc.homogeneous(3), Hc.homogeneous(4)
    diag = {
        "symplectic_residual": freq.symplectic_residual(),
        "h2_residual": freq.h2_residual(report.hessian),
        "h2_form_residual": (H2 - polyalg.quadratic_normal_part(Omega)).norm() / np.abs(Omega).max(),
        "h1_norm": Hc.homogeneous(1).norm(),
    }
    sp3 = frozenset(polyalg.spectrum(H3, spectral_tol))
    div3 = _divisors(Omega, sp3)
    hits = sorted((nu, sum(map(abs, nu)), d) for nu, d in div3.items() if d <= res_tol)
    if hits:
        return NormalFormReport(freq, None, hits, False, sp3, frozenset(), diag)

    chi1 = polyalg.homological_solve(Omega, H3, res_tol, spectral_tol)
    resid = polyalg.poisson_bracket(polyalg.quadratic_normal_part(Omega), chi1) - H3
    diag["homological_residual"] = resid.norm() / max(H3.norm(), 1e-300)

    H4p = (polyalg.poisson_bracket(chi1, H3) * 0.5 + H4).truncate(4).homogeneous(4)
    sp4 = frozenset(polyalg.spectrum(H4p, spectral_tol)) - {(0, 0, 0, 0)}
    div4 = _divisors(Omega, sp4)
    hits = sorted((nu, sum(map(abs, nu)), d) for nu, d in div4.items() if d <= res_tol)
    if hits:
        return NormalFormReport(freq, None, hits, False, sp3, sp4, diag)

    H4avg = polyalg.average(H4p)
    A, imag = action_matrix(H4avg)
    diag["A_imag"] = imag
    diag["avg_commutator"] = polyalg.poisson_bracket(polyalg.quadratic_normal_part(Omega), H4avg).norm() / max(H4avg.norm(), 1e-300)
    return NormalFormReport(freq, A, [], True, sp3, sp4, diag, H4avg)
