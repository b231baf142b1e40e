"""Sparse truncated power series in eight variables.

Monomials are stored as packed integer keys, four bits per exponent, so that
multiplying two monomials is a single integer addition.  Variables ``0..3``
are read as ``W1..W4`` and ``4..7`` as ``Z1..Z4`` whenever harmonics,
spectra or Poisson brackets are involved; the same container is also used
for real polynomials in ``(b, c, q, p)``.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

NVARS = 8
NDOF = 4
BITS = 4
MASK = (1 << BITS) - 1
DEFAULT_MAX_DEGREE = 4
PRUNE_REL = 1e-14

_SHIFTS = np.arange(NVARS, dtype=np.int64) * BITS


class ResonanceError(ArithmeticError):
    """Raised when a small divisor ``Omega . nu`` is below the resonance tolerance."""

    def __init__(self, nu, divisor, message=None):
        self.nu = tuple(int(v) for v in nu)
        self.order = int(sum(abs(v) for v in self.nu))
        self.divisor = float(divisor)
        if message is None:
            message = f"resonance nu={self.nu} (order {self.order}), |Omega.nu|={self.divisor:.3e}"
        super().__init__(message)


def pack(exponents) -> int:
    key = 0
    for i, e in enumerate(exponents):
        if not 0 <= e <= MASK:
            raise ValueError(f"exponent {e} out of range")
        key |= int(e) << (BITS * i)
    return key


def unpack(key: int) -> tuple:
    return tuple((int(key) >> (BITS * i)) & MASK for i in range(NVARS))


def _exponents(keys: np.ndarray) -> np.ndarray:
    return (keys[:, None] >> _SHIFTS[None, :]) & MASK


def _combine(keys, values, max_degree):
    """Sum duplicate keys and build a pruned series."""
    if keys.size == 0:
        return TruncatedSeries.zero(max_degree)
    uniq, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, weights=values.real, minlength=uniq.size)
    im = np.bincount(inv, weights=values.imag, minlength=uniq.size)
    return TruncatedSeries(uniq, re + 1j * im, max_degree)


class TruncatedSeries:
    """Immutable polynomial truncated at total degree ``max_degree``.

    Parameters
    ----------
    keys : array of int
        Packed exponent keys (see :func:`pack`).
    coeffs : array of complex
        Coefficients matching ``keys``.
    max_degree : int
        Terms of higher total degree are discarded.
    """

    __slots__ = ("keys", "coeffs", "degrees", "max_degree")

    def __init__(self, keys, coeffs, max_degree=DEFAULT_MAX_DEGREE, prune=True):
        keys = np.asarray(keys, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if keys.shape != coeffs.shape:
            raise ValueError("keys and coeffs must have the same shape")
        if max_degree > MASK:
            raise ValueError("max_degree exceeds packed exponent width")
        degrees = _exponents(keys).sum(axis=1) if keys.size else np.zeros(0, np.int64)
        keep = degrees <= max_degree
        if prune and coeffs.size:
            scale = np.abs(coeffs[keep]).max() if keep.any() else 0.0
            keep &= np.abs(coeffs) > PRUNE_REL * scale
        order = np.argsort(keys[keep], kind="stable")
        self.keys = keys[keep][order]
        self.coeffs = coeffs[keep][order]
        self.degrees = degrees[keep][order]
        self.max_degree = int(max_degree)

    # -- construction ---------------------------------------------------
    @classmethod
    def zero(cls, max_degree=DEFAULT_MAX_DEGREE):
        return cls(np.zeros(0, np.int64), np.zeros(0, complex), max_degree)

    @classmethod
    def constant(cls, value, max_degree=DEFAULT_MAX_DEGREE):
        return cls([0], [value], max_degree)

    @classmethod
    def variable(cls, index, coeff=1.0, max_degree=DEFAULT_MAX_DEGREE):
        e = [0] * NVARS
        e[index] = 1
        return cls([pack(e)], [coeff], max_degree)

    @classmethod
    def from_dict(cls, terms, max_degree=DEFAULT_MAX_DEGREE):
        keys = [pack(e) for e in terms]
        return _combine(np.asarray(keys, np.int64), np.asarray(list(terms.values()), complex), max_degree)

    def to_dict(self):
        return {unpack(k): complex(c) for k, c in zip(self.keys, self.coeffs)}

    # -- inspection -----------------------------------------------------
    def __len__(self):
        return self.keys.size

    def __repr__(self):
        return f"TruncatedSeries({len(self)} terms, max_degree={self.max_degree})"

    @property
    def exponents(self) -> np.ndarray:
        return _exponents(self.keys)

    def norm(self) -> float:
        return float(np.abs(self.coeffs).max()) if len(self) else 0.0

    def coefficient(self, exponents) -> complex:
        k = pack(exponents)
        i = np.searchsorted(self.keys, k)
        if i < len(self.keys) and self.keys[i] == k:
            return complex(self.coeffs[i])
        return 0j

    def constant_term(self) -> complex:
        return self.coefficient((0,) * NVARS)

    def homogeneous(self, degree):
        m = self.degrees == degree
        return TruncatedSeries(self.keys[m], self.coeffs[m], self.max_degree, prune=False)

    def truncate(self, max_degree):
        return TruncatedSeries(self.keys, self.coeffs, max_degree, prune=False)

    def with_max_degree(self, max_degree):
        return self.truncate(max_degree)

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            return other
        return TruncatedSeries.constant(other, self.max_degree)

    def __add__(self, other):
        other = self._coerce(other)
        md = min(self.max_degree, other.max_degree)
        return _combine(np.concatenate([self.keys, other.keys]),
                        np.concatenate([self.coeffs, other.coeffs]), md)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.keys, -self.coeffs, self.max_degree, prune=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.keys, self.coeffs * complex(other), self.max_degree)
        md = min(self.max_degree, other.max_degree)
        if not len(self) or not len(other):
            return TruncatedSeries.zero(md)
        deg = self.degrees[:, None] + other.degrees[None, :]
        m = deg <= md
        keys = (self.keys[:, None] + other.keys[None, :])[m]
        vals = np.multiply.outer(self.coeffs, other.coeffs)[m]
        return _combine(keys, vals, md)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * reciprocal(other)
        return self * (1.0 / other)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = TruncatedSeries.constant(1.0, self.max_degree)
        for _ in range(n):
            out = out * self
        return out

    def conj_coeffs(self):
        return TruncatedSeries(self.keys, np.conj(self.coeffs), self.max_degree, prune=False)

    def real_part(self):
        return TruncatedSeries(self.keys, self.coeffs.real.astype(complex), self.max_degree)

    def derivative(self, var):
        e = (self.keys >> (BITS * var)) & MASK
        m = e > 0
        return TruncatedSeries(self.keys[m] - (1 << (BITS * var)), self.coeffs[m] * e[m],
                               self.max_degree, prune=False)

    def evaluate(self, point) -> complex:
        point = np.asarray(point, dtype=complex)
        if not len(self):
            return 0j
        return complex(np.sum(self.coeffs * np.prod(point[None, :] ** self.exponents, axis=1)))

    # -- harmonics ------------------------------------------------------
    def harmonic_indices(self) -> np.ndarray:
        """Integer vector ``j - k`` of every stored term, shape ``(n, 4)``."""
        e = self.exponents
        return e[:, :NDOF] - e[:, NDOF:]

    def serialize(self) -> str:
        """Deterministic text form: one term per line in ascending key order."""
        lines = [f"# max_degree={self.max_degree} terms={len(self)}"]
        for k, c in zip(self.keys, self.coeffs):
            e = " ".join(str(v) for v in unpack(k))
            lines.append(f"{e} {c.real:+.17e} {c.imag:+.17e}")
        return "\n".join(lines) + "\n"

    @classmethod
    def deserialize(cls, text):
        lines = text.strip().splitlines()
        md = int(lines[0].split()[1].split("=")[1])
        keys, vals = [], []
        for line in lines[1:]:
            parts = line.split()
            keys.append(pack([int(v) for v in parts[:NVARS]]))
            vals.append(float(parts[NVARS]) + 1j * float(parts[NVARS + 1]))
        return cls(keys, vals, md, prune=False)


# ---------------------------------------------------------------------------
# univariate compositions


def compose_univariate(f, taylor):
    """Evaluate ``sum_k taylor[k] * (f - f(0))**k`` as a truncated series."""
    c0 = f.constant_term()
    x = f - c0
    out = TruncatedSeries.constant(taylor[0], f.max_degree)
    power = TruncatedSeries.constant(1.0, f.max_degree)
    for coef in taylor[1:f.max_degree + 1]:
        power = power * x
        if not len(power):
            break
        out = out + power * coef
    return out


def _binomial_taylor(c0, exponent, order):
    """Taylor coefficients of ``(c0 + x)**exponent`` about ``x = 0``."""
    coeffs = []
    binom = 1.0
    for k in range(order + 1):
        coeffs.append(binom * c0 ** (exponent - k))
        binom *= (exponent - k) / (k + 1)
    return coeffs


def sqrt_series(f):
    """Square root of a series with positive real constant term."""
    c0 = f.constant_term()
    if abs(c0.imag) > 1e-14 * max(1.0, abs(c0)) or c0.real <= 0:
        raise ValueError(f"sqrt_series needs a positive constant term, got {c0}")
    return compose_univariate(f, _binomial_taylor(c0.real, 0.5, f.max_degree))


def reciprocal(f):
    c0 = f.constant_term()
    if c0 == 0:
        raise ZeroDivisionError("reciprocal of a series with zero constant term")
    return compose_univariate(f, _binomial_taylor(c0, -1.0, f.max_degree))


def power_series(f, exponent):
    """``f**exponent`` for real exponent; constant term must be positive."""
    c0 = f.constant_term()
    if c0.real <= 0:
        raise ValueError("power_series needs a positive constant term")
    return compose_univariate(f, _binomial_taylor(c0.real, exponent, f.max_degree))


# ---------------------------------------------------------------------------
# brackets, harmonics, homological equation


def poisson_bracket(f, g):
    """``{f, g} = sum_j df/dZ_j dg/dW_j - dg/dZ_j df/dW_j``."""
    md = min(f.max_degree, g.max_degree)
    out = TruncatedSeries.zero(md)
    for j in range(NDOF):
        out = out + f.derivative(NDOF + j) * g.derivative(j) - g.derivative(NDOF + j) * f.derivative(j)
    return out


def harmonic(f, nu):
    nu = np.asarray(nu, dtype=np.int64)
    if not len(f):
        return f
    m = np.all(f.harmonic_indices() == nu[None, :], axis=1)
    return TruncatedSeries(f.keys[m], f.coeffs[m], f.max_degree, prune=False)


def average(f):
    return harmonic(f, np.zeros(NDOF, np.int64))


def spectrum(f, rel_tol=0.0):
    """Set of harmonics ``nu`` present in ``f``.

    A harmonic counts only if its largest coefficient exceeds
    ``rel_tol * max|f|``; with ``rel_tol=0`` every stored term counts.
    """
    if not len(f):
        return set()
    nus = f.harmonic_indices()
    mags = np.abs(f.coeffs)
    thresh = rel_tol * mags.max()
    uniq, inv = np.unique(nus, axis=0, return_inverse=True)
    best = np.zeros(len(uniq))
    np.maximum.at(best, inv.ravel(), mags)
    return {tuple(int(v) for v in u) for u, b in zip(uniq, best) if b > thresh}


def quadratic_normal_part(omega, max_degree=DEFAULT_MAX_DEGREE):
    """``H2 = sum_j i Omega_j Z_j W_j``."""
    terms = {}
    for j in range(NDOF):
        e = [0] * NVARS
        e[j] = e[NDOF + j] = 1
        terms[tuple(e)] = 1j * omega[j]
    return TruncatedSeries.from_dict(terms, max_degree)


def homological_solve(omega, f, res_tol=None, spectral_tol=1e-10):
    """Solve ``{H2, chi} = f - <f>_0`` for ``chi``.

    Parameters
    ----------
    omega : array_like, shape (4,)
        Signed frequency vector.
    f : TruncatedSeries
    res_tol : float, optional
        Small-divisor threshold; defaults to ``1e-6 * |omega|``.
    spectral_tol : float
        Harmonics whose coefficients are all below ``spectral_tol * |f|`` are
        numerical noise: they are divided when safe and dropped otherwise,
        but never trigger :class:`ResonanceError`.

    Raises
    ------
    ResonanceError
        If a significant harmonic ``nu != 0`` has ``|omega . nu| <= res_tol``.
    """
    omega = np.asarray(omega, dtype=float)
    if res_tol is None:
        res_tol = 1e-6 * np.linalg.norm(omega)
    if not len(f):
        return f
    nus = f.harmonic_indices()
    div = nus @ omega
    nonzero = np.any(nus != 0, axis=1)
    small = nonzero & (np.abs(div) <= res_tol)
    if small.any():
        significant = set(spectrum(f, spectral_tol))
        for nu, d in zip(nus[small], div[small]):
            if tuple(int(v) for v in nu) in significant:
                raise ResonanceError(nu, abs(d))
    m = nonzero & ~small
    return TruncatedSeries(f.keys[m], f.coeffs[m] / (1j * div[m]), f.max_degree, prune=False)


def is_real_function(f, tol=1e-10):
    """Check ``f_jk = conj(f_kj) * i**(|j|+|k|)``.

    This is the condition for ``f(W, Z)`` to be real on ``W = -i conj(Z)``,
    the locus of real ``(B, C, Q, P)``.
    """
    if not len(f):
        return True
    e = f.exponents
    swapped = np.concatenate([e[:, NDOF:], e[:, :NDOF]], axis=1)
    skeys = (swapped << _SHIFTS[None, :]).sum(axis=1)
    idx = np.searchsorted(f.keys, skeys)
    idx = np.clip(idx, 0, len(f.keys) - 1)
    found = f.keys[idx] == skeys
    partner = np.where(found, f.coeffs[idx], 0.0)
    phase = (1j) ** (f.degrees % 4)
    resid = np.abs(f.coeffs - np.conj(partner) * phase)
    return bool(resid.max() <= tol * f.norm())


# ---------------------------------------------------------------------------
# symmetric tensors and linear substitution


@lru_cache(maxsize=None)
def _tensor_tables(degree):
    """Packed key and multinomial weight for every index tuple of ``degree``."""
    tuples = list(itertools.product(range(NVARS), repeat=degree))
    keys = np.zeros(len(tuples), np.int64)
    weights = np.zeros(len(tuples))
    fact = math.factorial(degree)
    for n, t in enumerate(tuples):
        e = [0] * NVARS
        for i in t:
            e[i] += 1
        keys[n] = pack(e)
        weights[n] = fact / math.prod(math.factorial(v) for v in e)
    return keys, weights


def to_tensor(f, degree):
    """Symmetric tensor ``T`` with ``f_d(x) = T[i1..id] x_i1 ... x_id``."""
    keys, weights = _tensor_tables(degree)
    h = f.homogeneous(degree)
    idx = np.searchsorted(h.keys, keys)
    idx = np.clip(idx, 0, max(len(h.keys) - 1, 0))
    if len(h):
        vals = np.where(h.keys[idx] == keys, h.coeffs[idx], 0.0) / weights
    else:
        vals = np.zeros(len(keys), complex)
    return vals.reshape((NVARS,) * degree)


def from_tensor(tensor, max_degree=DEFAULT_MAX_DEGREE):
    degree = tensor.ndim
    if degree == 0:
        return TruncatedSeries.constant(complex(tensor), max_degree)
    keys, _ = _tensor_tables(degree)
    return _combine(keys, np.asarray(tensor, complex).ravel(), max_degree)


def linear_substitute(f, matrix):
    """Return ``g(y) = f(matrix @ y)``."""
    matrix = np.asarray(matrix, dtype=complex)
    out = TruncatedSeries.constant(f.constant_term(), f.max_degree)
    for d in range(1, f.max_degree + 1):
        t = to_tensor(f, d)
        if not np.any(t):
            continue
        for axis in range(d):
            t = np.tensordot(t, matrix, axes=([0], [0]))
        out = out + from_tensor(t, f.max_degree)
    return out
