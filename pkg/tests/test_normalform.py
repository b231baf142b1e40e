import numpy as np
import pytest
import scipy.linalg

from riemann_ellipsoids import families as fam
from riemann_ellipsoids import normalform as nfm
from riemann_ellipsoids import polyalg
from riemann_ellipsoids import reduced as red
from riemann_ellipsoids.geometry import semiaxes_from_xy
from riemann_ellipsoids.polyalg import TruncatedSeries as S
from riemann_ellipsoids.verify import region_samples

from conftest import MID_POINTS

PAIRS = [(0, 2), (1, 3), (4, 6), (5, 7)]


def oscillators(omega, signs, cubic, quartic, coupling=0.0):
    """Decoupled anharmonic oscillators ``s w (x^2 + y^2)/2 + a x^3 + b x^4`` plus ``d x1^2 x2^2``."""
    H = S.zero(4)
    hess = np.zeros((8, 8))
    for (x, y), w, s, a, b in zip(PAIRS, omega, signs, cubic, quartic):
        X, Y = S.variable(x), S.variable(y)
        H = H + (X * X + Y * Y) * (0.5 * s * w) + X * X * X * a + X * X * X * X * b
        hess[x, x] = hess[y, y] = s * w
    H = H + S.variable(0) * S.variable(0) * S.variable(1) * S.variable(1) * coupling
    return H, red.linearization_from_hessian(hess)


OMEGA = np.array([2.3, 1.7, 1.1, 0.61])
SIGNS = np.array([1.0, -1.0, 1.0, -1.0])
CUBIC = np.array([0.3, -0.2, 0.5, 0.1])
QUARTIC = np.array([0.7, 0.4, -0.2, 0.9])


def test_anharmonic_oscillator_coefficients():
    H, rep = oscillators(OMEGA, SIGNS, CUBIC, QUARTIC, coupling=0.25)
    nf = nfm.normal_form_from_series(H, rep)
    assert nf.constructed
    assert np.allclose(nf.Omega, SIGNS * OMEGA, rtol=1e-12)
    # x = sqrt(2 I) cos(phi): <x^4> = 3 I^2 / 2; the cubic term enters at second order
    expected = 1.5 * QUARTIC - SIGNS * 15 * CUBIC ** 2 / (4 * OMEGA)
    assert np.allclose(np.diag(nf.A) / 2, expected, rtol=1e-10)
    assert nf.A[0, 1] == pytest.approx(0.25, rel=1e-10)
    off = nf.A - np.diag(np.diag(nf.A))
    off[0, 1] = off[1, 0] = 0.0
    assert np.abs(off).max() <= 1e-12
    assert np.allclose(nf.A, nf.A.T, atol=0)


def test_resonant_oscillators_are_reported():
    omega = np.array([2.0, 1.0, 0.73, 0.31])
    H, rep = oscillators(omega, np.ones(4), [0.3, 0.2, 0.0, 0.0], np.zeros(4))
    H = H + S.variable(0) * S.variable(1) * S.variable(1) * 0.4
    nf = nfm.normal_form_from_series(H, rep)
    assert not nf.constructed
    assert any(nu == (1, -2, 0, 0) and order == 3 for nu, order, _ in nf.resonances_hit)


def test_equal_frequencies_abort_at_second_order():
    H, rep = oscillators(np.array([2.0, 1.0, 1.0, 0.5]), np.ones(4), np.zeros(4), np.ones(4))
    nf = nfm.normal_form_from_series(H, rep)
    assert not nf.constructed
    assert nf.resonances_hit[0][1] == 2


def test_invariant_under_symplectic_change_of_coordinates(mid_equilibrium):
    e = mid_equilibrium
    H = nfm.taylor_hamiltonian(e)
    rep = red.linearize(e)
    nf = nfm.normal_form_from_series(H, rep, e.kind.is_s_type)
    rng = np.random.default_rng(5)
    Sym = rng.normal(size=(8, 8)) * 0.2
    L = scipy.linalg.expm(red.J8 @ (Sym + Sym.T))
    assert np.abs(L.T @ red.J8 @ L - red.J8).max() < 1e-12
    H2 = polyalg.linear_substitute(H, L).real_part()
    rep2 = red.linearization_from_hessian(L.T @ rep.hessian @ L)
    nf2 = nfm.normal_form_from_series(H2, rep2)
    assert nf.constructed and nf2.constructed
    # compare as multisets of (Omega_j, row of A), since mode labels may differ
    key = np.argsort(np.abs(nf.Omega))
    key2 = np.argsort(np.abs(nf2.Omega))
    assert np.allclose(nf.Omega[key], nf2.Omega[key2], rtol=1e-9)
    assert np.allclose(nf.A[np.ix_(key, key)], nf2.A[np.ix_(key2, key2)], rtol=1e-6, atol=1e-8 * np.abs(nf.A).max())


def test_sigma_is_symplectic():
    assert np.allclose(nfm.SIGMA.T @ red.J8 @ nfm.SIGMA, red.J8, atol=1e-15)


def test_normal_form_identities(mid_equilibrium):
    e = mid_equilibrium
    nf = nfm.birkhoff_order4(e)
    assert nf.constructed
    d = nf.diagnostics
    assert d["symplectic_residual"] <= nfm.SYMPLECTIC_TOL
    assert d["h2_residual"] <= 1e-9
    assert d["h2_form_residual"] <= 1e-9
    assert d["homological_residual"] <= 1e-10
    assert d["A_imag"] <= 1e-9 * np.abs(nf.A).max()
    assert polyalg.spectrum(nf.H4_avg) == {(0, 0, 0, 0)}
    assert np.all(nf.freq.Gamma != 0)
    assert np.allclose(nf.A, nf.A.T)


def test_taylor_hamiltonian_structure(mid_equilibrium):
    e = mid_equilibrium
    H = nfm.taylor_hamiltonian(e)
    hess, _ = red.hessian_at_equilibrium(e)
    assert H.constant_term() == 0
    assert H.homogeneous(1).norm() <= 1e-8 * np.abs(hess).max()
    assert np.abs(2 * polyalg.to_tensor(H, 2).real - hess).max() <= 1e-9 * np.abs(hess).max()
    # H is quadratic in c
    cdeg = H.exponents[:, 2] + H.exponents[:, 3]
    assert set(cdeg.tolist()) <= {0, 2}


def test_complexified_terms_are_real_functions(mid_equilibrium):
    e = mid_equilibrium
    rep = red.linearize(e)
    freq = nfm.symplectic_diagonalize(rep, e.kind.is_s_type)
    Hc = nfm.complexify(nfm.taylor_hamiltonian(e), freq)
    for k in (2, 3, 4):
        assert polyalg.is_real_function(Hc.homogeneous(k), 1e-9)


def test_s2_transformation_is_block_diagonal():
    e = fam.equilibrium("S2", semiaxes_from_xy(*MID_POINTS["S2"]))
    freq = nfm.symplectic_diagonalize(red.linearize(e), s_type=True)
    T = freq.T
    assert np.abs(T[:4, 4:]).max() == 0 and np.abs(T[4:, :4]).max() == 0


@pytest.mark.parametrize("kind", list(fam.EllipsoidType))
def test_symplectic_transformation_on_samples(kind, rng):
    for b in region_samples(kind, rng, 10, elliptic=True):
        rep = red.linearize(fam.equilibrium(kind, b))
        try:
            freq = nfm.symplectic_diagonalize(rep, kind.is_s_type)
        except polyalg.ResonanceError:
            continue
        assert freq.symplectic_residual() <= 1e-9
        assert freq.h2_residual(rep.hessian) <= 1e-9
        assert np.allclose(np.sort(freq.omega), np.sort(rep.frequencies), rtol=1e-10)


def test_rejects_nonelliptic():
    x, y = 0.8, 0.3
    e = fam.equilibrium("I", semiaxes_from_xy(x, y))
    rep = red.linearize(e)
    assert not rep.elliptic
    with pytest.raises(ValueError):
        nfm.birkhoff_order4(e, report=rep)


def test_serialization_is_deterministic(mid_equilibrium):
    a = nfm.birkhoff_order4(mid_equilibrium).serialize()
    b = nfm.birkhoff_order4(mid_equilibrium).serialize()
    assert a == b
