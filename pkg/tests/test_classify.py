import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from riemann_ellipsoids import classify as cl
from riemann_ellipsoids import families as fam
from riemann_ellipsoids import normalform as nfm
from riemann_ellipsoids.classify import StabilityTag as Tag
from riemann_ellipsoids.geometry import semiaxes_from_xy

from conftest import MID_POINTS

entries = st.floats(-3.0, 3.0, allow_nan=False)
sym4 = st.lists(entries, min_size=16, max_size=16).map(lambda v: (lambda M: M + M.T)(np.reshape(v, (4, 4))))
vec4 = st.lists(entries, min_size=4, max_size=4).map(np.array).filter(lambda w: np.linalg.norm(w) > 0.1)
E1 = np.array([1.0, 0.0, 0.0, 0.0])


def rotation3(axis_from, axis_to):
    """Rotation of R^3 taking the unit vector ``axis_from`` to ``axis_to``."""
    a, b = np.asarray(axis_from, float), np.asarray(axis_to, float)
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    v, c = np.cross(a, b), a @ b
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1 + c)


def embed_restricted(At):
    A = np.zeros((4, 4))
    A[1:, 1:] = At
    return A


def test_identity_is_convex():
    c = cl.classify_matrix(np.eye(4), np.array([1.0, -0.5, 0.3, 0.2]))
    assert c.tag is Tag.Convex and c.kam_nondegenerate
    assert c.at_least(Tag.QuasiConvex) and c.at_least(Tag.DirectionallyQuasiConvex)


def test_indefinite_with_definite_restriction_is_quasi_convex():
    A = np.diag([-1.0, 1.0, 2.0, 3.0])
    c = cl.classify_matrix(A, E1)
    assert c.tag is Tag.QuasiConvex
    assert not c.at_least(Tag.Convex) and c.at_least(Tag.DirectionallyQuasiConvex)


def narrow_cone(axis):
    R = rotation3([1.0, 0.0, 0.0], axis)
    return embed_restricted(R @ np.diag([0.1, -1.0, -1.0]) @ R.T)


def test_cone_off_the_orthant_is_directionally_quasi_convex():
    A = narrow_cone([1.0, -1.0, 0.0])
    A[0, 0] = 0.5
    assert cl.classify_matrix(A, E1).tag is Tag.DirectionallyQuasiConvex


def test_cone_through_the_orthant_is_indeterminate():
    A = narrow_cone([1.0, 1.0, 1.0])
    A[0, 0] = 0.5
    c = cl.classify_matrix(A, E1)
    assert c.tag is Tag.Indeterminate
    assert c.nekhoroshev_exponents is None


def test_cone_parametrization():
    alphas = np.array([0.7, -1.3, -0.4])
    theta = np.linspace(0, 2 * math.pi, 57)
    for sign in (1, -1):
        x = cl.cone_ellipse(alphas, theta, sign)
        lhs = x[:, 0] ** 2
        rhs = abs(alphas[1]) / alphas[0] * x[:, 1] ** 2 + abs(alphas[2]) / alphas[0] * x[:, 2] ** 2
        assert np.allclose(lhs, rhs, atol=1e-14)
        assert np.allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-14)


@given(sym4, vec4)
def test_asymptotic_vectors_lie_on_the_cone(A, Omega):
    res = cl.asymptotic_vectors(A, Omega)
    assume(res is not None)
    I, _ = res
    scale = np.abs(A).max()
    assert np.allclose(np.einsum("ti,ij,tj->t", I, A, I), 0.0, atol=1e-10 * scale)
    assert np.allclose(I @ Omega, 0.0, atol=1e-12 * np.linalg.norm(Omega))
    assert np.allclose(np.linalg.norm(I, axis=1), 1.0, atol=1e-12)


def test_omega_frame():
    near_axis = [np.array([1.0, 0.0, 0.0, 1e-6]), np.array([-1.0, 1e-7, 0.0, 0.0])]
    for w in [E1, np.array([-1.0, 0.0, 0.0, 0.0]), np.array([0.3, -1.2, 0.5, 2.0])] + near_axis:
        R = cl.omega_frame(w)
        assert np.allclose(R @ R.T, np.eye(4), atol=1e-14)
        assert np.linalg.det(R) == pytest.approx(1.0)
        assert np.allclose(R @ w, np.linalg.norm(w) * E1, atol=1e-14)
    with pytest.raises(ValueError):
        cl.omega_frame(np.zeros(4))


def test_definite_restriction_has_no_cone():
    assert cl.asymptotic_vectors(np.diag([0.0, 2.0, 2.0, 2.0]), E1) is None


@given(sym4, vec4)
def test_sign_flips_preserve_the_class(A, Omega):
    base = cl.classify_matrix(A, Omega).tag
    assert cl.classify_matrix(-A, Omega).tag is base
    assert cl.classify_matrix(A, -Omega).tag is base


@given(sym4, vec4, st.permutations(range(4)))
def test_relabelling_modes_preserves_the_class(A, Omega, perm):
    P = np.eye(4)[list(perm)]
    assert cl.classify_matrix(P @ A @ P.T, P @ Omega).tag is cl.classify_matrix(A, Omega).tag


@given(sym4, vec4)
def test_implication_chain(A, Omega):
    c = cl.classify_matrix(A, Omega)
    if c.tag is Tag.Convex:
        # convex forms have definite restrictions and no real asymptotic directions
        _, At = cl.reduced_form(A, Omega)
        eig = np.linalg.eigvalsh(At)
        assert np.all(eig > 0) or np.all(eig < 0)
    if c.tag in (Tag.Convex, Tag.QuasiConvex):
        assert c.nekhoroshev_exponents == [(0.25, 0.25), (1.0, 1.0 / 16.0)]


def test_nekhoroshev_exponents():
    assert cl.nekhoroshev_exponents(cl.StabilityClass(Tag.DirectionallyQuasiConvex)) == [(0.25, 0.25)]
    assert cl.nekhoroshev_exponents(cl.StabilityClass(Tag.QuasiConvex))[-1] == (1.0, 0.0625)
    assert cl.nekhoroshev_exponents(cl.StabilityClass(Tag.NotElliptic)) is None
    assert cl.StabilityClass(Tag.Resonant, resonance_order=3).label == "Resonant(3)"


def test_kam_nondegeneracy():
    A = np.diag([1.0, 2.0, -1.0, 0.5])
    assert cl.kam_check_matrix(A)
    A[2] = 0.0
    A[:, 2] = 0.0
    assert not cl.kam_check_matrix(A)
    assert not cl.kam_check_matrix(np.zeros((4, 4)))


def test_kam_check_ignores_row_scaling():
    # an S2 action matrix near b2 = b3: one block is ~1e6 times the other
    A = np.array([[-0.443473, -1.332946, -0.550426, -0.254804],
                  [-1.332946, -0.189819, -1.152321, -0.199035],
                  [-0.550426, -1.152321, 6.75961447e6, 3.68839619e6],
                  [-0.254804, -0.199035, 3.68839619e6, 5.03194176e5]])
    assert cl.kam_check_matrix(A)
    D = np.diag([1.0, 1e-3, 1e4, 1.0])
    assert cl.kam_check_matrix(D @ A)
    singular = A.copy()
    singular[3] = 2.5 * singular[2]
    singular[:, 3] = 2.5 * singular[:, 2]
    assert not cl.kam_check_matrix(singular)


@given(sym4)
def test_determinant_two_ways(A):
    assume(np.abs(A).max() > 1e-3)
    d1, d2 = cl.det_lu(A), cl.det_eig(A)
    assert abs(d1 - d2) <= 1e-10 * max(abs(d1), np.abs(A).max() ** 4 * 1e-3)


def test_unconstructed_normal_form_is_resonant():
    nf = nfm.NormalFormReport(None, None, [((1, -2, 0, 0), 3, 1e-9)], False)
    c = cl.classify_normal_form(nf)
    assert c.tag is Tag.Resonant and c.resonance_order == 3
    assert not cl.kam_check(nf)


@pytest.mark.parametrize("kind", ["S2", "S3"])
def test_s_type_midpoints(kind):
    nf = nfm.birkhoff_order4(fam.equilibrium(kind, semiaxes_from_xy(*MID_POINTS[kind])))
    c = cl.classify_normal_form(nf)
    assert c.tag is Tag.DirectionallyQuasiConvex
    assert c.kam_nondegenerate and cl.kam_check(nf)
