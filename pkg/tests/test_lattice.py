import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkplab.lattice import (
    GkpCode,
    LatticeBasis,
    M_A2,
    cvp,
    cvp_coefficients,
    dual_basis,
    hexagonal_code,
    lattice_constants,
    lattice_theta,
    named_code,
    points_within,
    riemann_theta,
    shell_index,
    square_code,
    symplectic_form,
)


def brute_nearest(x, M, box=6):
    """Brute-force closest lattice point for 2-D oracle checks."""
    best, best_d = None, np.inf
    for c in itertools.product(range(-box, box + 1), repeat=M.shape[0]):
        v = np.array(c) @ M
        d = np.sum((v - x) ** 2)
        if d < best_d - 1e-12:
            best, best_d = v, d
    return best


def test_symplectic_form():
    J = symplectic_form(2)
    assert J.shape == (4, 4)
    assert np.array_equal(J @ J, -np.eye(4))
    assert np.array_equal(J.T, -J)


def test_square_code_geometry():
    code = square_code(2)
    assert code.n == 1 and code.d == 2
    assert np.isclose(abs(code.basis.det()), 2.0)
    assert np.isclose(abs(code.dual.det()), 0.5)
    assert code.is_scaled()
    # Gram matrix is d * J
    assert np.allclose(code.gram, 2.0 * symplectic_form(1))


def test_hexagonal_code_geometry():
    code = hexagonal_code(2)
    assert np.isclose(abs(code.basis.det()), 2.0)
    assert code.is_scaled()
    consts = lattice_constants(code.basis)
    # sqrt(2) * lambda_1(A2) with lambda_1(A2)^2 = 2/sqrt(3)
    assert np.isclose(consts.lambda1, np.sqrt(2.0) * np.sqrt(2.0 / np.sqrt(3.0)))


def test_a2_basis_unimodular():
    assert np.isclose(abs(np.linalg.det(M_A2)), 1.0)
    # equilateral: both rows same length, 60 degree angle
    r0, r1 = M_A2
    assert np.isclose(r0 @ r0, r1 @ r1)
    assert np.isclose(r0 @ r1 / (r0 @ r0), 0.5)


def test_dual_pairing_integer():
    for name in ("square", "hexagonal"):
        code = named_code(name)
        pair = code.basis.M @ symplectic_form(1) @ code.dual.M.T
        assert np.allclose(pair, np.rint(pair), atol=1e-9)


def test_dual_of_dual():
    code = hexagonal_code()
    dd = dual_basis(code.dual)
    # same lattice: transform matrix between bases is integer unimodular
    T = dd.M @ np.linalg.inv(code.basis.M)
    assert np.allclose(T, np.rint(T), atol=1e-9)
    assert np.isclose(abs(np.linalg.det(T)), 1.0)


def test_cvp_against_brute_force():
    rng = np.random.default_rng(11)
    for name in ("square", "hexagonal"):
        code = named_code(name)
        for _ in range(40):
            x = rng.normal(0, 1.5, size=2)
            v = cvp(x, code.basis)
            w = brute_nearest(x, code.basis.M)
            assert np.isclose(
                np.sum((v - x) ** 2), np.sum((w - x) ** 2), atol=1e-9
            )


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_cvp_random_bases(entries, x0, x1):
    M = np.array(entries).reshape(2, 2)
    if abs(np.linalg.det(M)) < 0.3:
        return
    basis = LatticeBasis(1, M)
    x = np.array([x0, x1])
    v = cvp(x, basis)
    w = brute_nearest(x, M, box=8)
    assert np.isclose(np.sum((v - x) ** 2), np.sum((w - x) ** 2), atol=1e-8)


def test_cvp_coefficients_integer():
    code = hexagonal_code()
    c = cvp_coefficients(np.array([0.7, -1.1]), code.basis)
    assert np.array_equal(c, np.rint(c))


def test_points_within_brute_force():
    code = hexagonal_code()
    pts = points_within(code.basis, 4.0)
    brute = set()
    for c in itertools.product(range(-6, 7), repeat=2):
        v = np.array(c) @ code.basis.M
        if v @ v <= 16.0 + 1e-12:
            brute.add((round(v[0], 9), round(v[1], 9)))
    got = {(round(p[0], 9), round(p[1], 9)) for p in map(tuple, pts)}
    assert got == brute


def test_shell_index_origin_and_far():
    code = square_code()
    assert shell_index(np.zeros(2), code) == 0
    # a point just past the first Voronoi boundary of L_perp
    lam1 = lattice_constants(code.dual).lambda1
    assert shell_index(np.array([0.51 * lam1 * np.sqrt(2), 0.0]), code) >= 1


def test_riemann_theta_jacobi_reduction():
    # 2-D theta with diagonal Omega factorizes into Jacobi theta3 products
    t = 1.3
    val = riemann_theta(None, 1j * t * np.eye(2))
    theta3 = sum(np.exp(-np.pi * t * k * k) for k in range(-20, 21))
    assert np.isclose(np.real(val), theta3**2, atol=1e-12)
    assert np.isclose(np.imag(val), 0.0, atol=1e-12)


def test_riemann_theta_shift_periodicity():
    # theta(z + m, Omega) = theta(z, Omega) for integer m
    Om = 1j * (M_A2 @ M_A2.T)
    z = np.array([0.3 - 0.2j, 0.1 + 0.4j])
    assert np.isclose(
        riemann_theta(z, Om), riemann_theta(z + np.array([2.0, -1.0]), Om),
        atol=1e-10,
    )


def test_lattice_theta_value_a2():
    val = lattice_theta(LatticeBasis(1, M_A2), 0.5j)
    assert np.isclose(np.real(val), 1.1595953, atol=5e-7)


def test_lattice_theta_direct_sum_oracle():
    basis = hexagonal_code().basis
    z = 0.21j
    pts = points_within(basis, 12.0)
    direct = np.sum(np.exp(2j * np.pi * z * np.einsum("ij,ij->i", pts, pts)))
    assert np.isclose(lattice_theta(basis, z), direct, atol=1e-9)


def test_logical_coset_reps():
    for name in ("square", "hexagonal"):
        code = named_code(name)
        reps = code.logical_coset_reps()
        assert len(reps) == code.d ** (2 * code.n)
        assert np.allclose(reps[(0, 0)], 0.0)
        # representatives are shortest in their coset
        for cls, rep in reps.items():
            for c in itertools.product(range(-3, 4), repeat=2):
                assert (
                    rep @ rep
                    <= np.sum((rep + np.array(c) @ code.basis.M) ** 2) + 1e-9
                )


def test_code_json_roundtrip():
    code = hexagonal_code()
    obj = code.to_json()
    basis = LatticeBasis.from_json(obj)
    assert np.allclose(basis.M, code.basis.M)
    assert obj["d"] == 2 and obj["name"] == "hexagonal"


def test_named_code_unknown():
    with pytest.raises(ValueError):
        named_code("triangular")


def test_gkp_code_requires_integer_gram():
    M = np.array([[1.3, 0.0], [0.0, 1.1]])
    with pytest.raises(ValueError):
        GkpCode(LatticeBasis(1, M), 2, "bad")
