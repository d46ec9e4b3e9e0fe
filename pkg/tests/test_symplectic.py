import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkplab.lattice import hexagonal_code, named_code, square_code, symplectic_form
from gkplab.symplectic import (
    ModSymplecticMatrix,
    SymplecticMatrix,
    automorphism_lift,
    compile_length_bound,
    compile_symplectic,
    elementary_generators,
    enumerate_sp2,
    frame_potential,
    mixing_budget,
    multiply_sequence,
    random_walk_element,
    two_design_elements,
    two_design_unitaries,
)

_PAULI_MATRICES = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def test_symplectic_matrix_validation():
    S = np.array([[1.0, 0.7], [0.0, 1.0]])
    SymplecticMatrix(1, S)  # shear is symplectic
    with pytest.raises(ValueError):
        SymplecticMatrix(1, np.diag([2.0, 1.0]))


def test_mod_symplectic_validation():
    ModSymplecticMatrix(1, 2, np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        ModSymplecticMatrix(1, 2, np.array([[1, 1], [1, 1]]))


def test_elementary_generators_are_symplectic():
    for n, d in [(1, 2), (2, 2), (1, 3), (2, 3)]:
        gens = elementary_generators(n, d)
        assert gens
        J = symplectic_form(n)
        for _, g in gens:
            lhs = (g.U.T @ J @ g.U) % d
            assert np.array_equal(lhs, J % d)


def test_enumerate_sp2_group_orders():
    # |SL_2(Z_d)| = d^3 prod_{p | d} (1 - p^{-2})
    assert len(enumerate_sp2(2)) == 6
    assert len(enumerate_sp2(3)) == 24


def test_compile_exhaustive_sp2_z2():
    bound = compile_length_bound(1, 2)
    for U in enumerate_sp2(2):
        seq = compile_symplectic(U)
        assert len(seq) <= bound
        assert np.array_equal(multiply_sequence(seq, 1, 2).U, U.U)


@pytest.mark.parametrize("n,d", [(2, 2), (1, 3), (2, 3)])
def test_compile_random_roundtrips(n, d):
    rng = np.random.default_rng(5)
    bound = compile_length_bound(n, d)
    for _ in range(30):
        gens = elementary_generators(n, d)
        U = random_walk_element(gens, mixing_budget(n, d)["plain"], rng)
        seq = compile_symplectic(U)
        assert len(seq) <= bound
        assert np.array_equal(multiply_sequence(seq, n, d).U, U.U)


def test_random_walk_element_is_symplectic():
    rng = np.random.default_rng(9)
    J = symplectic_form(2)
    for _ in range(20):
        U = random_walk_element(elementary_generators(2, 3), 25, rng)
        assert np.array_equal((U.U.T @ J @ U.U) % 3, J % 3)


def test_frame_potential_two_design():
    assert np.isclose(frame_potential(two_design_unitaries()), 2.0, atol=1e-9)


def test_frame_potential_pauli_set():
    assert np.isclose(frame_potential(_PAULI_MATRICES), 4.0, atol=1e-9)


def test_frame_potential_haar_lower_bound():
    # any finite set sits at or above the Haar value 2 (qubit)
    rng = np.random.default_rng(3)
    us = []
    for _ in range(60):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        q, _ = np.linalg.qr(a)
        us.append(q)
    assert frame_potential(us) >= 2.0 - 0.05


def test_two_design_elements_structure():
    elems = two_design_elements()
    assert len(elems) == 12
    classes = [cls for _, _, cls in elems]
    assert sorted(set(classes)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    # the symplectic part matches conjugation action on Pauli classes
    for u, usym, cls in elems:
        assert np.isclose(abs(np.linalg.det(u)), 1.0)
        assert usym.U.shape == (2, 2)


def test_automorphism_lift_preserves_dual():
    for name in ("square", "hexagonal"):
        code = named_code(name)
        for _, usym, _ in two_design_elements():
            S = automorphism_lift(usym, code)
            T = code.dual.M @ S.S.T @ np.linalg.inv(code.dual.M)
            assert np.allclose(T, np.rint(T), atol=1e-8)


def test_hexagonal_lifts_are_rotations():
    # the order-3 Clifford only lifts to a rotation on the hexagonal lattice
    code = hexagonal_code()
    for _, usym, _ in two_design_elements():
        S = automorphism_lift(usym, code)
        assert np.allclose(S.S.T @ S.S, np.eye(2), atol=1e-9)


def test_automorphism_lift_logical_action():
    # lifted S acts on dual coset representatives as U acts mod d
    code = square_code()
    reps = code.logical_coset_reps()
    for _, usym, _ in two_design_elements():
        S = automorphism_lift(usym, code)
        for cls, rep in reps.items():
            image = S.S @ rep
            coeff = image @ np.linalg.inv(code.dual.M)
            assert np.allclose(coeff, np.rint(coeff), atol=1e-8)


def test_compile_length_bound_formula():
    assert compile_length_bound(1, 2) == 12 * 2
    assert compile_length_bound(2, 3) == 12 * 3 * 4


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_compile_roundtrip_property(seed):
    rng = np.random.default_rng(seed)
    U = random_walk_element(elementary_generators(1, 3), 20, rng)
    assert np.array_equal(multiply_sequence(compile_symplectic(U), 1, 3).U, U.U)


def test_hexagonal_lift_order_three_rotation():
    # the Clifford part of the 2-design lifts to a finite-order rotation
    code = hexagonal_code()
    elems = two_design_elements()
    usym = elems[4][1]  # first non-identity Clifford block
    S = automorphism_lift(usym, code)
    order = 1
    P = S.S.copy()
    while not np.allclose(P, np.eye(2), atol=1e-9) and order < 13:
        P = P @ S.S
        order += 1
    assert order < 13
