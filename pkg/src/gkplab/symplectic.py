"""Symplectic matrices over R and Z_d.

Elementary logical Clifford generators, compilation of mod-d symplectic
matrices into generator sequences, random walks over the generator set,
automorphism lifts to real symplectic matrices, and 2-design certification
via the frame potential.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lattice import GkpCode, symplectic_form

__all__ = [
    "SymplecticMatrix",
    "ModSymplecticMatrix",
    "Gate",
    "GeneratorSequence",
    "elementary_generators",
    "compile_symplectic",
    "COMPILE_LENGTH_CONSTANT",
    "compile_length_bound",
    "random_walk_element",
    "mixing_budget",
    "automorphism_lift",
    "frame_potential",
    "two_design_unitaries",
    "two_design_elements",
    "enumerate_sp2",
]


@dataclass(frozen=True)
class SymplecticMatrix:
    n: int
    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        J = symplectic_form(self.n)
        if not np.allclose(S.T @ J @ S, J, atol=1e-10):
            raise ValueError("matrix is not symplectic")
        object.__setattr__(self, "S", S)


def _check_mod_symplectic(U: np.ndarray, n: int, d: int) -> None:
    J = np.rint(symplectic_form(n)).astype(int)
    if ((U.T @ J @ U - J) % d).any():
        raise ValueError("matrix is not symplectic mod d")


@dataclass(frozen=True)
class ModSymplecticMatrix:
    """Integer symplectic matrix mod a prime d, acting on column vectors."""

    n: int
    d: int
    U: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=int) % self.d
        if U.shape != (2 * self.n, 2 * self.n):
            raise ValueError("wrong shape")
        _check_mod_symplectic(U, self.n, self.d)
        object.__setattr__(self, "U", U)

    def __matmul__(self, other: "ModSymplecticMatrix") -> "ModSymplecticMatrix":
        if (self.n, self.d) != (other.n, other.d):
            raise ValueError("incompatible matrices")
        return ModSymplecticMatrix(self.n, self.d, (self.U @ other.U) % self.d)

    def inv(self) -> "ModSymplecticMatrix":
        # U^{-1} = J^T U^T J for symplectic U (valid mod d as well).
        J = np.rint(symplectic_form(self.n)).astype(int)
        return ModSymplecticMatrix(self.n, self.d, (J.T @ self.U.T @ J) % self.d)

    def key(self) -> tuple:
        return tuple(int(v) for v in self.U.ravel())


@dataclass(frozen=True)
class Gate:
    """Generator label: name in {F, P, CX, B}, mode indices 1-based."""

    gate: str
    i: int
    j: int | None = None

    def to_json(self) -> dict:
        out = {"gate": self.gate, "i": self.i}
        if self.j is not None:
            out["j"] = self.j
        return out


GeneratorSequence = list  # list[Gate]


def _pi(n: int, i: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=int)
    out[i - 1, i - 1] = 1
    return out


def _e(n: int, i: int, j: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=int)
    out[i - 1, j - 1] = 1
    return out


def gate_matrix(g: Gate, n: int, d: int) -> ModSymplecticMatrix:
    eye = np.eye(n, dtype=int)
    zero = np.zeros((n, n), dtype=int)
    if g.gate == "F":
        pi = _pi(n, g.i)
        U = np.block([[eye - pi, pi], [-pi, eye - pi]])
    elif g.gate == "P":
        U = np.block([[eye, zero], [_pi(n, g.i), eye]])
    elif g.gate == "CX":
        U = np.block(
            [[eye + _e(n, g.j, g.i), zero], [zero, eye - _e(n, g.i, g.j)]]
        )
    elif g.gate == "B":
        U = np.block(
            [[eye, _e(n, g.i, g.j) + _e(n, g.j, g.i)], [zero, eye]]
        )
    else:
        raise ValueError(f"unknown gate {g.gate!r}")
    return ModSymplecticMatrix(n, d, U)


def _is_prime(d: int) -> bool:
    if d < 2:
        return False
    return all(d % p for p in range(2, int(d**0.5) + 1))


def elementary_generators(n: int, d: int) -> list[tuple[Gate, ModSymplecticMatrix]]:
    """The generating set {J_i, P_i, C_{i->j}} plus the derived B_{i,j}.

    Returns (label, matrix) pairs; 2n + n(n-1) primary generators and the
    n(n-1)/2 two-mode B gates.
    """
    if not _is_prime(d):
        raise ValueError("unsupported modulus: d must be prime")
    if n < 1:
        raise ValueError("n must be >= 1")
    gates = [Gate("F", i) for i in range(1, n + 1)]
    gates += [Gate("P", i) for i in range(1, n + 1)]
    gates += [
        Gate("CX", i, j)
        for i in range(1, n + 1)
        for j in range(1, n + 1)
        if i != j
    ]
    gates += [Gate("B", i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    return [(g, gate_matrix(g, n, d)) for g in gates]


def multiply_sequence(seq: GeneratorSequence, n: int, d: int) -> ModSymplecticMatrix:
    out = ModSymplecticMatrix(n, d, np.eye(2 * n, dtype=int))
    for g in seq:
        out = out @ gate_matrix(g, n, d)
    return out


def _minv(a: int, d: int) -> int:
    return pow(int(a) % d, d - 2, d)


def _mat_inv_mod(A: np.ndarray, d: int) -> np.ndarray:
    n = A.shape[0]
    M = np.concatenate([A % d, np.eye(n, dtype=int)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r, col] % d), None)
        if piv is None:
            raise ValueError("matrix not invertible mod d")
        M[[col, piv]] = M[[piv, col]]
        M[col] = (M[col] * _minv(M[col, col], d)) % d
        for r in range(n):
            if r != col and M[r, col]:
                M[r] = (M[r] - M[r, col] * M[col]) % d
    return M[:, n:]


def _seq_upper(B: np.ndarray, n: int, d: int) -> GeneratorSequence:
    """Sequence for [[I, B], [0, I]] with symmetric B."""
    seq: GeneratorSequence = []
    for i in range(1, n + 1):
        k = (-int(B[i - 1, i - 1])) % d
        if k:
            # J_i P_i^k J_i^3 realizes [[I, -k pi_i], [0, I]].
            seq += [Gate("F", i)] + [Gate("P", i)] * k + [Gate("F", i)] * 3
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            k = int(B[i - 1, j - 1]) % d
            seq += [Gate("B", i, j)] * k
    return seq


def _seq_lower(C: np.ndarray, n: int, d: int) -> GeneratorSequence:
    """Sequence for [[I, 0], [C, I]] with symmetric C.

    Uses J [[I, -C], [0, I]] J^T = [[I, 0], [C, I]] with J = prod_i J_i.
    """
    seq: GeneratorSequence = []
    diag_done = []
    for i in range(1, n + 1):
        k = int(C[i - 1, i - 1]) % d
        if k:
            seq += [Gate("P", i)] * k
            diag_done.append(i)
    off = C.copy()
    np.fill_diagonal(off, 0)
    if off.any():
        wrap = [Gate("F", i) for i in range(1, n + 1)]
        unwrap = [g for i in range(1, n + 1) for g in [Gate("F", i)] * 3]
        seq += wrap + _seq_upper((-off) % d, n, d) + unwrap
    return seq


def _seq_sl2_on_mode(U2: np.ndarray, mode: int, n: int, d: int) -> GeneratorSequence:
    """Compile a single-mode SL_2(F_d) matrix acting on the given mode."""
    a, b = int(U2[0, 0]) % d, int(U2[0, 1]) % d
    c, e = int(U2[1, 0]) % d, int(U2[1, 1]) % d
    if (a * e - b * c) % d != 1:
        raise ValueError("not an SL2 matrix mod d")
    F, P = Gate("F", mode), Gate("P", mode)

    def upper(u):
        u = u % d
        return [] if not u else [F] + [P] * ((-u) % d) + [F] * 3

    def lower(cc):
        return [P] * (cc % d)

    if c % d == 0:
        # Premultiply by J: U = J^{-1} (J U); J = [[0,1],[-1,0]].
        JU = np.array([[c, e], [-a, -b]]) % d
        return [F] * 3 + _seq_sl2_on_mode(JU, mode, n, d)
    cinv = _minv(c, d)
    u = ((a - 1) * cinv) % d
    v = ((e - 1) * cinv) % d
    return upper(u) + lower(c) + upper(v)


def _seq_gl_block(A: np.ndarray, n: int, d: int) -> GeneratorSequence:
    """Sequence for [[A, 0], [0, A^{-T}]] with A in GL(n, d).

    Row transvections (CNOT powers) reduce A to diag(1, ..., 1, det A);
    the residual scaling is a single-mode symplectic on the last mode.
    """
    A = A.copy() % d
    seq: GeneratorSequence = []
    # C_{i->j}^k has A-block I + k e_{j,i}: left-multiplying the running
    # product adds k * (row i) to (row j).  Build U = T_1 T_2 ... D, so we
    # peel transvections from the left while reducing A with inverse ops.
    for col in range(n):
        piv = next(
            (r for r in range(col, n) if A[r, col] % d), None
        )
        if piv is None:
            raise ValueError("A block not invertible")
        if piv != col:
            if A[col, col] % d == 0:
                # add row piv to row col to create a pivot
                seq.append(Gate("CX", piv + 1, col + 1))
                A[col] = (A[col] - A[piv]) % d
                # record: emitted gate adds +1*row(piv) to row(col) on the left
                # so remove it from A
        # normalize below; eliminate other rows
        pivval = A[col, col] % d
        if pivval == 0:
            raise ValueError("pivot creation failed")
        for r in range(n):
            if r != col and A[r, col] % d:
                k = (A[r, col] * _minv(pivval, d)) % d
                seq += [Gate("CX", col + 1, r + 1)] * k
                A[r] = (A[r] - k * A[col]) % d
        # scale pivot to 1 except possibly the last column
        if col < n - 1 and pivval != 1:
            # move the unit into place by scaling with the last mode later
            # is messy; instead scale rows pairwise: multiply row col by
            # lambda via a single-mode symplectic on mode col at the end.
            lam = pivval
            D2 = np.array([[lam, 0], [0, _minv(lam, d)]])
            seq += _seq_sl2_on_mode(D2, col + 1, n, d)
            A[col] = (A[col] * _minv(lam, d)) % d
    lam = int(A[n - 1, n - 1]) % d
    if lam != 1:
        D2 = np.array([[lam, 0], [0, _minv(lam, d)]])
        seq += _seq_sl2_on_mode(D2, n, n, d)
    return seq


#: Fixed reported constant for the compile length contract len <= c * d * n^2.
COMPILE_LENGTH_CONSTANT = 12


def compile_length_bound(n: int, d: int) -> int:
    return COMPILE_LENGTH_CONSTANT * d * n * n


def compile_symplectic(U: ModSymplecticMatrix) -> GeneratorSequence:
    """Compile U into a generator sequence whose product is U mod d.

    Factors U = Q [[I,0],[C,I]] [[A,0],[0,A^{-T}]] [[I,B],[0,I]] with Q a
    product of Fourier gates chosen so the upper-left block is invertible,
    then expands each factor into generator powers.
    """
    n, d = U.n, U.d
    if not _is_prime(d):
        raise ValueError("unsupported modulus: d must be prime")
    if np.array_equal(U.U % d, np.eye(2 * n, dtype=int)):
        return []
    # choose Fourier subset making the A block invertible
    for subset in itertools.product([0, 1], repeat=n):
        Q = ModSymplecticMatrix(n, d, np.eye(2 * n, dtype=int))
        seq_q: GeneratorSequence = []
        for i, bit in enumerate(subset, start=1):
            if bit:
                Q = Q @ gate_matrix(Gate("F", i), n, d)
                seq_q.append(Gate("F", i))
        V = (Q.inv() @ U).U % d
        A = V[:n, :n]
        try:
            Ainv = _mat_inv_mod(A, d)
        except ValueError:
            continue
        B = (Ainv @ V[:n, n:]) % d
        C = (V[n:, :n] @ Ainv) % d
        if ((B - B.T) % d).any() or ((C - C.T) % d).any():
            continue
        seq = (
            seq_q
            + _seq_lower(C, n, d)
            + _seq_gl_block(A, n, d)
            + _seq_upper(B, n, d)
        )
        if multiply_sequence(seq, n, d).key() != U.key():
            raise RuntimeError("compilation round-trip failed")
        if len(seq) > compile_length_bound(n, d):
            raise RuntimeError("compiled sequence exceeds length bound")
        return seq
    raise ValueError("validation error: no Fourier subset yields invertible block")


def random_walk_element(
    generators: list[tuple[Gate, ModSymplecticMatrix]],
    k: int,
    rng: np.random.Generator,
) -> ModSymplecticMatrix:
    """Product of k uniform generator steps; each step is a generator or its
    inverse with probability 1/2 (symmetric step measure)."""
    if not generators:
        raise ValueError("empty generator set")
    if k < 0:
        raise ValueError("k must be >= 0")
    n, d = generators[0][1].n, generators[0][1].d
    out = ModSymplecticMatrix(n, d, np.eye(2 * n, dtype=int))
    for _ in range(k):
        _, g = generators[rng.integers(len(generators))]
        if rng.random() < 0.5:
            g = g.inv()
        out = out @ g
    return out


def mixing_budget(n: int, d: int) -> dict:
    """Walk-length budgets for an approximate Clifford twirl.

    plain: k >= O(d^2 n^6) for the bare generator set;
    powered: k >= O(d n^6) when the r = 0..d-1 generator powers are added.
    Constants are taken as 1 (order-of-magnitude budgets).
    """
    return {"plain": d * d * n**6, "powered": d * n**6}


def _integer_symplectic_representatives(U: ModSymplecticMatrix) -> list[np.ndarray]:
    """Integer matrices V = U (mod d) with V^T J V = J exactly over Z.

    The canonical entries in [0, d) need not be symplectic over the
    integers (e.g. the mod-2 Fourier [[0,1],[1,0]] has determinant -1);
    for n = 1 shifting entries by multiples of d restores det = 1.
    """
    J = np.rint(symplectic_form(U.n)).astype(int)

    def ok(V):
        return np.array_equal(V.T @ J @ V, J)

    out = [U.U] if ok(U.U) else []
    if U.n == 1:
        for off in itertools.product((0, -1, 1), repeat=4):
            if any(off):
                V = U.U + U.d * np.array(off).reshape(2, 2)
                if ok(V):
                    out.append(V)
    if not out:
        raise ValueError("no integer symplectic representative found")
    return out


def automorphism_lift(U: ModSymplecticMatrix, code: GkpCode) -> SymplecticMatrix:
    """Physical Gaussian unitary implementing the logical symplectic U.

    S = M^T U^T M^{-T}; maps the dual lattice into itself, which is checked
    by integrality of the transformed dual coefficients.
    """
    if not code.is_scaled():
        raise ValueError("automorphism lift requires a scaled code")
    M = code.basis.M
    Minv_T = np.linalg.inv(M).T
    # several integer representatives of the mod-d class may lift; prefer
    # the best-conditioned physical matrix (rotations where they exist)
    best = min(
        (M.T @ V.T @ Minv_T for V in _integer_symplectic_representatives(U)),
        key=lambda S: np.linalg.norm(S.T @ S - np.eye(2 * code.n)),
    )
    lifted = SymplecticMatrix(code.n, best)
    # dual lattice preservation: rows of M_perp @ S^T must be integer
    # combinations of rows of M_perp.
    T = code.dual.M @ lifted.S.T @ np.linalg.inv(code.dual.M)
    if not np.allclose(T, np.rint(T), atol=1e-8):
        raise ValueError("inconsistent code/U: lift does not preserve the dual")
    return lifted


def frame_potential(unitaries: list[np.ndarray]) -> float:
    """F = |S|^{-2} sum_{U,V} |Tr(U^dag V)|^4."""
    if not unitaries:
        raise ValueError("empty unitary set")
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    total = sum(
        abs(np.trace(u.conj().T @ v)) ** 4 for u in us for v in us
    )
    return float(total) / len(us) ** 2


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
_PAULIS = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
}


def two_design_unitaries() -> list[np.ndarray]:
    """The 12-element qubit Clifford 2-design <H S^dag> * Paulis."""
    return [u for u, _, _ in two_design_elements()]


def two_design_elements() -> list[tuple[np.ndarray, ModSymplecticMatrix, tuple]]:
    """2-design elements as (qubit matrix, mod-2 symplectic part, pauli class).

    The pauli class (a, b) labels the logical displacement coset: (1,0) = X,
    (0,1) = Z, (1,1) = Y in dual-basis coefficients mod 2.
    """
    T = _H @ _S.conj().T
    Usym = ModSymplecticMatrix(
        1, 2, (_PAULI_FREE_SYMPLECTIC := np.array([[1, 1], [1, 0]]))
    )
    out = []
    rot_u = np.eye(2, dtype=complex)
    rot_s = ModSymplecticMatrix(1, 2, np.eye(2, dtype=int))
    for _ in range(3):
        for cls, pauli in _PAULIS.items():
            out.append((rot_u @ pauli, rot_s, cls))
        rot_u = T @ rot_u
        rot_s = Usym @ rot_s
    return out


def enumerate_sp2(d: int) -> list[ModSymplecticMatrix]:
    """All elements of Sp_2(Z_d) = SL_2(Z_d) by direct enumeration."""
    out = []
    for a, b, c, e in itertools.product(range(d), repeat=4):
        if (a * e - b * c) % d == 1:
            out.append(ModSymplecticMatrix(1, d, np.array([[a, b], [c, e]])))
    return out
