"""Symplectic lattice algebra for GKP codes.

Bases, duals, symplectic Gram matrices, closest-vector queries, Voronoi
shells, and theta functions.  All phase-space conventions used by the rest
of the package are frozen here:

- hbar = 1, displacements carry a sqrt(2*pi) scaling,
- the symplectic form is ``J = [[0, I], [-I, 0]]`` in (q, p) block order,
- the dual basis is chosen as ``M_perp = M^{-T} J^T`` so that
  ``M_perp @ J @ M.T = I`` exactly.

Lattices are row-generated: the rows of ``M`` are the basis vectors and
lattice points are ``z @ M`` for integer row vectors ``z``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Voronoi

__all__ = [
    "symplectic_form",
    "LatticeBasis",
    "GkpCode",
    "LatticeConstants",
    "dual_basis",
    "symplectic_gram",
    "cvp",
    "cvp_coefficients",
    "shell_index",
    "riemann_theta",
    "theta_truncation",
    "lattice_theta",
    "lattice_constants",
    "square_code",
    "hexagonal_code",
    "named_code",
    "points_within",
]

#: Hexagonal (A2) symplectic unimodular basis, det = 1.
M_A2 = (1.0 / np.sqrt(2.0 * np.sqrt(3.0))) * np.array(
    [[2.0, 0.0], [1.0, np.sqrt(3.0)]]
)


def symplectic_form(n: int) -> np.ndarray:
    """Return the 2n x 2n symplectic form J = [[0, I], [-I, 0]]."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class LatticeBasis:
    """Full-rank lattice basis in R^{2n}; rows of M generate the lattice."""

    n: int
    M: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.shape != (2 * self.n, 2 * self.n):
            raise ValueError(f"basis must be {2*self.n}x{2*self.n}, got {M.shape}")
        if abs(np.linalg.det(M)) < 1e-12:
            raise ValueError("basis matrix is singular")
        object.__setattr__(self, "M", M)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def det(self) -> float:
        return float(np.linalg.det(self.M))

    def is_symplectically_self_dual(self, tol: float = 1e-12) -> bool:
        J = symplectic_form(self.n)
        return bool(np.allclose(self.M @ J @ self.M.T, J, atol=tol))

    def scaled(self, c: float) -> "LatticeBasis":
        return LatticeBasis(self.n, c * self.M)

    def point(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs, dtype=float) @ self.M

    def to_json(self) -> dict:
        return {"n": self.n, "M": self.M.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "LatticeBasis":
        return LatticeBasis(int(obj["n"]), np.asarray(obj["M"], dtype=float))


def dual_basis(basis: LatticeBasis) -> LatticeBasis:
    """Symplectic dual basis M_perp = M^{-T} J^T, so M_perp J M^T = I."""
    J = symplectic_form(basis.n)
    Mp = np.linalg.inv(basis.M).T @ J.T
    return LatticeBasis(basis.n, Mp)


def symplectic_gram(basis: LatticeBasis, tol: float = 1e-9) -> np.ndarray:
    """Integer symplectic Gram matrix A = M J M^T.

    Raises ValueError when M J M^T is not integer: the corresponding
    displacement set does not form an abelian stabilizer group.
    """
    J = symplectic_form(basis.n)
    A = basis.M @ J @ basis.M.T
    A_int = np.rint(A)
    if not np.allclose(A, A_int, atol=tol):
        raise ValueError("not a valid GKP lattice: M J M^T is not integer")
    return A_int.astype(int)


@dataclass(frozen=True)
class GkpCode:
    """A GKP stabilizer lattice with its dual, Gram matrix and qudit dimension."""

    basis: LatticeBasis
    d: int
    name: str = "custom"
    dual: LatticeBasis = field(init=False)
    gram: np.ndarray = field(init=False)

    def __post_init__(self):
        A = symplectic_gram(self.basis)
        if not np.array_equal(A, -A.T):
            raise ValueError("symplectic Gram matrix must be antisymmetric")
        Mp = dual_basis(self.basis)
        # M = A @ M_perp ties the dual choice to the Gram matrix.
        if not np.allclose(self.basis.M, A @ Mp.M, atol=1e-10):
            raise ValueError("dual basis inconsistent with Gram matrix")
        object.__setattr__(self, "dual", Mp)
        object.__setattr__(self, "gram", A)

    @property
    def n(self) -> int:
        return self.basis.n

    def is_scaled(self, tol: float = 1e-9) -> bool:
        """True when A = d*J, i.e. M = sqrt(d) * (symplectic basis)."""
        J = symplectic_form(self.n)
        return bool(np.allclose(self.gram, self.d * J, atol=tol))

    def logical_coset_reps(self) -> dict[tuple, np.ndarray]:
        """Shortest representative of each coset of L_perp / L.

        Keys are integer coefficient classes mod d in the dual basis;
        ties broken lexicographically on the coefficient vector.
        """
        d, dim = self.d, self.basis.dim
        rng = range(-2 * d, 2 * d + 1)
        reps: dict[tuple, tuple] = {}
        for coeff in itertools.product(rng, repeat=dim):
            cls = tuple(c % d for c in coeff)
            v = self.dual.point(coeff)
            key = (round(float(v @ v), 12), coeff)
            if cls not in reps or key < reps[cls]:
                reps[cls] = key
        return {
            cls: self.dual.point(key[1]) for cls, key in sorted(reps.items())
        }

    def to_json(self) -> dict:
        return {**self.basis.to_json(), "d": self.d, "name": self.name}


def square_code(d: int = 2) -> GkpCode:
    """Scaled square code: M = sqrt(d) * I."""
    return GkpCode(LatticeBasis(1, np.sqrt(d) * np.eye(2)), d, name="square")


def hexagonal_code(d: int = 2) -> GkpCode:
    """Scaled hexagonal code: M = sqrt(d) * M_A2."""
    return GkpCode(LatticeBasis(1, np.sqrt(d) * M_A2), d, name="hexagonal")


def named_code(name: str, d: int = 2) -> GkpCode:
    if name == "square":
        return square_code(d)
    if name == "hexagonal":
        return hexagonal_code(d)
    raise ValueError(f"unknown code name {name!r}")


def cvp_coefficients(x, basis: LatticeBasis) -> np.ndarray:
    """Integer coefficients of the closest lattice vector to x.

    Babai rounding plus exhaustive offset search over {-2, ..., 2}^{2n};
    ties on Voronoi boundaries are broken by the lexicographically smallest
    coefficient vector so that shell classification is deterministic.
    """
    x = np.asarray(x, dtype=float)
    if basis.n > 4:
        raise ValueError("exact CVP enumeration supported for n <= 4 only")
    base = np.rint(x @ np.linalg.inv(basis.M)).astype(int)
    best_d2 = np.inf
    best: tuple | None = None
    for off in itertools.product(range(-2, 3), repeat=basis.dim):
        z = base + np.array(off)
        r = x - z @ basis.M
        d2 = float(r @ r)
        if d2 < best_d2 - 1e-12:
            best_d2, best = d2, tuple(z)
        elif d2 <= best_d2 + 1e-12 and (best is None or tuple(z) < best):
            best = tuple(z)
    return np.array(best)


def cvp(x, basis: LatticeBasis) -> np.ndarray:
    """Closest lattice vector to x (see cvp_coefficients for tie-breaking)."""
    return cvp_coefficients(x, basis) @ basis.M


def points_within(basis: LatticeBasis, radius: float) -> np.ndarray:
    """All lattice points with norm <= radius, as an (N, 2n) array.

    Box enumeration with coefficient bound radius / sigma_min(M).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    smin = np.linalg.svd(basis.M, compute_uv=False)[-1]
    box = int(np.ceil(radius / smin)) + 1
    coeffs = np.array(
        list(itertools.product(range(-box, box + 1), repeat=basis.dim))
    )
    pts = coeffs @ basis.M
    return pts[np.einsum("ij,ij->i", pts, pts) <= radius**2 + 1e-12]


def shell_index(x, code: GkpCode, max_shells: int = 200) -> int:
    """Voronoi shell number of x relative to the dual lattice L_perp.

    Smallest k >= 0 such that the closest vector of (2k+1) * L_perp to x is
    the origin; shell 0 is the Voronoi cell of L_perp itself.
    """
    x = np.asarray(x, dtype=float)
    for k in range(max_shells):
        z = cvp_coefficients(x, code.dual.scaled(2 * k + 1))
        if not z.any():
            return k
    raise RuntimeError("shell search exceeded max_shells")


def theta_truncation(Omega: np.ndarray, tol: float = 1e-14) -> int:
    """Auto truncation radius: largest dropped term below tol.

    Conservative geometric bound exp(-pi * lambda_min(Im Omega) * t^2) < tol.
    """
    lam = float(np.min(np.linalg.eigvalsh(np.imag(Omega))))
    if lam <= 0:
        raise ValueError("Im(Omega) must be positive definite")
    t = int(np.ceil(np.sqrt(-np.log(tol) / (np.pi * lam)))) + 1
    return max(t, 1)


def riemann_theta(z, Omega, t: int | None = None) -> complex:
    """Truncated Riemann theta sum over m in {-t, ..., t}^g.

    theta(z | Omega) = sum_m exp{ i 2 pi ( m^T Omega m / 2 + m^T z ) },
    with Im(Omega) positive definite.
    """
    Omega = np.asarray(Omega, dtype=complex)
    g = Omega.shape[0]
    z = np.zeros(g, dtype=complex) if z is None else np.asarray(z, dtype=complex)
    if np.min(np.linalg.eigvalsh(np.imag(Omega))) <= 0:
        raise ValueError("Im(Omega) must be positive definite: sum diverges")
    if t is None:
        t = theta_truncation(Omega)
    if t < 1:
        raise ValueError("truncation radius t must be >= 1")
    rng = np.arange(-t, t + 1)
    grids = np.meshgrid(*([rng] * g), indexing="ij")
    m = np.stack([grid.ravel() for grid in grids], axis=1)
    quad = np.einsum("ij,jk,ik->i", m, Omega, m)
    return complex(np.sum(np.exp(2j * np.pi * (0.5 * quad + m @ z))))


def lattice_theta(basis: LatticeBasis, z: complex, t: int | None = None) -> complex:
    """Lattice theta constant Theta_L(z) = sum_{x in L} exp(i 2 pi z |x|^2).

    Equals riemann_theta(0, 2 z M M^T), which is used as a cross-check in
    the tests.
    """
    if np.imag(z) <= 0:
        raise ValueError("Im(z) must be positive: sum diverges")
    return riemann_theta(None, 2 * complex(z) * basis.M @ basis.M.T, t)


@dataclass(frozen=True)
class LatticeConstants:
    lambda1: float
    packing_radius: float
    covering_radius: float | None

    def __post_init__(self):
        if self.lambda1 <= 0:
            raise ValueError("lambda1 must be positive")
        if self.covering_radius is not None and (
            self.packing_radius > self.covering_radius + 1e-12
        ):
            raise ValueError("packing radius exceeds covering radius")


def _shortest_vector_length(basis: LatticeBasis) -> float:
    # A Minkowski-style sufficient box: the shortest vector has coefficients
    # bounded by lambda1 * ||row of M^{-1}||; seed lambda1 with the shortest
    # basis row and enumerate.
    M = basis.M
    lam_ub = float(np.min(np.linalg.norm(M, axis=1)))
    Minv = np.linalg.inv(M)
    bound = int(np.ceil(lam_ub * np.max(np.linalg.norm(Minv, axis=0)))) + 1
    best = lam_ub
    for coeff in itertools.product(range(-bound, bound + 1), repeat=basis.dim):
        if not any(coeff):
            continue
        v = basis.point(coeff)
        best = min(best, float(np.linalg.norm(v)))
    return best


def _covering_radius_2d(basis: LatticeBasis) -> float:
    # Covering radius of a 2-D lattice = farthest Voronoi vertex of the
    # origin cell.
    pts = np.array(
        [basis.point(c) for c in itertools.product(range(-3, 4), repeat=2)]
    )
    origin = int(np.argmin(np.linalg.norm(pts, axis=1)))
    vor = Voronoi(pts)
    region = vor.regions[vor.point_region[origin]]
    if -1 in region or not region:
        raise RuntimeError("origin Voronoi cell not bounded; enlarge point set")
    verts = vor.vertices[region]
    return float(np.max(np.linalg.norm(verts, axis=1)))


def lattice_constants(basis: LatticeBasis) -> LatticeConstants:
    """Shortest vector length, packing radius, and (2-D) covering radius."""
    lam1 = _shortest_vector_length(basis)
    mu = _covering_radius_2d(basis) if basis.n == 1 else None
    return LatticeConstants(lam1, lam1 / 2.0, mu)
