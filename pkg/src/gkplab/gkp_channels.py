"""Channel coefficients for twirled GKP measurement back-ends.

After a stabilizer displacement twirl and decoding, each measurement
back-end (heterodyne, photon-click, photon-parity) acts on the logical
content like a depolarizing channel alpha * Dec + beta * |Pi_L>.  This
module computes the coefficients: Voronoi-shell probabilities for
heterodyne, theta-function integrals over the A2 Voronoi hexagon for click
detectors, and the determinant fidelity bound for parity measurements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Voronoi

from .lattice import (
    M_A2,
    GkpCode,
    hexagonal_code,
    points_within,
    riemann_theta,
    symplectic_form,
)

__all__ = [
    "DepolarizingCoefficients",
    "HeterodyneShellResult",
    "ParityFidelityBound",
    "heterodyne_shell_probs",
    "heterodyne_p0_bound",
    "click_coefficients",
    "parity_fidelity_bound",
    "invert_depolarizing",
    "shell_indices_batch",
]


@dataclass(frozen=True)
class DepolarizingCoefficients:
    alpha: float
    beta: float
    method: str  # heterodyne | click | parity
    error_bars: float
    details: dict | None = None

    def __post_init__(self):
        if self.method not in ("heterodyne", "click", "parity"):
            raise ValueError(f"unknown method {self.method!r}")
        if abs(self.alpha) > 1.0 + 1e-9:
            raise ValueError("|alpha| must not exceed 1")


@dataclass(frozen=True)
class HeterodyneShellResult:
    p0: float
    p1: float
    alpha: float
    stderr_p0: float
    stderr_alpha: float
    n_samples: int


@dataclass(frozen=True)
class ParityFidelityBound:
    fidelity_bound: float
    p_bound: float


def shell_indices_batch(code: GkpCode, xs: np.ndarray) -> np.ndarray:
    """Voronoi shell numbers of an (N, 2n) batch relative to L_perp.

    x lies in V((2k+1) L_perp) iff 2 x.v <= (2k+1) |v|^2 for every
    Voronoi-relevant vector v, so the shell number is the smallest k with
    2k+1 >= h(x) = max_v 2 x.v / |v|^2.  A superset of the relevant
    vectors leaves the maximum unchanged.
    """
    dual = code.dual
    lam1 = float(np.min(np.linalg.norm(dual.M, axis=1)))
    vs = points_within(dual, 3.0 * lam1)
    vs = vs[np.einsum("ij,ij->i", vs, vs) > 1e-12]
    ratios = 2.0 * (xs @ vs.T) / np.einsum("ij,ij->i", vs, vs)
    h = np.max(ratios, axis=1)
    return np.maximum(0, np.ceil((h - 1.0) / 2.0 - 1e-12)).astype(int)


def heterodyne_shell_probs(
    code: GkpCode, n_samples: int, rng: np.random.Generator
) -> HeterodyneShellResult:
    """Monte Carlo shell-parity probabilities under the heterodyne kernel.

    Draws alpha from the isotropic density e^{-pi |alpha|^2}, classifies
    each draw into a Voronoi shell of L_perp, and accumulates the even- and
    odd-shell masses p0, p1.  The depolarizing coefficient is
    alpha_dep = p0 - p1 = 2 p0 - 1.
    """
    if code.d != 2:
        raise ValueError("shell-parity probabilities require d = 2")
    xs = rng.normal(0.0, 1.0 / np.sqrt(2.0 * np.pi), size=(n_samples, code.basis.dim))
    shells = shell_indices_batch(code, xs)
    even = np.mean(shells % 2 == 0)
    p0 = float(even)
    p1 = 1.0 - p0
    stderr_p0 = float(np.sqrt(p0 * (1.0 - p0) / n_samples))
    return HeterodyneShellResult(
        p0=p0,
        p1=p1,
        alpha=p0 - p1,
        stderr_p0=stderr_p0,
        stderr_alpha=2.0 * stderr_p0,
        n_samples=n_samples,
    )


def heterodyne_p0_bound(code: GkpCode, k_max: int = 40) -> float:
    """Ball-bound series for the even-shell mass of the hexagonal qubit code,

        p0 <= [1 - e^{-pi/(3 sqrt 3)}]
              + sum_{k>=1} [e^{-(pi/(3 sqrt 3)) (4k-1)^2 lam1^2}
                            - e^{-(pi/(4 sqrt 3)) (4k+1)^2 lam1^2}],

    with lam1 = lambda_1(A2) = sqrt(2/sqrt(3)).  Converges to ~0.455.
    """
    if code.d != 2 or code.name != "hexagonal":
        raise ValueError("series bound available for the hexagonal qubit code")
    lam1_sq = 2.0 / np.sqrt(3.0)
    total = 1.0 - np.exp(-np.pi / (3.0 * np.sqrt(3.0)))
    for k in range(1, k_max + 1):
        total += np.exp(
            -(np.pi / (3.0 * np.sqrt(3.0))) * (4 * k - 1) ** 2 * lam1_sq
        ) - np.exp(-(np.pi / (4.0 * np.sqrt(3.0))) * (4 * k + 1) ** 2 * lam1_sq)
    return float(total)


def _hexagon_vertices() -> np.ndarray:
    """Vertices of the Voronoi cell of the A2 lattice around the origin."""
    import itertools

    pts = np.array(
        [np.array(c) @ M_A2 for c in itertools.product(range(-3, 4), repeat=2)]
    )
    origin = int(np.argmin(np.linalg.norm(pts, axis=1)))
    vor = Voronoi(pts)
    region = vor.regions[vor.point_region[origin]]
    verts = vor.vertices[region]
    # order by angle so consecutive vertices bound a triangle with the origin
    ang = np.arctan2(verts[:, 1], verts[:, 0])
    return verts[np.argsort(ang)]


def _triangle_quadrature(v1, v2, order: int):
    """Tensor Gauss-Legendre nodes/weights on the triangle (0, v1, v2)."""
    x, w = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    WU, WV = np.meshgrid(wu, wu, indexing="ij")
    pts = U[..., None] * ((1.0 - V)[..., None] * v1 + V[..., None] * v2)
    area_jac = abs(v1[0] * v2[1] - v1[1] * v2[0])
    wts = WU * WV * U * area_jac
    return pts.reshape(-1, 2), wts.ravel()


def _theta_product(alpha_pts: np.ndarray) -> np.ndarray:
    """Re[theta(M(iI+J)a | iG) theta(M(iI-J)a | iG)] for a batch of points."""
    G = M_A2 @ M_A2.T
    J = symplectic_form(1)
    zp = alpha_pts @ (M_A2 @ (1j * np.eye(2) + J)).T
    zm = alpha_pts @ (M_A2 @ (1j * np.eye(2) - J)).T
    out = np.empty(len(alpha_pts))
    for i in range(len(alpha_pts)):
        tp = riemann_theta(zp[i], 1j * G)
        tm = riemann_theta(zm[i], 1j * G)
        out[i] = np.real(tp * tm)
    return out


def click_coefficients(
    code: GkpCode | None = None, order: int = 24
) -> DepolarizingCoefficients:
    """Depolarizing coefficients of the twirled photon-click channel,

        alpha = 1 - 2 theta(0 | i G_A2) + I1,
        alpha + beta = 1 - 2 theta(0 | i G_A2) + I2,

    with I1, I2 Gaussian-weighted products of Riemann theta functions
    integrated over the Voronoi hexagon of A2.  Returns the formula-derived
    values; a quadrature error estimate comes from doubling the rule order.
    """
    if code is None:
        code = hexagonal_code()
    if code.d != 2 or code.name != "hexagonal":
        raise ValueError("click coefficients available for the hexagonal qubit code")
    theta0 = float(np.real(riemann_theta(None, 1j * (M_A2 @ M_A2.T))))

    def integrals(n_order: int):
        verts = _hexagon_vertices()
        i1 = i2 = 0.0
        for k in range(len(verts)):
            pts, wts = _triangle_quadrature(
                verts[k], verts[(k + 1) % len(verts)], n_order
            )
            prod = _theta_product(pts)
            norms = np.einsum("ij,ij->i", pts, pts)
            i1 += float(np.sum(wts * np.exp(-0.5 * np.pi * norms) * prod))
            i2 += float(np.sum(wts * np.exp(-2.0 * np.pi * norms) * prod))
        return np.sqrt(2.0) * i1, 2.0 * np.sqrt(2.0) * i2

    i1, i2 = integrals(order)
    i1_ref, i2_ref = integrals(2 * order)
    err = max(abs(i1 - i1_ref), abs(i2 - i2_ref))
    alpha = 1.0 - 2.0 * theta0 + i1_ref
    beta = (1.0 - 2.0 * theta0 + i2_ref) - alpha
    return DepolarizingCoefficients(
        alpha,
        beta,
        "click",
        err,
        details={"theta0": theta0, "i1": i1_ref, "i2": i2_ref},
    )


def parity_fidelity_bound(code: GkpCode, sigma: float) -> ParityFidelityBound:
    """Logical fidelity bound of displacement-twirled parity sampling,
    1 - p >= (1/2)[1 + det(L_perp)/2^{2n}], with the reparameterized form
    p <= (1/2)[1 - 2^{-n(2 + (k/n) log2 d)}] for k = n encoded qudits."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = code.n
    det_dual = abs(code.dual.det())
    fidelity = 0.5 * (1.0 + det_dual / 2 ** (2 * n))
    p_bound = 0.5 * (1.0 - 2.0 ** (-n * (2.0 + np.log2(code.d))))
    return ParityFidelityBound(fidelity, p_bound)


def invert_depolarizing(
    coeffs: DepolarizingCoefficients, logical_expectations
) -> np.ndarray:
    """Affine inversion (x - beta e_identity) / alpha of the depolarizing
    map on a vector of logical Pauli expectations (identity entry first)."""
    if abs(coeffs.alpha) <= 1e-6:
        raise ValueError("depolarizing channel is not invertible: alpha ~ 0")
    v = np.asarray(logical_expectations, dtype=float).copy()
    v[0] -= coeffs.beta
    return v / coeffs.alpha
