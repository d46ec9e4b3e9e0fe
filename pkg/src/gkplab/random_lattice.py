"""Haar-random symplectic lattices and random-lattice CV shadows.

Single-mode symplectic lattices are unit-covolume planar lattices; their
moduli space is the modular fundamental domain crossed with a frame
rotation, carrying the hyperbolic measure dx dy / y^2.  Siegel transforms
of compactly supported functions average to (6/pi^2) times the integral,
which the Monte Carlo checks here verify.  The same sampling machinery
drives the continuous-variable shadow protocol: Wigner-function values at
Gaussian-regularized lattice points estimate Tr[rho G] up to a separately
estimated parity offset at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .lattice import LatticeBasis, symplectic_form
from .logical_shadows import EstimateReport
from .phase_space import StateModel, overlap, sample_parity, wigner_eval
from .twirl import LatticeGaussianTwirl, sample_lattice_gaussian  # noqa: F401

__all__ = [
    "RandomLatticeSample",
    "CvShadowPlan",
    "CvShadowResult",
    "MvtResult",
    "sample_symplectic_lattice",
    "siegel_transform",
    "mvt_check",
    "cv_shadow_budget",
    "cv_shadow_run",
    "lipschitz_error_bound",
    "second_moment_bounds",
]

_MAX_ENUM = 4_000_000


@dataclass(frozen=True)
class RandomLatticeSample:
    basis: LatticeBasis
    z: complex
    theta: float

    def __post_init__(self):
        if abs(abs(np.linalg.det(self.basis.M)) - 1.0) > 1e-10:
            raise ValueError("random symplectic lattice must have det 1")
        if not (abs(self.z.real) <= 0.5 + 1e-12 and abs(self.z) >= 1.0 - 1e-12):
            raise ValueError("modulus outside the fundamental domain")


@dataclass(frozen=True)
class CvShadowPlan:
    sigma: float
    N: int
    K: int
    B: int
    points: tuple  # (RandomLatticeSample, sampled point) pairs

    def __post_init__(self):
        if self.N != self.K * self.B:
            raise ValueError("N must equal K * B")


@dataclass(frozen=True)
class CvShadowResult:
    report: EstimateReport
    parity_offset: float
    target_kind: str  # estimate targets offset + Tr[rho G]
    sigma: float
    mode: str
    second_moment_raw: float  # MC mean of G~(x)^2 under p_sigma (unweighted)


@dataclass(frozen=True)
class MvtResult:
    mc_mean: float
    target: float
    z_score: float
    stderr: float


def sample_symplectic_lattice(rng: np.random.Generator) -> RandomLatticeSample:
    """Haar-random single-mode symplectic lattice.

    The shape modulus z = x + iy is drawn from dx dy / y^2 on the modular
    fundamental domain by rejection from the strip |x| <= 1/2, y >= sqrt(3)/2
    (where 1/y^2 inverts in closed form), and a uniform frame rotation
    completes the measure.  Rows of the returned basis are the generators.
    """
    y0 = np.sqrt(3.0) / 2.0
    while True:
        x = rng.uniform(-0.5, 0.5)
        y = y0 / rng.uniform(0.0, 1.0)  # density 1/y^2 on [y0, inf)
        if x * x + y * y >= 1.0:
            break
    theta = rng.uniform(0.0, 2.0 * np.pi)
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    A = np.array([[1.0 / np.sqrt(y), 0.0], [x / np.sqrt(y), np.sqrt(y)]])
    return RandomLatticeSample(
        basis=LatticeBasis(1, A @ R.T), z=complex(x, y), theta=theta
    )


def _primitive_points(basis: LatticeBasis, radius: float) -> np.ndarray:
    """Primitive lattice vectors (coefficient gcd 1) within the radius."""
    M = basis.M
    # coefficient c of x = c M obeys |c_i| <= R |M^{-1} e_i| on the ball,
    # which stays tight on skewed bases where a global 1/s_min box blows up
    col_norms = np.linalg.norm(np.linalg.inv(M), axis=0)
    bs = np.ceil(radius * col_norms + 1e-9).astype(int)
    count = int(np.prod(2 * bs + 1))
    if count > _MAX_ENUM:
        raise ValueError(
            f"enumeration budget exceeded: coefficient box {2 * bs + 1} "
            f"implies {count} candidates"
        )
    grids = np.meshgrid(*[np.arange(-b, b + 1) for b in bs], indexing="ij")
    coeffs = np.stack([g.ravel() for g in grids], axis=1)
    g = np.gcd.reduce(np.abs(coeffs), axis=1)
    coeffs = coeffs[g == 1]
    pts = coeffs @ M
    return pts[np.einsum("ij,ij->i", pts, pts) <= radius**2 + 1e-12]


def siegel_transform(f, basis: LatticeBasis, support_radius: float) -> float:
    """F_f(L) = sum of f over the primitive vectors of L, for f supported
    in the ball of the given radius.  f is called on an (N, 2n) array."""
    pts = _primitive_points(basis, support_radius)
    if len(pts) == 0:
        return 0.0
    return float(np.sum(np.asarray(f(pts), dtype=float)))


def _integral_2d(f, radius: float, order: int = 120) -> float:
    """Polar Gauss-Legendre quadrature of f over the disk of given radius."""
    xr, wr = np.polynomial.legendre.leggauss(order)
    r = 0.5 * radius * (xr + 1.0)
    wr = 0.5 * radius * wr
    t = np.linspace(0.0, 2.0 * np.pi, 2 * order, endpoint=False)
    wt = 2.0 * np.pi / len(t)
    R, T = np.meshgrid(r, t, indexing="ij")
    pts = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
    vals = np.asarray(f(pts), dtype=float).reshape(len(r), len(t))
    return float(np.sum(vals * (wr * r)[:, None] * wt))


def mvt_check(
    f,
    support_radius: float,
    n_lattices: int,
    rng: np.random.Generator,
    integral_f: float | None = None,
) -> MvtResult:
    """Monte Carlo mean of the Siegel transform over Haar lattices against
    the mean-value target (6/pi^2) * int f, with the studentized deviation."""
    if integral_f is None:
        integral_f = _integral_2d(f, support_radius)
    target = 6.0 / np.pi**2 * integral_f
    vals = np.empty(n_lattices)
    for i in range(n_lattices):
        vals[i] = siegel_transform(
            f, sample_symplectic_lattice(rng).basis, support_radius
        )
    mc_mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(n_lattices))
    z = (mc_mean - target) / stderr if stderr > 0 else 0.0
    return MvtResult(mc_mean, target, float(z), stderr)


def cv_shadow_budget(
    n: int, sigma: float, M: int, delta: float, epsilon_tilde: float, g_norm2_sq: float
) -> tuple[int, int]:
    """(B, K) from the second-moment bound: B = ceil(2^{2n} (1 + (2 pi /
    sigma^2)^n) max |G|_2^2 / eps~^2), K = ceil(2 ln(2M/delta))."""
    B = int(
        np.ceil(
            2 ** (2 * n)
            * (1.0 + (2.0 * np.pi / sigma**2) ** n)
            * g_norm2_sq
            / epsilon_tilde**2
        )
    )
    K = int(np.ceil(2.0 * np.log(2.0 * M / delta)))
    return B, K


def _sample_psigma(M: np.ndarray, sigma: float, rng):
    """Draw from the width-sigma lattice-Gaussian measure of a fresh basis.

    Envelope weight exp(-sigma^2 |xi|^2 / 2) over the points within
    6.8 / sigma (relative tail below 1e-10), then an isotropic Gaussian
    around the chosen point.  Returns (x, importance_weight) where the
    weight Theta_L * exp(+sigma^2 |xi|^2 / 2) undoes both the envelope
    selection and the theta normalization, so that the weighted estimator
    averages to the plain lattice sum sum_{xi in L} f(xi) (up to the
    width-sigma smearing).  Avoids the cached-lattice machinery, which
    never hits on Haar-random bases.
    """
    radius = 6.8 / sigma
    col_norms = np.linalg.norm(np.linalg.inv(M), axis=0)
    bs = np.ceil(radius * col_norms + 1e-9).astype(int)
    grids = np.meshgrid(*[np.arange(-b, b + 1) for b in bs], indexing="ij")
    coeffs = np.stack([g.ravel() for g in grids], axis=1)
    pts = coeffs @ M
    w = np.exp(-(sigma**2) * np.einsum("ij,ij->i", pts, pts) / 2.0)
    theta = float(w.sum())
    idx = rng.choice(len(w), p=w / theta)
    x = pts[idx] + rng.normal(0.0, sigma, size=M.shape[1])
    return x, theta / w[idx]


def _wigner_estimate(
    state: StateModel, x, mode: str, n_parity: int, rng
) -> float:
    if mode == "oracle":
        return float(wigner_eval(state, x))
    if mode == "parity":
        draws = [sample_parity(state, x, rng) for _ in range(n_parity)]
        return 2 ** state.n * float(np.mean(draws))
    raise ValueError(f"unknown mode {mode!r}")


def cv_shadow_run(
    state: StateModel,
    observables: list[StateModel],
    sigma: float,
    epsilon_tilde: float,
    delta: float,
    rng: np.random.Generator,
    mode: str = "oracle",
    n_parity: int = 1,
) -> list[CvShadowResult]:
    """Random-lattice CV shadow estimates of Tr[rho G] per observable.

    Draws K * B (Haar lattice, lattice-Gaussian point) pairs, forms the
    per-point estimator G~(x) = W^(x) G(x) with W^ either the exact Wigner
    value (oracle mode) or a parity-sample average (parity mode), and
    median-of-means it over K batches.  Each point carries the importance
    weight that converts the normalized lattice-Gaussian average into the
    plain lattice sum, so the estimate targets G~(0) + Tr[rho G] (the
    offset term smeared at width sigma); the offset itself, estimated at
    x = 0, is reported separately so the caller can subtract it.  The
    unweighted mean of G~(x)^2 is reported as well: it is the quantity the
    second-moment bound of second_moment_bounds constrains.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not observables:
        raise ValueError("no observables given")
    if state.n != 1:
        raise ValueError("random-lattice sampling is implemented for n = 1")
    M = len(observables)
    g_norms = [overlap(g, g) for g in observables]
    B, K = cv_shadow_budget(
        state.n, sigma, M, delta, epsilon_tilde, max(g_norms)
    )
    N = K * B
    xs = np.empty((N, 2 * state.n))
    iw = np.empty(N)
    for i in range(N):
        lat = sample_symplectic_lattice(rng)
        xs[i], iw[i] = _sample_psigma(lat.basis.M, sigma, rng)
    if mode == "oracle":
        w_hat = wigner_eval(state, xs)
        w0_hat = float(wigner_eval(state, np.zeros(2 * state.n)))
    else:
        w_hat = np.array(
            [_wigner_estimate(state, x, mode, n_parity, rng) for x in xs]
        )
        w0_hat = _wigner_estimate(
            state, np.zeros(2 * state.n), mode, max(n_parity, 100), rng
        )
    results = []
    for g in observables:
        g_vals = wigner_eval(g, xs)
        raw = w_hat * g_vals
        est = (iw * raw).reshape(K, B).mean(axis=1)
        g0 = float(wigner_eval(g, np.zeros(2 * state.n)))
        results.append(
            CvShadowResult(
                report=EstimateReport(
                    value=float(np.median(est)),
                    K=K,
                    N=B,
                    epsilon=epsilon_tilde,
                    delta=delta,
                    per_batch_means=tuple(float(m) for m in est),
                ),
                parity_offset=w0_hat * g0,
                target_kind="offset_plus_trace",
                sigma=sigma,
                mode=mode,
                second_moment_raw=float(np.mean(raw**2)),
            )
        )
    return results


def lipschitz_error_bound(sigma: float, n: int, l_rho: float, l_G: float) -> float:
    """Smearing error of width-sigma lattice-point regularization:
    |eps(sigma)| <= 2 sigma Gamma(n + 1/2) / Gamma(n) * (l_rho + l_G)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (
        2.0 * sigma * math.gamma(n + 0.5) / math.gamma(n) * (l_rho + l_G)
    )


def second_moment_bounds(
    n: int, sigma: float, norm2_sq: float, norm1: float
) -> tuple[float, float]:
    """Second-moment bounds on the per-point estimator.

    Returns (lemma3_bound, exact_inner_bound): the sampling-friendly form
    2^{2n} (1 + (2 pi / sigma^2)^n) |G|_2^2 and the zeta-function form
    zeta(n)^2 / zeta(2n) * (4 pi (sigma^-2 + sigma^2) / sigma^4)^n |G|_1^2,
    which diverges at n = 1 (returned as inf)."""
    lemma3 = 2 ** (2 * n) * (1.0 + (2.0 * np.pi / sigma**2) ** n) * norm2_sq
    if n <= 1:
        exact = float("inf")
    else:
        exact = (
            zeta(n) ** 2
            / zeta(2 * n)
            * (4.0 * np.pi * (sigma**-2 + sigma**2) / sigma**4) ** n
            * norm1**2
        )
    return float(lemma3), float(exact)
