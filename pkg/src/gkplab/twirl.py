"""Displacement-twirl measures over the symplectic dual lattice.

Two families of measures turn a GKP stabilizer group into an approximate
displacement twirl:

* a random walk that applies each dual generator as 2m fair half-steps
  +-xi_perp/2, whose characteristic function is the cosine-product
  nu_{M_perp}(alpha) = prod_i cos^{2m}(pi (xi_i_perp)^T J alpha), and

* a Gaussian-regularized lattice measure p_{sigma^2}(gamma; L_perp) whose
  characteristic function nu_{sigma^2} follows by Poisson summation.

Both come with exact samplers and closed-form characteristic functions, so
sampler/formula duality is directly testable.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np

from .lattice import (
    GkpCode,
    LatticeBasis,
    lattice_constants,
    lattice_theta,
    points_within,
    symplectic_form,
)

__all__ = [
    "RandomWalkTwirl",
    "LatticeGaussianTwirl",
    "PowerErrorReport",
    "nu_generators",
    "nu_power_error",
    "sample_walk_displacement",
    "lattice_gaussian_density",
    "sample_lattice_gaussian",
    "nu_sigma",
    "nu_sigma_batch",
    "nu_sigma_integral",
    "default_truncation",
]


def _covering_radius_bound(basis: LatticeBasis) -> float:
    """Exact covering radius in 2-D, else the half basis-length bound."""
    mu = lattice_constants(basis).covering_radius
    if mu is None:
        mu = 0.5 * float(np.sum(np.linalg.norm(basis.M, axis=1)))
    return mu


def default_truncation(dual: LatticeBasis, sigma: float) -> float:
    """Conservative lattice-sum cutoff.

    Covers both Gaussian scales of the regularized lattice measure: the
    kernel of width sigma (3 sigma + covering radius) and the envelope
    exp(-sigma^2 |xi|^2 / 2) of width 1/sigma (6.8/sigma puts the envelope
    tail below 1e-10), plus a 5 lambda_1 floor.
    """
    consts = lattice_constants(dual)
    mu = _covering_radius_bound(dual)
    return max(3.0 * sigma + mu, 5.0 * consts.lambda1, 6.8 / sigma + mu)


@dataclass(frozen=True)
class RandomWalkTwirl:
    dual_basis: LatticeBasis
    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("step count m must be nonnegative")


@dataclass(frozen=True)
class LatticeGaussianTwirl:
    dual_basis: LatticeBasis
    sigma: float
    truncation: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        mu = _covering_radius_bound(self.dual_basis)
        if self.truncation < 3.0 * self.sigma + mu:
            raise ValueError(
                "truncation must be at least 3 sigma + covering radius"
            )


@dataclass(frozen=True)
class PowerErrorReport:
    approx: float
    bound: float
    ratio: float
    in_regime: bool
    frobenius_bound: float


@functools.lru_cache(maxsize=256)
def _points_within_cached(n: int, M_bytes: bytes, radius: float) -> np.ndarray:
    M = np.frombuffer(M_bytes).reshape(2 * n, 2 * n)
    return points_within(LatticeBasis(n, M), radius)


def _points(basis: LatticeBasis, radius: float) -> np.ndarray:
    return _points_within_cached(basis.n, basis.M.tobytes(), float(radius))


@functools.lru_cache(maxsize=256)
def _theta_cached(n: int, M_bytes: bytes, im_z: float) -> float:
    M = np.frombuffer(M_bytes).reshape(2 * n, 2 * n)
    return float(np.real(lattice_theta(LatticeBasis(n, M), 1j * im_z)))


def _theta(basis: LatticeBasis, im_z: float) -> float:
    return _theta_cached(basis.n, basis.M.tobytes(), float(im_z))


def _pairings(dual: LatticeBasis, alpha) -> np.ndarray:
    J = symplectic_form(dual.n)
    return dual.M @ J @ np.asarray(alpha, dtype=float)


def nu_generators(twirl: RandomWalkTwirl, alpha) -> float:
    """Characteristic function prod_i cos^2(pi (xi_i_perp)^T J alpha).

    Equals 1 on the primal lattice (integer symplectic pairing with every
    dual generator) and lies in [0, 1] everywhere.
    """
    c = np.cos(np.pi * _pairings(twirl.dual_basis, alpha))
    return float(np.prod(c * c))


def nu_power_error(twirl: RandomWalkTwirl, Delta, m: int) -> PowerErrorReport:
    """Compare nu^m against the small-deviation Gaussian bound.

    For Delta = ell + delta with ell the closest primal lattice point,
    nu^m is well approximated by exp(-pi^2 |M_perp|_F^2 |delta|^2 m) when
    |delta| < lambda_1 / 4; outside that regime the exact value is still
    returned with in_regime = False.
    """
    from .lattice import cvp, dual_basis as _dual

    primal = _dual(twirl.dual_basis)
    Delta = np.asarray(Delta, dtype=float)
    delta = Delta - cvp(Delta, primal)
    lam1 = lattice_constants(primal).lambda1
    in_regime = bool(np.linalg.norm(delta) < lam1 / 4.0)
    approx = nu_generators(twirl, Delta) ** m
    # per-generator Gaussian: cos^2(x) ~ e^{-x^2} with x_i = pi xi_i^T J delta
    x2 = _pairings(twirl.dual_basis, delta) ** 2
    bound = float(np.exp(-np.pi**2 * float(np.sum(x2)) * m))
    # coarse Cauchy-Schwarz form with the Frobenius norm of the generators
    frob2 = float(np.sum(twirl.dual_basis.M**2))
    frobenius_bound = float(np.exp(-np.pi**2 * frob2 * (delta @ delta) * m))
    ratio = approx / bound if bound > 0 else np.inf
    return PowerErrorReport(approx, bound, ratio, in_regime, frobenius_bound)


def sample_walk_displacement(
    twirl: RandomWalkTwirl, rng: np.random.Generator
) -> np.ndarray:
    """gamma = sum_i sum_{s=1}^{2m} (+-xi_i_perp / 2) with fair signs."""
    M = twirl.dual_basis.M
    gamma = np.zeros(M.shape[1])
    if twirl.m == 0:
        return gamma
    signs = rng.integers(0, 2, size=(M.shape[0], 2 * twirl.m)) * 2 - 1
    return signs.sum(axis=1) @ (M / 2.0)


def _component_points_weights(twirl: LatticeGaussianTwirl):
    pts = _points(twirl.dual_basis, twirl.truncation)
    w = np.exp(-twirl.sigma**2 * np.einsum("ij,ij->i", pts, pts) / 2.0)
    return pts, w


def lattice_gaussian_density(twirl: LatticeGaussianTwirl, gamma) -> float:
    """p_{sigma^2}(gamma; L_perp): Gaussian bumps of width sigma at the
    dual points, with envelope exp(-sigma^2 |xi|^2 / 2), normalized by
    N = (2 pi sigma^2)^n Theta_{L_perp}(i sigma^2 / 4 pi)."""
    gamma = np.asarray(gamma, dtype=float)
    s2 = twirl.sigma**2
    n = twirl.dual_basis.n
    pts, w = _component_points_weights(twirl)
    r = gamma - pts
    vals = w * np.exp(-np.einsum("ij,ij->i", r, r) / (2.0 * s2))
    norm = (2.0 * np.pi * s2) ** n * _theta(
        twirl.dual_basis, s2 / (4.0 * np.pi)
    )
    # tail check: envelope mass outside the truncation radius
    tail = _truncation_tail(twirl)
    if tail > 1e-10:
        warnings.warn(
            f"lattice sum truncation tail ~{tail:.2e} exceeds 1e-10; "
            "increase the truncation radius",
            stacklevel=2,
        )
    return float(vals.sum() / norm)


def _truncation_tail(twirl: LatticeGaussianTwirl) -> float:
    """Envelope weight beyond the truncation radius, via a doubled sum."""
    pts2 = _points(twirl.dual_basis, 2.0 * twirl.truncation)
    n2 = np.einsum("ij,ij->i", pts2, pts2)
    w2 = np.exp(-twirl.sigma**2 * n2 / 2.0)
    outside = n2 > twirl.truncation**2
    return float(w2[outside].sum() / w2.sum())


def sample_lattice_gaussian(
    twirl: LatticeGaussianTwirl, rng: np.random.Generator
) -> np.ndarray:
    """Exact two-stage sampler: dual point by envelope weight, then an
    isotropic Gaussian of width sigma around it."""
    pts, w = _component_points_weights(twirl)
    idx = rng.choice(len(w), p=w / w.sum())
    return pts[idx] + rng.normal(0.0, twirl.sigma, size=pts.shape[1])


def nu_sigma(
    code: GkpCode, sigma: float, Delta, normalized: bool = True
) -> float:
    """Poisson-summed form of the Gaussian-regularized lattice measure,

        nu_{sigma^2}(Delta) = c^{-1} sum_{xi in L}
            exp(-2 pi^2 sigma^2 |Delta|^2) exp(-2 pi^2 |Delta - xi|^2 / sigma^2),
        c = det(L_perp) (sigma^2 / 2 pi)^n Theta_{L_perp}(i sigma^2 / 4 pi).

    With normalized=False this is the exact characteristic function
    E[exp(-i 2 pi gamma^T J Delta)] of the lattice-Gaussian measure; its
    integral over Delta equals p_{sigma^2}(0), not 1.  The default divides
    by that closed-form integral so the result is a probability density in
    Delta (see nu_sigma_integral).
    """
    out = nu_sigma_batch(code, sigma, np.asarray(Delta, dtype=float)[None, :],
                         normalized=normalized)
    return float(out[0])


def nu_sigma_batch(
    code: GkpCode, sigma: float, Deltas, normalized: bool = True
) -> np.ndarray:
    """Vectorized nu_sigma over an (N, 2n) array of points."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    Deltas = np.atleast_2d(np.asarray(Deltas, dtype=float))
    n = code.n
    dual = code.dual
    # the kernel around Delta has width sigma/(2 pi); a one-sigma margin
    # past the farthest Delta plus a basis-length floor covers every
    # relevant lattice point
    lam1 = float(np.min(np.linalg.norm(code.basis.M, axis=1)))
    radius = float(np.max(np.linalg.norm(Deltas, axis=1))) + sigma + 2.0 * lam1
    radius = 0.5 * np.ceil(radius / 0.5)  # coarsen for cache hits
    pts = _points(code.basis, radius)
    r = Deltas[:, None, :] - pts[None, :, :]
    series = np.exp(
        -2.0 * np.pi**2 * np.einsum("aij,aij->ai", r, r) / sigma**2
    ).sum(axis=1)
    envelope = np.exp(
        -2.0 * np.pi**2 * sigma**2 * np.einsum("ai,ai->a", Deltas, Deltas)
    )
    theta = _theta(dual, sigma**2 / (4.0 * np.pi))
    c = abs(dual.det()) * (sigma**2 / (2.0 * np.pi)) ** n * theta
    val = envelope * series / c
    if normalized:
        val = val / nu_sigma_integral(code, sigma)
    return val


def nu_sigma_integral(code: GkpCode, sigma: float) -> float:
    """Closed-form integral of the characteristic function over Delta.

    Fourier inversion gives int nu dDelta = p_{sigma^2}(0), the density of
    the lattice-Gaussian measure at the origin:

        p(0) = N^{-1} sum_{xi_perp} exp(-(sigma^2 + sigma^{-2}) |xi_perp|^2 / 2),
        N = (2 pi sigma^2)^n Theta_{L_perp}(i sigma^2 / 4 pi).

    This is approximately det(L_perp) / (4 pi^2)^n, so the raw
    characteristic function is not a normalized density over Delta.
    """
    dual = code.dual
    n = code.n
    s2 = sigma**2
    a = 0.5 * (s2 + 1.0 / s2)
    # sum over the dual lattice with total Gaussian weight exp(-a |xi|^2)
    radius = max(6.8 / np.sqrt(2.0 * a), 1.0) + _covering_radius_bound(dual)
    pts = _points(dual, radius)
    series = float(np.exp(-a * np.einsum("ij,ij->i", pts, pts)).sum())
    theta = _theta(dual, s2 / (4.0 * np.pi))
    norm = (2.0 * np.pi * s2) ** n * theta
    return series / norm
