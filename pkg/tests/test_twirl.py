import numpy as np
import pytest

from gkplab.lattice import (
    hexagonal_code,
    named_code,
    points_within,
    square_code,
    symplectic_form,
)
from gkplab.twirl import (
    LatticeGaussianTwirl,
    RandomWalkTwirl,
    default_truncation,
    lattice_gaussian_density,
    nu_generators,
    nu_power_error,
    nu_sigma,
    nu_sigma_batch,
    nu_sigma_integral,
    sample_lattice_gaussian,
    sample_walk_displacement,
)


def _char_mean(draws, Delta):
    """Empirical characteristic function E[exp(-2 pi i gamma^T J Delta)]."""
    J = symplectic_form(1)
    phases = np.exp(-2j * np.pi * (draws @ J @ Delta))
    mean = phases.mean()
    se = np.std(phases.real) / np.sqrt(len(draws))
    return mean, se


def test_nu_generators_square_closed_form():
    # square d=2 dual generators are rows of I/sqrt(2), so
    # nu = cos^2(pi a2 / sqrt 2) cos^2(pi a1 / sqrt 2)
    code = square_code()
    twirl = RandomWalkTwirl(code.dual, 1)
    alpha = np.array([np.sqrt(2) / 4.0, np.sqrt(2) / 4.0])
    assert np.isclose(nu_generators(twirl, alpha), 0.25, atol=1e-12)


@pytest.mark.parametrize("name", ["square", "hexagonal"])
def test_nu_generators_one_on_primal(name):
    code = named_code(name)
    twirl = RandomWalkTwirl(code.dual, 3)
    for pt in points_within(code.basis, 4.0):
        assert np.isclose(nu_generators(twirl, pt), 1.0, atol=1e-9)


def test_nu_generators_range():
    code = hexagonal_code()
    twirl = RandomWalkTwirl(code.dual, 2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = nu_generators(twirl, rng.normal(0, 2, 2))
        assert 0.0 <= v <= 1.0 + 1e-12


def test_nu_power_error_regime():
    code = square_code()
    twirl = RandomWalkTwirl(code.dual, 1)
    lam1 = np.sqrt(2.0)
    delta = np.array([0.05 * lam1, 0.0])
    rep = nu_power_error(twirl, delta, 10)
    assert rep.in_regime
    # small-deviation Gaussian approximation is tight for tiny offsets
    assert np.isclose(rep.ratio, 1.0, atol=0.05)
    assert rep.approx <= rep.bound + 1e-12
    far = nu_power_error(twirl, np.array([0.5 * lam1, 0.0]), 10)
    assert not far.in_regime


def test_nu_power_error_on_lattice_point():
    code = hexagonal_code()
    twirl = RandomWalkTwirl(code.dual, 2)
    rep = nu_power_error(twirl, code.basis.M[0], 7)
    assert np.isclose(rep.approx, 1.0, atol=1e-9)


def test_walk_sampler_zero_steps():
    code = square_code()
    twirl = RandomWalkTwirl(code.dual, 0)
    rng = np.random.default_rng(1)
    assert np.array_equal(sample_walk_displacement(twirl, rng), np.zeros(2))


def test_walk_twirl_validation():
    with pytest.raises(ValueError):
        RandomWalkTwirl(square_code().dual, -1)


def test_walk_sampler_duality():
    # empirical characteristic function matches nu_generators^m
    code = hexagonal_code()
    m = 3
    twirl = RandomWalkTwirl(code.dual, m)
    rng = np.random.default_rng(7)
    draws = np.array(
        [sample_walk_displacement(twirl, rng) for _ in range(20000)]
    )
    for Delta in (np.array([0.15, -0.1]), np.array([0.4, 0.2])):
        mean, se = _char_mean(draws, Delta)
        target = nu_generators(twirl, Delta) ** m
        assert abs(mean.real - target) < 4 * se + 1e-3
        assert abs(mean.imag) < 4 * se + 1e-3


def test_lattice_gaussian_validation():
    code = square_code()
    with pytest.raises(ValueError):
        LatticeGaussianTwirl(code.dual, -0.5, 10.0)
    with pytest.raises(ValueError):
        LatticeGaussianTwirl(code.dual, 1.0, 1.0)  # below 3 sigma + mu


def test_default_truncation_floors():
    code = hexagonal_code()
    for sigma in (0.3, 1.0, 2.5):
        t = default_truncation(code.dual, sigma)
        assert t >= 3.0 * sigma
        assert t >= 6.8 / sigma


def test_lattice_gaussian_density_integral():
    code = square_code()
    sigma = 1.0
    twirl = LatticeGaussianTwirl(
        code.dual, sigma, default_truncation(code.dual, sigma)
    )
    extent, num = 9.0, 181
    axis = np.linspace(-extent, extent, num)
    dx = axis[1] - axis[0]
    total = 0.0
    for gx in axis:
        row = np.array(
            [lattice_gaussian_density(twirl, np.array([gx, gy])) for gy in axis]
        )
        total += row.sum()
    assert np.isclose(total * dx * dx, 1.0, atol=1e-4)


def test_lattice_gaussian_tail_warning():
    code = square_code()
    # tight truncation with a wide envelope leaves visible tail mass
    twirl = LatticeGaussianTwirl(code.dual, 0.3, 1.5)
    with pytest.warns(UserWarning):
        lattice_gaussian_density(twirl, np.zeros(2))


def test_lattice_gaussian_sampler_duality():
    code = hexagonal_code()
    sigma = 0.8
    twirl = LatticeGaussianTwirl(
        code.dual, sigma, default_truncation(code.dual, sigma)
    )
    rng = np.random.default_rng(11)
    draws = np.array(
        [sample_lattice_gaussian(twirl, rng) for _ in range(20000)]
    )
    for Delta in (np.array([0.2, 0.1]), np.array([-0.35, 0.25])):
        mean, se = _char_mean(draws, Delta)
        target = nu_sigma(code, sigma, Delta, normalized=False)
        assert abs(mean.real - target) < 4 * se + 1e-3
        assert abs(mean.imag) < 4 * se + 1e-3


def test_nu_sigma_matches_direct_dual_sum():
    # characteristic function of the two-stage measure computed directly
    # over the dual lattice equals the Poisson-summed primal form
    code = hexagonal_code()
    sigma = 0.7
    J = symplectic_form(1)
    pts = points_within(code.dual, 6.8 / sigma + 2.0)
    w = np.exp(-sigma**2 * np.einsum("ij,ij->i", pts, pts) / 2.0)
    for Delta in (np.array([0.3, -0.2]), np.array([0.05, 0.45])):
        lattice_part = np.sum(
            w * np.exp(-2j * np.pi * (pts @ J @ Delta))
        ) / np.sum(w)
        kernel = np.exp(-2.0 * np.pi**2 * sigma**2 * (Delta @ Delta))
        direct = np.real(lattice_part * kernel)
        assert np.isclose(
            nu_sigma(code, sigma, Delta, normalized=False), direct, atol=1e-9
        )


def test_nu_sigma_batch_matches_scalar():
    code = square_code()
    rng = np.random.default_rng(3)
    Deltas = rng.normal(0, 0.5, size=(8, 2))
    batch = nu_sigma_batch(code, 0.9, Deltas)
    for i, D in enumerate(Deltas):
        assert np.isclose(batch[i], nu_sigma(code, 0.9, D), atol=1e-12)


def test_nu_sigma_integral_quadrature():
    code = square_code()
    sigma = 1.0
    extent, num = 3.5, 301
    axis = np.linspace(-extent, extent, num)
    dx = axis[1] - axis[0]
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([X, Y], axis=-1).reshape(-1, 2)
    vals = nu_sigma_batch(code, sigma, pts, normalized=False)
    quad = vals.sum() * dx * dx
    assert np.isclose(quad, nu_sigma_integral(code, sigma), rtol=1e-6)


def test_nu_sigma_normalized_integrates_to_one():
    code = hexagonal_code()
    sigma = 1.0
    extent, num = 3.5, 301
    axis = np.linspace(-extent, extent, num)
    dx = axis[1] - axis[0]
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([X, Y], axis=-1).reshape(-1, 2)
    quad = nu_sigma_batch(code, sigma, pts).sum() * dx * dx
    assert np.isclose(quad, 1.0, atol=1e-4)


def test_nu_sigma_rejects_bad_sigma():
    with pytest.raises(ValueError):
        nu_sigma(square_code(), 0.0, np.zeros(2))
