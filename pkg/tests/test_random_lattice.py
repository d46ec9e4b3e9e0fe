import itertools

import numpy as np
import pytest

from gkplab.lattice import LatticeBasis
from gkplab.phase_space import make_coherent, make_vacuum, overlap, wigner_eval
from gkplab.random_lattice import (
    CvShadowPlan,
    RandomLatticeSample,
    cv_shadow_budget,
    cv_shadow_run,
    lipschitz_error_bound,
    mvt_check,
    sample_symplectic_lattice,
    second_moment_bounds,
    siegel_transform,
)
from gkplab.random_lattice import _integral_2d


def brute_primitive(M, radius, box=8):
    pts = []
    for c in itertools.product(range(-box, box + 1), repeat=2):
        if c == (0, 0) or np.gcd(c[0], c[1]) != 1:
            continue
        v = np.array(c, dtype=float) @ M
        if v @ v <= radius**2 + 1e-12:
            pts.append(v)
    return np.array(pts)


def test_sample_symplectic_lattice_invariants():
    rng = np.random.default_rng(0)
    shortest = []
    for _ in range(300):
        lat = sample_symplectic_lattice(rng)
        assert np.isclose(abs(np.linalg.det(lat.basis.M)), 1.0, atol=1e-10)
        assert abs(lat.z.real) <= 0.5 + 1e-12
        assert abs(lat.z) >= 1.0 - 1e-12
        shortest.append(
            float(np.min(np.linalg.norm(brute_primitive(lat.basis.M, 3.0),
                                        axis=1)))
        )
    shortest = np.array(shortest)
    # the shortest-vector length has a continuous law: no repeats, and the
    # scale-invariant Haar measure keeps it near 1
    assert len(np.unique(np.round(shortest, 12))) == len(shortest)
    assert 0.7 < shortest.mean() < 1.1


def test_random_lattice_sample_validation():
    with pytest.raises(ValueError):
        RandomLatticeSample(LatticeBasis(1, 2.0 * np.eye(2)), 1j, 0.0)
    with pytest.raises(ValueError):
        RandomLatticeSample(LatticeBasis(1, np.eye(2)), 0.2 + 0.5j, 0.0)


def test_cv_shadow_plan_validation():
    with pytest.raises(ValueError):
        CvShadowPlan(1.0, 10, 3, 4, ())


def test_siegel_transform_integer_lattice():
    basis = LatticeBasis(1, np.eye(2))
    count = siegel_transform(lambda p: np.ones(len(p)), basis, 1.0)
    assert count == 4.0  # (+-1, 0), (0, +-1)
    count = siegel_transform(lambda p: np.ones(len(p)), basis, 1.5)
    assert count == 8.0  # plus the four (+-1, +-1)


def test_siegel_transform_brute_oracle():
    rng = np.random.default_rng(4)
    for _ in range(10):
        lat = sample_symplectic_lattice(rng)

        def f(pts):
            return np.exp(-np.einsum("ij,ij->i", pts, pts))

        got = siegel_transform(f, lat.basis, 2.5)
        want = float(np.sum(f(brute_primitive(lat.basis.M, 2.5, box=20))))
        assert np.isclose(got, want, atol=1e-10)


def test_siegel_transform_zero_function():
    basis = LatticeBasis(1, np.eye(2))
    assert siegel_transform(lambda p: np.zeros(len(p)), basis, 3.0) == 0.0


def test_full_lattice_sum_from_primitive_layers():
    # sum over all nonzero points factorizes as sum_k F(f(k .))
    basis = LatticeBasis(1, np.array([[1.0, 0.3], [0.0, 1.0]]))
    R = 3.0

    def f(pts):
        return np.exp(-np.einsum("ij,ij->i", pts, pts))

    full = 0.0
    for c in itertools.product(range(-8, 9), repeat=2):
        if c == (0, 0):
            continue
        v = np.array(c, dtype=float) @ basis.M
        if v @ v <= R**2:
            full += float(f(v[None])[0])
    layered = sum(
        siegel_transform(lambda p, k=k: f(k * p), basis, R / k)
        for k in range(1, int(R) + 1)
    )
    assert np.isclose(layered, full, atol=1e-12)


def test_integral_2d_known_values():
    assert np.isclose(
        _integral_2d(lambda p: np.ones(len(p)), 2.0), 4.0 * np.pi, atol=1e-9
    )
    gauss = _integral_2d(
        lambda p: np.exp(-np.pi * np.einsum("ij,ij->i", p, p)), 6.0
    )
    assert np.isclose(gauss, 1.0, atol=1e-9)


def test_mvt_check_ball_indicator():
    rng = np.random.default_rng(6)

    def ball(pts):
        return (np.einsum("ij,ij->i", pts, pts) <= 1.0).astype(float)

    res = mvt_check(ball, 1.0, 3000, rng, integral_f=np.pi)
    assert np.isclose(res.target, 6.0 / np.pi**2 * np.pi, atol=1e-12)
    assert abs(res.z_score) < 4.0
    assert res.stderr > 0


def test_cv_shadow_budget_formula():
    B, K = cv_shadow_budget(1, 1.0, 2, 0.1, 0.3, 1.0)
    assert B == int(np.ceil(4.0 * (1.0 + 2.0 * np.pi) / 0.3**2))
    assert K == int(np.ceil(2.0 * np.log(2 * 2 / 0.1)))


def test_lipschitz_error_bound():
    # n = 1: 2 sigma Gamma(3/2) / Gamma(1) = sigma sqrt(pi)
    assert np.isclose(
        lipschitz_error_bound(0.2, 1, 1.0, 2.0),
        0.2 * np.sqrt(np.pi) * 3.0,
        atol=1e-12,
    )
    with pytest.raises(ValueError):
        lipschitz_error_bound(-0.1, 1, 1.0, 1.0)


def test_second_moment_bounds():
    lemma3, exact = second_moment_bounds(1, 1.0, 1.0, 1.0)
    assert np.isclose(lemma3, 4.0 * (1.0 + 2.0 * np.pi), atol=1e-12)
    assert exact == float("inf")  # zeta(n) diverges at n = 1
    lemma3_2, exact_2 = second_moment_bounds(2, 1.0, 1.0, 1.0)
    zeta_ratio = (np.pi**2 / 6.0) ** 2 / (np.pi**4 / 90.0)
    assert np.isclose(exact_2, zeta_ratio * (8.0 * np.pi) ** 2, atol=1e-9)
    assert np.isfinite(lemma3_2)


def _smeared_target(state, g, sigma):
    """E_z[G~(sigma z)] + Tr[rho G]: the exact mean of the weighted
    estimator (Siegel mean value applied layer by layer)."""
    rng = np.random.default_rng(123)
    z = rng.normal(0.0, sigma, size=(200000, 2))
    smeared = float(np.mean(wigner_eval(state, z) * wigner_eval(g, z)))
    return smeared + overlap(state, g)


def test_cv_shadow_oracle_matches_target():
    rng = np.random.default_rng(9)
    state = make_vacuum(1)
    g = make_coherent(np.array([0.5, 0.0]))
    eps = 0.15
    res = cv_shadow_run(state, [g], 1.0, eps, 0.1, rng, mode="oracle")[0]
    target = _smeared_target(state, g, 1.0)
    # the designed guarantee: the median-of-means estimate of the
    # (smeared offset + trace) target lands within epsilon-tilde
    assert abs(res.report.value - target) < eps
    assert np.isclose(
        res.parity_offset,
        wigner_eval(state, np.zeros(2)) * wigner_eval(g, np.zeros(2)),
        atol=1e-12,
    )
    # the raw (unweighted) second moment obeys the sampling bound
    lemma3, _ = second_moment_bounds(1, 1.0, overlap(g, g), None or 0.0)
    assert res.second_moment_raw <= lemma3


def test_cv_shadow_parity_mode_unbiased():
    rng = np.random.default_rng(17)
    state = make_vacuum(1)
    g = make_coherent(np.array([0.5, 0.0]))
    eps = 0.15
    res = cv_shadow_run(
        state, [g], 1.0, eps, 0.1, rng, mode="parity", n_parity=1
    )[0]
    target = _smeared_target(state, g, 1.0)
    assert abs(res.report.value - target) < eps
    assert res.mode == "parity"


def test_cv_shadow_validation():
    rng = np.random.default_rng(0)
    g = make_coherent(np.array([0.2, 0.0]))
    with pytest.raises(ValueError):
        cv_shadow_run(make_vacuum(1), [g], -1.0, 0.3, 0.1, rng)
    with pytest.raises(ValueError):
        cv_shadow_run(make_vacuum(1), [], 1.0, 0.3, 0.1, rng)
    with pytest.raises(ValueError):
        cv_shadow_run(make_vacuum(2), [g], 1.0, 0.3, 0.1, rng)
    with pytest.raises(ValueError):
        cv_shadow_run(make_vacuum(1), [g], 1.0, 0.3, 0.1, rng, mode="magic")
