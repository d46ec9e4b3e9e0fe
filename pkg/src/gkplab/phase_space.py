"""Gaussian-mixture phase-space states.

A state is a list of Gaussian components in the Wigner representation,

    W(x) = sum_c  w_c * N(x; m_c, Sigma_c),

where weights and means may be complex (components always come in conjugate
pairs, so W is real).  The class is closed under displacements, symplectic
unitaries, and heterodyne pointer conditioning, which is what makes the
whole shadow pipeline exactly simulable.

Conventions (frozen in lattice.py): W_vac(x) = 2^n exp(-2 pi |x|^2),
chi(eta) = int dx exp(-i 2 pi eta^T J x) W(x), chi_vac = exp(-pi |eta|^2 / 2),
Tr[rho sigma] = int W_rho W_sigma, Q(alpha) = int W_rho(x) W_|alpha>(x) dx
with int Q = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import GkpCode, LatticeBasis, symplectic_form

__all__ = [
    "GaussianComponent",
    "StateModel",
    "MeasurementOutcome",
    "make_vacuum",
    "make_coherent",
    "make_grid_state",
    "wigner_eval",
    "char_eval",
    "husimi_eval",
    "apply_displacement",
    "apply_symplectic",
    "sample_heterodyne",
    "sample_parity",
    "overlap",
    "parse_state",
]


@dataclass(frozen=True)
class GaussianComponent:
    weight: complex
    mean: np.ndarray  # complex-valued allowed
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=complex)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape mismatch")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(cov)) <= 0:
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "weight", complex(self.weight))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class StateModel:
    n: int
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("state needs at least one component")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")
        object.__setattr__(self, "components", comps)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "components": [
                {
                    "w_re": c.weight.real,
                    "w_im": c.weight.imag,
                    "mean_re": np.real(c.mean).tolist(),
                    "mean_im": np.imag(c.mean).tolist(),
                    "cov": c.cov.tolist(),
                }
                for c in self.components
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "StateModel":
        comps = [
            GaussianComponent(
                complex(c["w_re"], c["w_im"]),
                np.asarray(c["mean_re"]) + 1j * np.asarray(c["mean_im"]),
                np.asarray(c["cov"]),
            )
            for c in obj["components"]
        ]
        return StateModel(int(obj["n"]), tuple(comps))


@dataclass(frozen=True)
class MeasurementOutcome:
    kind: str  # "heterodyne" | "parity"
    value: object  # point (heterodyne) or +-1 (parity)
    sample_point: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "parity" and self.value not in (+1, -1):
            raise ValueError("parity outcome must be +-1")


def _vac_cov(dim: int) -> np.ndarray:
    return np.eye(dim) / (4.0 * np.pi)


def make_vacuum(n: int) -> StateModel:
    dim = 2 * n
    return StateModel(
        n, (GaussianComponent(1.0, np.zeros(dim), _vac_cov(dim)),)
    )


def make_coherent(alpha) -> StateModel:
    alpha = np.asarray(alpha, dtype=float)
    n = alpha.size // 2
    return StateModel(n, (GaussianComponent(1.0, alpha, _vac_cov(alpha.size)),))


def _stacks(state: StateModel):
    """(weights, means, covs) as stacked arrays."""
    w = np.array([c.weight for c in state.components])
    m = np.array([c.mean for c in state.components])
    covs = np.array([c.cov for c in state.components])
    return w, m, covs


def _gauss_sum(w, m, covs, x) -> np.ndarray:
    """sum_c w_c N(x; m_c, Sigma_c) broadcast over leading axes of x."""
    x = np.asarray(x, dtype=float)
    inv = np.linalg.inv(covs)
    norm = 1.0 / np.sqrt(np.linalg.det(2 * np.pi * covs))
    r = x[..., None, :] - m  # (..., C, dim)
    quad = np.einsum("...ci,cij,...cj->...c", r, inv, r)
    return np.einsum("c,...c->...", w * norm, np.exp(-0.5 * quad))


def wigner_eval(state: StateModel, x):
    """W(x); x may be a single point or an array of points (..., 2n)."""
    w, m, covs = _stacks(state)
    out = np.real(_gauss_sum(w, m, covs, x))
    return float(out) if out.ndim == 0 else out


def char_eval(state: StateModel, xi):
    """chi(xi) = int dx exp(-i 2 pi xi^T J x) W(x); xi may be batched."""
    xi = np.asarray(xi, dtype=float)
    J = symplectic_form(state.n)
    u = xi @ J  # frequency vectors: chi = E[exp(-i 2 pi u . x)]
    w, m, covs = _stacks(state)
    phase = -2j * np.pi * np.einsum("...i,ci->...c", u, m)
    damp = -2.0 * np.pi**2 * np.einsum("...i,cij,...j->...c", u, covs, u)
    out = np.einsum("c,...c->...", w, np.exp(phase + damp))
    return complex(out) if out.ndim == 0 else out


def husimi_eval(state: StateModel, alpha):
    """Q(alpha) = int W_rho(x) W_|alpha>(x) dx; int Q d(alpha) = 1."""
    w, m, covs = _stacks(state)
    out = np.real(_gauss_sum(w, m, covs + _vac_cov(2 * state.n), alpha))
    return float(out) if out.ndim == 0 else out


def overlap(s1: StateModel, s2: StateModel) -> float:
    """Tr[rho sigma] = int W_1 W_2 (exact on the Gaussian-mixture class)."""
    w1, m1, c1 = _stacks(s1)
    w2, m2, c2 = _stacks(s2)
    cov = c1[:, None] + c2[None, :]  # (C1, C2, dim, dim)
    inv = np.linalg.inv(cov)
    norm = 1.0 / np.sqrt(np.linalg.det(2 * np.pi * cov))
    r = m1[:, None, :] - m2[None, :, :]
    quad = np.einsum("abi,abij,abj->ab", r, inv, r)
    total = np.einsum("a,b,ab->", w1, w2, norm * np.exp(-0.5 * quad))
    return float(np.real(total))


def apply_displacement(state: StateModel, xi) -> StateModel:
    xi = np.asarray(xi, dtype=float)
    comps = tuple(
        GaussianComponent(c.weight, c.mean + xi, c.cov) for c in state.components
    )
    return StateModel(state.n, comps)


def apply_symplectic(state: StateModel, S) -> StateModel:
    """Unitary Gaussian evolution: W_out(x) = W_in(S x)."""
    S = np.asarray(S, dtype=float)
    J = symplectic_form(state.n)
    if not np.allclose(S.T @ J @ S, J, atol=1e-10):
        raise ValueError("matrix is not symplectic")
    S_inv = np.linalg.inv(S)
    comps = tuple(
        GaussianComponent(c.weight, S_inv @ c.mean, S_inv @ c.cov @ S_inv.T)
        for c in state.components
    )
    return StateModel(state.n, comps)


def _eigencomb_basis(code: GkpCode, logical_class: tuple):
    """Unimodular basis (g1, g2) of L + Z xi_c with g1^T J g2 = 1,
    g1 in the logical coset and g2 a stabilizer."""
    d = code.d
    reps = code.logical_coset_reps()
    if tuple(logical_class) not in reps:
        raise ValueError("unknown logical class")
    if all(v == 0 for v in logical_class):
        raise ValueError("grid eigenstate needs a nontrivial logical class")
    xi = reps[tuple(logical_class)]
    M = code.basis.M
    M_inv = np.linalg.inv(M)
    # coefficient lattice of L + Z xi, scaled by d to work over the integers
    gens = np.vstack([d * np.eye(2, dtype=int), np.rint(d * xi @ M_inv)])
    gens = gens.astype(int)
    basis = (_row_hnf_2col(gens).astype(float) / d) @ M
    g1, g2 = basis[0], basis[1]
    J = symplectic_form(code.n)
    pairing = float(g1 @ J @ g2)
    if abs(abs(pairing) - 1.0) > 1e-9:
        raise ValueError("support lattice is not symplectically unimodular")
    if pairing < 0:
        g2 = -g2
    # rotate the basis so that g1 sits in the requested coset
    coords = np.linalg.solve(np.array([g1, g2]).T, xi)
    p0, q0 = int(np.rint(coords[0])), int(np.rint(coords[1]))
    g = int(np.gcd(p0, q0))
    if g != 1:
        raise ValueError("coset representative is imprimitive in the comb lattice")
    # unimodular completion (p0, q0) -> basis of Z^2
    alpha, beta = _bezout(p0, q0)
    new_g1 = p0 * g1 + q0 * g2
    new_g2 = -beta * g1 + alpha * g2  # det [[p0, q0], [-beta, alpha]] = 1
    g1, g2 = new_g1, new_g2
    # shift g2 by multiples of g1 until it lands in the stabilizer lattice
    for s in range(d):
        cand = g2 - s * g1
        coeff = cand @ M_inv
        if np.allclose(coeff, np.rint(coeff), atol=1e-9):
            g2 = cand
            break
    else:
        raise ValueError("could not place second generator in the stabilizer lattice")
    # size-reduce: g1 may move by g2 (stays in coset), g2 by d*g1 (stays in L)
    for _ in range(32):
        moved = False
        q = int(np.rint((g1 @ g2) / (g2 @ g2)))
        if q != 0:
            g1 = g1 - q * g2
            moved = True
        step = d * g1
        q = int(np.rint((g2 @ step) / (step @ step)))
        if q != 0:
            g2 = g2 - q * step
            moved = True
        if not moved:
            break
    return g1, g2


def _row_hnf_2col(gens: np.ndarray) -> np.ndarray:
    """2x2 row basis of the integer lattice spanned by the rows of gens."""
    rows = [list(map(int, r)) for r in gens if any(r)]
    # clear the first column down to a single pivot by gcd steps
    for col in range(2):
        while True:
            nz = [i for i in range(col, len(rows)) if rows[i][col] != 0]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda i: abs(rows[i][col]))
            i0 = nz[0]
            for i in nz[1:]:
                q = rows[i][col] // rows[i0][col]
                rows[i] = [rows[i][k] - q * rows[i0][k] for k in range(2)]
        nz = [i for i in range(col, len(rows)) if rows[i][col] != 0]
        if nz:
            rows[col], rows[nz[0]] = rows[nz[0]], rows[col]
        rows = [r for r in rows[: col + 1]] + [
            r for r in rows[col + 1 :] if any(r)
        ]
    if len(rows) < 2 or rows[0][0] == 0 or rows[1][1] == 0:
        raise ValueError("generators do not span a full-rank lattice")
    return np.array(rows[:2], dtype=int)


def _bezout(p: int, q: int):
    """(alpha, beta) with alpha*p + beta*q = gcd(p, q)."""
    old_r, r = p, q
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        quo = old_r // r
        old_r, r = r, old_r - quo * r
        old_s, s = s, old_s - quo * s
        old_t, t = t, old_t - quo * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


def make_grid_state(
    code: GkpCode,
    delta: float,
    truncation: float,
    logical_class: tuple | None = None,
) -> StateModel:
    """Finite-energy grid state as a signed coherent-state comb.

    |psi> ~ sum_{a,b} (-1)^{ab} exp(-pi delta^2 |mu|^2 / 2) D(mu) |0>
    with mu = a g1 + b g2 running over the lattice generated by the
    stabilizers and one logical coset representative (default: the class
    acting as the logical Z).  The basis satisfies g1^T J g2 = 1 with g2 a
    stabilizer, so the (-1)^{ab} quadratic refinement cancels the Weyl
    phases of every stabilizer displacement: the comb is an approximate +1
    eigenstate of the full stabilizer group and of the chosen logical
    operator.  Each pair (mu, mu') contributes one Gaussian Wigner
    component with complex weight and mean; the result is exactly
    normalized, with real Wigner function bounded by 2^n.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must be in (0, 1)")
    lam1 = float(np.min(np.linalg.norm(code.basis.M, axis=1)))
    if truncation < 2.0 * lam1:
        raise ValueError("empty truncation: radius below twice the shortest stabilizer")
    if logical_class is None:
        logical_class = (0,) * (code.basis.dim - 1) + (1,)
    if code.d % 2 != 0:
        raise ValueError("grid eigenstate comb implemented for even-d codes")
    g1, g2 = _eigencomb_basis(code, tuple(logical_class))

    box = int(np.ceil(truncation / min(np.linalg.norm(g1), np.linalg.norm(g2)))) + 2
    support: list[tuple[np.ndarray, float]] = []
    for a in range(-box, box + 1):
        for b in range(-box, box + 1):
            mu = a * g1 + b * g2
            if np.linalg.norm(mu) <= truncation:
                sign = -1.0 if (a * b) % 2 else 1.0
                amp = sign * np.exp(-np.pi * delta**2 * (mu @ mu) / 2.0)
                support.append((mu, amp))
    if not support:
        raise ValueError("empty truncation")

    J = symplectic_form(code.n)
    cov = _vac_cov(code.basis.dim)
    comps = []
    total = 0.0 + 0.0j
    for mu, c_mu in support:
        for mup, c_mup in support:
            # cut on the envelope product only: the pair-separation factor
            # exp(-pi |d|^2 / 2) is cancelled by the complex-mean Gaussian
            # in overlap integrals, so distant coherences carry O(1) weight
            if abs(c_mu * c_mup) < 1e-16:
                continue
            dvec = mup - mu
            w = (
                c_mu
                * c_mup
                * np.exp(1j * np.pi * (mup @ J @ mu))
                * np.exp(-np.pi * (dvec @ dvec) / 2.0)
            )
            mean = (mu + mup) / 2.0 - 0.5j * (J @ dvec)
            comps.append((w, mean))
            total += w
    if abs(total) < 1e-12:
        raise ValueError("comb amplitudes cancel; check signs/truncation")
    components = tuple(
        GaussianComponent(w / total, mean, cov) for w, mean in comps
    )
    return StateModel(code.n, components)


def sample_heterodyne(
    state: StateModel, rng: np.random.Generator, max_tries: int = 100000
):
    """Draw alpha from the Husimi density of the state.

    Direct mixture sampling when all Husimi components have nonnegative
    weights and real means; otherwise rejection sampling against the
    positive envelope sum_c |w_c| e^{k_c} N(alpha; Re m_c, Sigma_c), where
    e^{k_c} = exp(Im(m_c)^T Sigma_c^{-1} Im(m_c) / 2) bounds the
    oscillatory factor of a complex-mean component.
    """
    w, m, covs = _stacks(state)
    covs = covs + _vac_cov(2 * state.n)  # Husimi mixture over alpha
    real_means = np.allclose(np.imag(m), 0)
    pos_weights = np.allclose(np.imag(w), 0) and np.all(np.real(w) >= -1e-12)
    if real_means and pos_weights:
        pw = np.clip(np.real(w), 0.0, None)
        idx = rng.choice(len(pw), p=pw / pw.sum())
        return rng.multivariate_normal(np.real(m[idx]), covs[idx])

    inv = np.linalg.inv(covs)
    mi = np.imag(m)
    env_w = np.abs(w) * np.exp(0.5 * np.einsum("ci,cij,cj->c", mi, inv, mi))
    probs = env_w / env_w.sum()
    mr = np.real(m)

    def envelope(alpha):
        return float(np.real(_gauss_sum(env_w, mr, covs, alpha)))

    for trial in range(max_tries):
        idx = rng.choice(len(probs), p=probs)
        alpha = rng.multivariate_normal(mr[idx], covs[idx])
        q = max(husimi_eval(state, alpha), 0.0)
        if rng.random() * envelope(alpha) <= q:
            return alpha
    raise RuntimeError("heterodyne rejection sampler failed to accept")


def sample_parity(state: StateModel, x, rng: np.random.Generator) -> int:
    """Displaced-parity Bernoulli sample with mean 2^{-n} W_rho(x)."""
    mean = wigner_eval(state, x) / 2**state.n
    mean = float(np.clip(mean, -1.0, 1.0))
    return +1 if rng.random() < (1.0 + mean) / 2.0 else -1


def parse_state(spec: str, codes: dict | None = None) -> StateModel:
    """CLI state constructors: 'vacuum', 'coherent:0.3,0.1',
    'grid:hexagonal,delta=0.2[,r=3.0]'."""
    from .lattice import named_code

    if spec == "vacuum":
        return make_vacuum(1)
    if spec.startswith("coherent:"):
        vals = [float(v) for v in spec.split(":", 1)[1].split(",")]
        return make_coherent(np.array(vals))
    if spec.startswith("grid:"):
        body = spec.split(":", 1)[1].split(",")
        code = named_code(body[0])
        kv = dict(item.split("=", 1) for item in body[1:])
        delta = float(kv.get("delta", 0.2))
        r = float(kv.get("r", 4.5))
        return make_grid_state(code, delta, r)
    raise ValueError(f"unknown state spec {spec!r}")
