"""Logical shadow tomography on GKP codes.

The pipeline: a logical Clifford plus stabilizer-displacement twirl is
applied to the state, a heterodyne outcome is recorded, and the classical
pointer U_i^dag |alpha_i> (a single Gaussian) is stored.  Averaging the
decoded pointers reproduces the depolarized logical content of the input,
which an affine inversion then corrects.  The decoder is characteristic-
function coset binning: each logical Pauli expectation is a lattice sum of
the characteristic function over one coset of L_perp / L.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gkp_channels import DepolarizingCoefficients, invert_depolarizing
from .lattice import GkpCode, points_within
from .phase_space import (
    MeasurementOutcome,
    StateModel,
    apply_displacement,
    apply_symplectic,
    char_eval,
    make_coherent,
    sample_heterodyne,
)
from .symplectic import SymplecticMatrix, automorphism_lift, two_design_elements
from .twirl import (
    LatticeGaussianTwirl,
    RandomWalkTwirl,
    sample_lattice_gaussian,
    sample_walk_displacement,
)

__all__ = [
    "ShadowRecord",
    "EstimateReport",
    "LogicalPauliVector",
    "decode_logical_paulis",
    "run_shadow_protocol",
    "shadow_reconstruct",
    "estimate_logical_observable",
    "sample_budget_hkp",
    "sample_budget_full_state",
    "trace_distance_guarantee",
]


@dataclass(frozen=True)
class ShadowRecord:
    """One shadow sample: the applied Clifford lift with its displacement
    labels, the heterodyne outcome, and the back-rotated pointer state."""

    symplectic: SymplecticMatrix
    pauli_class: tuple
    twirl_displacement: np.ndarray
    outcome: MeasurementOutcome
    pointer: StateModel

    def to_json(self) -> dict:
        return {
            "symplectic": self.symplectic.S.tolist(),
            "pauli_class": list(self.pauli_class),
            "twirl_displacement": np.asarray(self.twirl_displacement).tolist(),
            "outcome": {
                "kind": self.outcome.kind,
                "value": np.asarray(self.outcome.value).tolist(),
            },
            "pointer": self.pointer.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "ShadowRecord":
        n = len(obj["pauli_class"]) // 2
        value = np.asarray(obj["outcome"]["value"], dtype=float)
        return ShadowRecord(
            symplectic=SymplecticMatrix(n, np.asarray(obj["symplectic"])),
            pauli_class=tuple(obj["pauli_class"]),
            twirl_displacement=np.asarray(obj["twirl_displacement"]),
            outcome=MeasurementOutcome("heterodyne", value, value),
            pointer=StateModel.from_json(obj["pointer"]),
        )


@dataclass(frozen=True)
class EstimateReport:
    value: float
    K: int
    N: int
    epsilon: float
    delta: float
    per_batch_means: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.per_batch_means:
            med = float(np.median(np.asarray(self.per_batch_means)))
            if not np.isclose(med, self.value, atol=1e-12):
                raise ValueError("value must be the median of the batch means")


@dataclass(frozen=True)
class LogicalPauliVector:
    """Logical Pauli expectations indexed by cosets of L_perp / L.

    classes holds the d^{2n} integer coefficient classes (identity first);
    values the matching real expectations, normalized so the identity
    entry is 1 for a normalized state.
    """

    classes: tuple
    values: np.ndarray

    def __post_init__(self):
        if len(self.classes) != len(self.values):
            raise ValueError("classes and values must align")
        if any(c != 0 for c in self.classes[0]):
            raise ValueError("identity class must come first")

    def as_dict(self) -> dict:
        return {cls: float(v) for cls, v in zip(self.classes, self.values)}


def _coset_points(code: GkpCode, truncation: float):
    """Per-coset characteristic-function sample points within the cutoff
    (with the Weyl cocycle signs of the Hermitian Pauli representative),
    plus the shell just outside it (used for the tail estimate)."""
    from .lattice import symplectic_form

    reps = code.logical_coset_reps()
    J = symplectic_form(code.n)
    lam1 = float(np.min(np.linalg.norm(code.basis.M, axis=1)))
    margin = 2.0 * lam1
    base = points_within(code.basis, truncation + margin + 1e-9)
    inner, shell = [], []
    for cls, rep in reps.items():
        pts = rep + base
        # D(rep + s) = e^{-i pi rep^T J s} D(rep) D(s): the stabilizer
        # pairing is an integer, so each lattice translate of the coset
        # representative carries a definite sign relative to D(rep)
        pairings = np.rint(base @ J.T @ rep).astype(int)
        signs = np.where(pairings % 2 == 0, 1.0, -1.0)
        norms = np.linalg.norm(pts, axis=1)
        keep = norms <= truncation
        inner.append((cls, pts[keep], signs[keep]))
        shell.append(pts[(norms > truncation) & (norms <= truncation + margin)])
    return inner, np.concatenate(shell, axis=0)


def decode_logical_paulis(
    state: StateModel, code: GkpCode, truncation: float = 4.0
) -> LogicalPauliVector:
    """Logical Pauli expectations by coset binning of the characteristic
    function.

    Entry for coset a is sum_{s in L, |xi_a + s| <= truncation}
    (-1)^{xi_a^T J s} Re chi(xi_a + s): the sign aligns each lattice
    translate with the Hermitian representative D(xi_a), and the real part
    is the +-xi symmetrization.  The vector is normalized by the
    identity-coset sum so that the identity entry is 1.  Raises when the
    estimated lattice-sum tail (the |chi| mass in the shell just outside
    the cutoff, relative to the identity sum) exceeds 1e-4.
    """
    inner, shell_pts = _coset_points(code, truncation)
    raw = np.array(
        [
            float(np.sum(signs * np.real(char_eval(state, pts))))
            for _, pts, signs in inner
        ]
    )
    identity = raw[0]
    if identity <= 0:
        raise ValueError("identity coset sum is not positive; state too wide "
                         "or truncation too small")
    tail = float(np.sum(np.abs(char_eval(state, shell_pts)))) / identity
    if tail > 1e-4:
        raise ValueError(
            f"characteristic-function tail ~{tail:.2e} beyond truncation "
            f"{truncation}; increase the truncation radius"
        )
    return LogicalPauliVector(
        classes=tuple(cls for cls, _, _ in inner), values=raw / identity
    )


def _lifted_design(code: GkpCode):
    """The 12-element single-mode Clifford 2-design, lifted to physical
    symplectic matrices and coset-representative displacements."""
    reps = code.logical_coset_reps()
    out = []
    lift_cache: dict = {}
    for _, usym, cls in two_design_elements():
        key = usym.key()
        if key not in lift_cache:
            lift_cache[key] = automorphism_lift(usym, code)
        out.append((lift_cache[key], cls, reps[cls]))
    return out


def _sample_twirl(twirl_spec, rng) -> np.ndarray:
    if twirl_spec is None:
        return None
    if isinstance(twirl_spec, RandomWalkTwirl):
        return sample_walk_displacement(twirl_spec, rng)
    if isinstance(twirl_spec, LatticeGaussianTwirl):
        return sample_lattice_gaussian(twirl_spec, rng)
    raise ValueError(f"unknown twirl spec {twirl_spec!r}")


def run_shadow_protocol(
    state: StateModel,
    code: GkpCode,
    povm: str,
    N_total: int,
    twirl_spec,
    rng: np.random.Generator,
) -> list[ShadowRecord]:
    """Sample N_total shadow records with heterodyne readout.

    Per record: a uniform element (S, pauli) of the lifted 2-design and a
    twirl displacement gamma are drawn; the applied channel displaces by
    the pauli coset representative, evolves phase space by S, then
    displaces by gamma.  The heterodyne outcome alpha is recorded together
    with the back-rotated pointer U^dag |alpha> = |S^{-1}(alpha - gamma) -
    xi_pauli> (a coherent state whenever S is orthogonal).
    """
    if povm != "heterodyne":
        raise ValueError("only the heterodyne POVM is supported")
    if code.n != 1 or code.d != 2:
        raise ValueError("shadow protocol validated for single-mode qubit codes")
    design = _lifted_design(code)
    dim = code.basis.dim
    orthogonal = all(
        np.allclose(S.S.T @ S.S, np.eye(dim), atol=1e-9) for S, _, _ in design
    )
    records = []
    for _ in range(N_total):
        S, cls, xi_p = design[rng.integers(len(design))]
        gamma = _sample_twirl(twirl_spec, rng)
        g = np.zeros(dim) if gamma is None else gamma
        if orthogonal:
            # rotations map coherent states to coherent states, so the
            # transformed Husimi density is a pullback of the input one
            alpha0 = sample_heterodyne(state, rng)
            alpha = S.S @ (alpha0 + xi_p) + g
        else:
            transformed = apply_displacement(
                apply_symplectic(apply_displacement(state, xi_p),
                                 np.linalg.inv(S.S)),
                g,
            )
            alpha = sample_heterodyne(transformed, rng)
        pointer = apply_displacement(
            apply_symplectic(apply_displacement(make_coherent(alpha), -g), S.S),
            -xi_p,
        )
        records.append(
            ShadowRecord(
                symplectic=S,
                pauli_class=cls,
                twirl_displacement=g,
                outcome=MeasurementOutcome("heterodyne", alpha, alpha),
                pointer=pointer,
            )
        )
    return records


def shadow_reconstruct(records: list[ShadowRecord]) -> StateModel:
    """Uniform mixture |S> = N^{-1} sum_i U_i^dag |Pi_i> of the pointers."""
    if not records:
        raise ValueError("no records to reconstruct from")
    n = records[0].pointer.n
    comps = []
    for rec in records:
        for c in rec.pointer.components:
            comps.append(type(c)(c.weight / len(records), c.mean, c.cov))
    return StateModel(n, tuple(comps))


def estimate_logical_observable(
    records: list[ShadowRecord],
    observable_vector,
    coeffs: DepolarizingCoefficients,
    code: GkpCode,
    epsilon: float,
    delta: float,
    truncation: float = 4.0,
    n_observables: int = 1,
) -> EstimateReport:
    """Median-of-means estimate of a logical Pauli-basis observable.

    Per record: o_i = <observable | invert_depolarizing(decode(pointer_i))>.
    Batch count K = ceil(2 ln(2 M / delta)); any remainder records beyond
    K * (len // K) are dropped so the batches are equal-sized.
    """
    if not records:
        raise ValueError("no records")
    obs = np.asarray(observable_vector, dtype=float)
    per_record = np.array(
        [
            float(
                obs
                @ invert_depolarizing(
                    coeffs,
                    decode_logical_paulis(rec.pointer, code, truncation).values,
                )
            )
            for rec in records
        ]
    )
    K = max(1, int(np.ceil(2.0 * np.log(2.0 * n_observables / delta))))
    K = min(K, len(per_record))
    N = len(per_record) // K
    batches = per_record[: K * N].reshape(K, N)
    means = batches.mean(axis=1)
    return EstimateReport(
        value=float(np.median(means)),
        K=K,
        N=N,
        epsilon=epsilon,
        delta=delta,
        per_batch_means=tuple(float(m) for m in means),
    )


def sample_budget_hkp(
    epsilon: float, delta: float, M: int, O_list
) -> tuple[int, int]:
    """Median-of-means budget (N, K) for M observables with the
    3 Tr[O^2] bound on the shadow norm: N = ceil(34/eps^2 * 3 max Tr[O^2]),
    K = ceil(2 ln(2M/delta)).  O_list entries may be matrices or
    precomputed Tr[O^2] values."""
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if M < 1:
        raise ValueError("M must be at least 1")
    tr_sq = []
    for o in O_list:
        o = np.asarray(o)
        if o.ndim == 2:
            tr_sq.append(float(np.real(np.trace(o @ o.conj().T))))
        else:
            tr_sq.append(float(o))
    N = int(np.ceil(34.0 / epsilon**2 * 3.0 * max(tr_sq)))
    K = int(np.ceil(2.0 * np.log(2.0 * M / delta)))
    return N, K


def sample_budget_full_state(
    d: int, n: int, alpha: float, delta_HS: float, delta: float
) -> int:
    """Samples needed for a Hilbert-Schmidt-accurate logical state estimate:
    N = ceil(2 d^{2n} / (alpha^2 delta_HS^2) * (ln(2/delta) + 2n ln d))."""
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    bound = (
        2.0 * d ** (2 * n) / (alpha**2 * delta_HS**2)
        * (np.log(2.0 / delta) + 2.0 * n * np.log(d))
    )
    return int(np.ceil(bound))


def trace_distance_guarantee(d: int, n: int, delta_HS: float) -> float:
    """Trace-norm error implied by a Hilbert-Schmidt error delta_HS:
    |.|_1 <= d^{n/2} delta_HS / 2."""
    return d ** (n / 2.0) * delta_HS / 2.0
