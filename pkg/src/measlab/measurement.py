"""Measurement couplings between a system and a pointer apparatus.

A :class:`MeasurementScheme` bundles the measured magnitude ``A`` (system
space), the pointer magnitude ``M`` (apparatus space), the ready value
``m0``, a one-one :class:`Calibration` ``a -> m_a`` and the unitary coupling
``U`` acting on ``system (x) apparatus`` over the measurement duration.

The builders constrain ``U`` only on the vectors ``|a> (x) |m0>`` and fill
in the rest with the canonical completion of
:func:`measlab.linalg.complete_to_unitary`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import schur

from .linalg import (
    Interval,
    as_matrix,
    as_state,
    commutator,
    complete_to_unitary,
    eigenspace_basis,
    identity,
    is_unitary,
    ket_bra,
    tensor,
)
from .postulates import (
    DensityOperator,
    Magnitude,
    OutcomeDistribution,
    born_mixed,
    outcome_distribution,
)

VERDICT_TOL = 1e-10


@dataclass(frozen=True)
class Calibration:
    """One-one map from measured values ``a`` to pointer values ``m_a``."""

    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pairs = tuple((float(a), float(m)) for a, m in self.pairs)
        if not pairs:
            raise ValueError("calibration needs at least one pair")
        if len({a for a, _ in pairs}) != len(pairs) or len({m for _, m in pairs}) != len(pairs):
            raise ValueError("calibration must be one-one in both coordinates")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_mapping(cls, mapping: Mapping[float, float]) -> "Calibration":
        return cls(tuple(mapping.items()))

    @property
    def system_values(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.pairs)

    @property
    def pointer_values(self) -> tuple[float, ...]:
        return tuple(m for _, m in self.pairs)

    def __call__(self, a: float, atol: float = 1e-9) -> float:
        for x, m in self.pairs:
            if abs(x - a) <= atol:
                return m
        raise KeyError(a)

    def inverse(self, m: float, atol: float = 1e-9) -> float:
        for a, y in self.pairs:
            if abs(y - m) <= atol:
                return a
        raise KeyError(m)


def eigenvector(mag: Magnitude, value: float) -> np.ndarray:
    """Canonical unit eigenvector for ``value`` (first vector of the eigenspace basis)."""
    proj = mag.projector(Interval.point(mag.value_of(value)))
    return as_state(eigenspace_basis(proj)[:, 0])


@dataclass(frozen=True, eq=False)
class MeasurementScheme:
    measured: Magnitude
    pointer: Magnitude
    ready_value: float
    calibration: Calibration
    coupling: np.ndarray
    duration: float = 1.0
    kind: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "coupling", as_matrix(self.coupling, "coupling"))
        n = self.system_dim * self.apparatus_dim
        if self.coupling.shape != (n, n):
            raise ValueError(f"coupling must act on C^{n}")
        if not is_unitary(self.coupling):
            raise ValueError("coupling is not unitary within 1e-10")
        m0 = self.pointer.value_of(self.ready_value)
        if any(abs(m0 - m) <= 1e-9 for m in self.calibration.pointer_values):
            raise ValueError("ready value must differ from every calibrated pointer value")
        for a in self.calibration.system_values:
            self.measured.value_of(a)
        for m in self.calibration.pointer_values:
            self.pointer.value_of(m)
        if self.apparatus_dim < len(self.calibration.pairs) + 1:
            raise ValueError("apparatus needs one dimension per outcome plus the ready state")
        object.__setattr__(self, "ready_value", m0)

    @property
    def system_dim(self) -> int:
        return self.measured.dim

    @property
    def apparatus_dim(self) -> int:
        return self.pointer.dim

    @property
    def dim(self) -> int:
        return self.system_dim * self.apparatus_dim

    def ready_vector(self) -> np.ndarray:
        return eigenvector(self.pointer, self.ready_value)

    def ready_state(self) -> DensityOperator:
        return DensityOperator.pure(self.ready_vector())

    def system_vector(self, a: float) -> np.ndarray:
        return eigenvector(self.measured, a)

    def pointer_vector(self, m: float) -> np.ndarray:
        return eigenvector(self.pointer, m)

    def pointer_observable(self) -> Magnitude:
        """``1 (x) M`` on the composite space."""
        op = tensor(identity(self.system_dim), self.pointer.operator)
        return Magnitude.from_operator(f"1x{self.pointer.name}", op)

    def hamiltonian(self) -> np.ndarray:
        """Hermitian ``H`` with ``exp(-i H duration) == coupling`` (principal branch)."""
        # Complex Schur form of a normal matrix is diagonal.
        t, z = schur(np.asarray(self.coupling), output="complex")
        h = z @ np.diag(-np.angle(np.diag(t)) / self.duration) @ z.conj().T
        return 0.5 * (h + h.conj().T)


def _check_calibration(measured: Magnitude, pointer: Magnitude, ready_value: float, calibration: Calibration):
    for a in calibration.system_values:
        try:
            v = measured.value_of(a)
        except ValueError:
            raise ValueError(f"calibrated value {a} is not in the spectrum of {measured.name}") from None
        rank = int(round(np.trace(measured.projector(Interval.point(v))).real))
        if rank != 1:
            raise ValueError(f"eigenvalue {a} of {measured.name} is {rank}-fold degenerate")
    for m in (*calibration.pointer_values, ready_value):
        try:
            pointer.value_of(m)
        except ValueError:
            raise ValueError(f"pointer value {m} is not in the spectrum of {pointer.name}") from None


def build_disturbance_scheme(
    measured: Magnitude,
    pointer: Magnitude,
    ready_value: float,
    calibration: Calibration,
    post_system_states: Mapping[float, Sequence[complex]],
    duration: float = 1.0,
) -> MeasurementScheme:
    """Coupling with ``U(|a> (x) |m0>) == |u_a> (x) |m_a>`` for every calibrated ``a``.

    ``post_system_states`` maps each calibrated value to its post-measurement
    system state ``|u_a>``.
    """
    _check_calibration(measured, pointer, ready_value, calibration)
    ready = eigenvector(pointer, ready_value)
    pairs = []
    for a, m in calibration.pairs:
        u = next((v for k, v in post_system_states.items() if abs(k - a) <= 1e-9), None)
        if u is None:
            raise ValueError(f"no post-measurement state given for calibrated value {a}")
        pairs.append(
            (tensor(eigenvector(measured, a), ready), tensor(as_state(u), eigenvector(pointer, m)))
        )
    try:
        u_m = complete_to_unitary(pairs)
    except ValueError as exc:
        raise ValueError(f"image vectors are not orthonormal: {exc}") from None
    return MeasurementScheme(measured, pointer, ready_value, calibration, u_m, duration, "disturbance")


def build_ideal_scheme(
    measured: Magnitude,
    pointer: Magnitude,
    ready_value: float,
    calibration: Calibration,
    duration: float = 1.0,
) -> MeasurementScheme:
    """Coupling with ``U(|a> (x) |m0>) == |a> (x) |m_a>`` for every calibrated ``a``."""
    _check_calibration(measured, pointer, ready_value, calibration)
    posts = {a: eigenvector(measured, a) for a in calibration.system_values}
    scheme = build_disturbance_scheme(measured, pointer, ready_value, calibration, posts, duration)
    return MeasurementScheme(measured, pointer, ready_value, calibration, scheme.coupling, duration, "ideal")


@dataclass(frozen=True)
class RevealEntry:
    system_value: float
    pointer_value: float
    residual: float
    passed: bool


@dataclass(frozen=True)
class PropertyRevealingReport:
    entries: tuple[RevealEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_residual(self) -> float:
        return max(e.residual for e in self.entries)


def check_property_revealing(scheme: MeasurementScheme, tol: float = VERDICT_TOL) -> PropertyRevealingReport:
    """Check that ``U(|a> (x) |m0>)`` is an eigenvector of ``1 (x) M`` with value ``m_a``."""
    ready = scheme.ready_vector()
    one_m = tensor(identity(scheme.system_dim), scheme.pointer.operator)
    entries = []
    for a, m in scheme.calibration.pairs:
        out = scheme.coupling @ tensor(scheme.system_vector(a), ready)
        residual = float(np.linalg.norm(one_m @ out - m * out))
        entries.append(RevealEntry(a, m, residual, residual <= tol))
    return PropertyRevealingReport(tuple(entries))


def final_state(scheme: MeasurementScheme, initial: DensityOperator) -> DensityOperator:
    """``U W U^dagger`` for a composite initial state."""
    if initial.dim != scheme.dim:
        raise ValueError(f"initial state lives in C^{initial.dim}, scheme acts on C^{scheme.dim}")
    u = scheme.coupling
    m = u @ initial.matrix @ u.conj().T
    return DensityOperator(0.5 * (m + m.conj().T))


@dataclass(frozen=True)
class ReproducibilityReport:
    """Born statistics of ``A`` in the initial system state against the pointer's final statistics."""

    system: OutcomeDistribution
    pointer: OutcomeDistribution
    deviations: tuple[tuple[float, float, float], ...]  # (a, m_a, |Pr_S(a) - Pr_M(m_a)|)
    max_deviation: float
    passed: bool


def check_probability_reproducibility(
    scheme: MeasurementScheme,
    system_initial: DensityOperator,
    apparatus_initial: DensityOperator,
    tol: float = VERDICT_TOL,
) -> ReproducibilityReport:
    """Compare ``Pr^{W_S}(A: {a})`` with ``Pr^{W(tau)}(1 (x) M: {m_a})`` for each calibrated ``a``.

    Both distributions are reported over the full spectra, so the pointer
    side also shows the weight left on the ready value and on any
    uncalibrated pointer values.
    """
    if system_initial.dim != scheme.system_dim or apparatus_initial.dim != scheme.apparatus_dim:
        raise ValueError("initial states do not match the scheme's dimensions")
    w_tau = final_state(scheme, system_initial.tensor(apparatus_initial))
    one_m = scheme.pointer_observable()
    sys_dist = outcome_distribution(system_initial, scheme.measured)
    ptr_dist = outcome_distribution(w_tau, one_m)
    devs = []
    for a, m in scheme.calibration.pairs:
        pa = born_mixed(system_initial, scheme.measured, Interval.point(a))
        pm = born_mixed(w_tau, one_m, Interval.point(m))
        devs.append((a, m, abs(pa - pm)))
    worst = max(d for _, _, d in devs)
    return ReproducibilityReport(sys_dist, ptr_dist, tuple(devs), worst, worst <= tol)


@dataclass(frozen=True, eq=False)
class ConvexExpansion:
    """``W = sum_n w_n P_n`` with rank-1 projectors ``P_n``.

    ``values`` records, per term, the eigenvalue of the privileged magnitude
    whose eigenspace holds that term.
    """

    weights: tuple[float, ...]
    terms: tuple[np.ndarray, ...]
    values: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if len(self.weights) != len(self.terms):
            raise ValueError("one weight per term is required")
        if abs(sum(self.weights) - 1.0) > 1e-10 or any(w < 0 or w > 1 for w in self.weights):
            raise ValueError("weights must lie in [0, 1] and sum to 1")
        for p in self.terms:
            if np.max(np.abs(p @ p - p)) > 1e-10 or np.max(np.abs(p - p.conj().T)) > 1e-10:
                raise ValueError("expansion terms must be Hermitian projectors")
            if abs(np.trace(p).real - 1.0) > 1e-10:
                raise ValueError("expansion terms must have rank 1")

    def __len__(self) -> int:
        return len(self.weights)

    def reassemble(self) -> np.ndarray:
        return sum(w * p for w, p in zip(self.weights, self.terms))

    def weight_of(self, value: float, atol: float = 1e-9) -> float:
        """Total weight of the terms lying in the eigenspace of ``value``."""
        return sum(w for w, v in zip(self.weights, self.values) if abs(v - value) <= atol)


def ignorance_expansion(w: DensityOperator, privileged: Magnitude, tol: float = 1e-9) -> ConvexExpansion:
    """Expand ``W`` in rank-1 eigenprojectors of a commuting magnitude.

    Inside a degenerate eigenspace of ``privileged`` the terms follow
    ``W``'s own eigenbasis restricted to that subspace. Raises
    ``ValueError`` when ``[W, A] != 0``: then no expansion privileging ``A``
    exists.
    """
    if w.dim != privileged.dim:
        raise ValueError("dimension mismatch")
    comm = float(np.linalg.norm(commutator(w.matrix, privileged.operator), 2))
    if comm > tol:
        raise ValueError(
            f"W does not commute with {privileged.name} (|[W, A]| = {comm:.3g}); "
            "no expansion in its eigenbasis exists"
        )
    weights, terms, values = [], [], []
    for lam, p in privileged.spectrum:
        basis = eigenspace_basis(p)
        block = basis.conj().T @ w.matrix @ basis
        mu, vecs = np.linalg.eigh(0.5 * (block + block.conj().T))
        for k in np.argsort(-mu, kind="stable"):
            if mu[k] <= 1e-14:
                continue
            v = basis @ vecs[:, k]
            weights.append(float(mu[k]))
            terms.append(ket_bra(v / np.linalg.norm(v)))
            values.append(lam)
    total = sum(weights)
    weights = [x / total for x in weights]
    return ConvexExpansion(tuple(weights), tuple(terms), tuple(values))


def realistic_ready_state(
    pointer: Magnitude,
    ready_value: float,
    sub_weights: Sequence[float],
    leak_weights: Sequence[float],
    epsilon: float,
    tol: float = 1e-12,
) -> DensityOperator:
    """Ready state spread over a degenerate ``m0`` eigenspace with an ``epsilon`` leak.

    ``W = sum_n v_n P0_n + sum_j w_j P_j`` where the ``P0_n`` project onto the
    canonical basis of the ``m0`` eigenspace (one weight per basis vector)
    and ``P_j`` onto the canonical eigenvector of each remaining pointer
    value in increasing order. Requires ``sum v == 1 - epsilon`` and
    ``sum w == epsilon``.
    """
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    if any(x < 0 for x in (*sub_weights, *leak_weights)):
        raise ValueError("weights must be non-negative")
    if abs(sum(sub_weights) - (1 - epsilon)) > tol:
        raise ValueError(f"sub-weights sum to {sum(sub_weights)!r}, expected 1 - epsilon")
    if abs(sum(leak_weights) - epsilon) > tol:
        raise ValueError(f"leak weights sum to {sum(leak_weights)!r}, expected epsilon")
    m0 = pointer.value_of(ready_value)
    basis = eigenspace_basis(pointer.projector(Interval.point(m0)))
    if len(sub_weights) != basis.shape[1]:
        raise ValueError(f"m0 eigenspace has dimension {basis.shape[1]}, got {len(sub_weights)} sub-weights")
    others = [v for v in pointer.values if v != m0]
    if len(leak_weights) != len(others):
        raise ValueError(f"expected {len(others)} leak weights, one per other pointer value")
    m = sum(v * ket_bra(basis[:, n]) for n, v in enumerate(sub_weights))
    for wj, value in zip(leak_weights, others):
        m = m + wj * ket_bra(eigenvector(pointer, value))
    return DensityOperator(m)


__all__ = [
    "Calibration",
    "ConvexExpansion",
    "MeasurementScheme",
    "PropertyRevealingReport",
    "ReproducibilityReport",
    "RevealEntry",
    "build_disturbance_scheme",
    "build_ideal_scheme",
    "check_probability_reproducibility",
    "check_property_revealing",
    "eigenvector",
    "final_state",
    "ignorance_expansion",
    "realistic_ready_state",
]
