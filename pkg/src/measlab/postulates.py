"""States, magnitudes and the measurement postulates.

Pure states are unit vectors (see :func:`measlab.linalg.as_state`); mixed
states are :class:`DensityOperator` instances. A :class:`Magnitude` is a
named Hermitian operator together with its spectral family. Outcome sets are
:class:`~measlab.linalg.Interval` cells; a *partition* is a list of disjoint
cells.

Sampling uses ``numpy.random.Generator`` backed by PCG64
(``numpy.random.default_rng(seed)``). Passing the same integer seed, or a
generator in the same state, reproduces the same draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import (
    SPIN_X,
    SPIN_Y,
    SPIN_Z,
    Interval,
    SpectralFamily,
    adjoint,
    as_matrix,
    as_state,
    check_disjoint,
    eig_hermitian,
    ket_bra,
    spectral_projector,
)

DENSITY_TOL = 1e-10
EIGENLINK_TOL = 1e-10
# Smallest probability an outcome may have and still be conditioned on.
MIN_PROBABILITY = 1e-12


class ImpossibleOutcomeError(ValueError):
    """Conditioning on an outcome that has (numerically) zero probability."""


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace operator."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, "density matrix")
        if m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > DENSITY_TOL:
            raise ValueError("density matrix must be Hermitian")
        if abs(np.trace(m) - 1.0) > DENSITY_TOL:
            raise ValueError(f"density matrix trace is {np.trace(m).real!r}, expected 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -DENSITY_TOL:
            raise ValueError("density matrix must be positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, psi) -> "DensityOperator":
        return cls(ket_bra(as_state(psi)))

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence) -> "DensityOperator":
        """Convex combination of pure state vectors or density matrices."""
        if len(weights) != len(states):
            raise ValueError("one weight per state is required")
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > DENSITY_TOL:
            raise ValueError("weights must be non-negative and sum to 1")
        total = 0
        for w, s in zip(weights, states):
            if isinstance(s, DensityOperator):
                m = s.matrix
            else:
                s = np.asarray(s, dtype=complex)
                m = ket_bra(as_state(s)) if s.ndim == 1 else s
            total = total + w * m
        return cls(total)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def is_pure(self, tol: float = DENSITY_TOL) -> bool:
        return abs(self.purity() - 1.0) <= tol

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        return DensityOperator(np.kron(self.matrix, other.matrix))


@dataclass(frozen=True, eq=False)
class Magnitude:
    """A physical magnitude: a named Hermitian operator and its spectral family."""

    name: str
    operator: np.ndarray
    spectrum: SpectralFamily

    def __post_init__(self):
        op = as_matrix(self.operator, f"operator of {self.name}")
        if np.max(np.abs(self.spectrum.reconstruct() - op)) > 1e-9:
            raise ValueError(f"spectrum of {self.name} does not reconstruct its operator")
        object.__setattr__(self, "operator", op)

    @classmethod
    def from_operator(cls, name: str, operator, degeneracy_tol: float | None = None) -> "Magnitude":
        return cls(name, as_matrix(operator), eig_hermitian(operator, degeneracy_tol))

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    @property
    def values(self) -> tuple[float, ...]:
        return self.spectrum.eigenvalues

    def projector(self, delta: Interval) -> np.ndarray:
        return spectral_projector(self.spectrum, delta)

    def cells(self) -> list[Interval]:
        """Singleton partition, one cell per eigenvalue."""
        return [Interval.point(v) for v in self.values]

    def value_of(self, x: float, atol: float = 1e-9) -> float:
        """Spectrum value matching ``x``; raise if ``x`` is not an eigenvalue."""
        for v in self.values:
            if abs(v - x) <= atol:
                return v
        raise ValueError(f"{x!r} is not in the spectrum of {self.name} {self.values}")

    def __repr__(self) -> str:
        return f"Magnitude({self.name!r}, values={self.values})"


@dataclass(frozen=True)
class DeterminateProperty:
    """Property <A, Delta>: magnitude A has a value in Delta."""

    magnitude: Magnitude
    value_set: Interval

    def __str__(self) -> str:
        return f"<{self.magnitude.name}, {self.value_set}>"


@dataclass(frozen=True)
class OutcomeDistribution:
    """Finite probability distribution over distinct real values."""

    entries: tuple[tuple[float, float], ...]

    def __post_init__(self):
        entries = tuple((float(v), float(p)) for v, p in self.entries)
        values = [v for v, _ in entries]
        if len(set(values)) != len(values):
            raise ValueError("outcome values must be distinct")
        if any(p < -DENSITY_TOL or p > 1 + DENSITY_TOL for _, p in entries):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(sum(p for _, p in entries) - 1.0) > DENSITY_TOL:
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "entries", entries)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for v, _ in self.entries)

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.entries)

    def probability(self, value: float, atol: float = 1e-9) -> float:
        for v, p in self.entries:
            if abs(v - value) <= atol:
                return p
        return 0.0

    def support(self, threshold: float = MIN_PROBABILITY) -> tuple[float, ...]:
        return tuple(v for v, p in self.entries if p > threshold)

    def total_variation(self, other: "OutcomeDistribution", atol: float = 1e-9) -> float:
        values = list(self.values)
        for v in other.values:
            if all(abs(v - u) > atol for u in values):
                values.append(v)
        return 0.5 * sum(abs(self.probability(v, atol) - other.probability(v, atol)) for v in values)

    def as_dict(self) -> dict[float, float]:
        return dict(self.entries)


def _check_dims(a: Magnitude, dim: int) -> None:
    if a.dim != dim:
        raise ValueError(f"dimension mismatch: {a.name} acts on C^{a.dim}, state lives in C^{dim}")


def born_pure(psi, a: Magnitude, delta: Interval) -> float:
    """Born probability ``<psi|P^A(delta)|psi>``."""
    psi = as_state(psi)
    _check_dims(a, psi.size)
    p = np.vdot(psi, a.projector(delta) @ psi).real
    return float(min(max(p, 0.0), 1.0))


def born_mixed(w: DensityOperator, a: Magnitude, delta: Interval) -> float:
    """Trace formula ``Tr(W P^A(delta))``."""
    _check_dims(a, w.dim)
    p = np.trace(w.matrix @ a.projector(delta)).real
    return float(min(max(p, 0.0), 1.0))


def _representative(cell: Interval, a: Magnitude) -> float:
    if cell.is_singleton:
        return cell.lo
    inside = [v for v in a.values if cell.contains(v)]
    if len(inside) == 1:
        return inside[0]
    return cell.midpoint()


def _check_partition(a: Magnitude, partition: Sequence[Interval]) -> None:
    check_disjoint(partition)
    for v in a.values:
        if not any(cell.contains(v) for cell in partition):
            raise ValueError(f"partition does not cover eigenvalue {v} of {a.name}")


def outcome_distribution(w, a: Magnitude, partition: Sequence[Interval] | None = None) -> OutcomeDistribution:
    """Distribution of ``a``'s outcomes over ``partition`` (default: one cell per eigenvalue).

    ``w`` may be a :class:`DensityOperator` or a pure state vector.
    """
    partition = a.cells() if partition is None else list(partition)
    _check_partition(a, partition)
    if isinstance(w, DensityOperator):
        probs = [born_mixed(w, a, cell) for cell in partition]
    else:
        probs = [born_pure(w, a, cell) for cell in partition]
    return OutcomeDistribution(tuple((_representative(c, a), p) for c, p in zip(partition, probs)))


def eigenlink_properties(psi, a: Magnitude, partition: Sequence[Interval]) -> list[DeterminateProperty]:
    """Determinate properties ``<A, Delta>`` the state possesses by the Eigenlink.

    A cell ``Delta`` is returned exactly when ``P^A(Delta) psi == psi``
    within ``EIGENLINK_TOL``.
    """
    psi = as_state(psi)
    _check_dims(a, psi.size)
    partition = list(partition)
    check_disjoint(partition)
    found = []
    for delta in partition:
        if np.linalg.norm(a.projector(delta) @ psi - psi) <= EIGENLINK_TOL:
            found.append(DeterminateProperty(a, delta))
    return found


def specification_value(psi, a: Magnitude, tol: float = EIGENLINK_TOL) -> float | None:
    """Value ``f`` with ``A psi == f psi`` when ``psi`` is an eigenvector, else ``None``."""
    psi = as_state(psi)
    _check_dims(a, psi.size)
    props = eigenlink_properties(psi, a, a.cells())
    if not props:
        return None
    value = props[0].value_set.lo
    if np.linalg.norm(a.operator @ psi - value * psi) > max(tol, 1e-9 * max(1.0, abs(value))):
        return None
    return value


def collapse_pure(psi, a: Magnitude, delta: Interval) -> np.ndarray:
    """Projection postulate: ``P psi / |P psi|``."""
    psi = as_state(psi)
    prob = born_pure(psi, a, delta)
    if prob <= MIN_PROBABILITY:
        raise ImpossibleOutcomeError(f"outcome {delta} of {a.name} has probability {prob:.3g}")
    v = a.projector(delta) @ psi
    return as_state(v / np.linalg.norm(v))


def collapse_mixed(w: DensityOperator, a: Magnitude, delta: Interval) -> DensityOperator:
    """Lueders rule ``P W P / Tr(W P)``."""
    prob = born_mixed(w, a, delta)
    if prob <= MIN_PROBABILITY:
        raise ImpossibleOutcomeError(f"outcome {delta} of {a.name} has probability {prob:.3g}")
    p = a.projector(delta)
    post = p @ w.matrix @ p / prob
    # Strip rounding asymmetry before the invariant checks.
    post = 0.5 * (post + post.conj().T)
    return DensityOperator(post / np.trace(post).real)


def _as_magnitude(h, name: str = "H") -> Magnitude:
    if isinstance(h, Magnitude):
        return h
    return Magnitude.from_operator(name, h)


def propagator(h, t: float) -> np.ndarray:
    """``U(t) = exp(-i H t)`` computed through the spectral family of ``H``."""
    h = _as_magnitude(h)
    return h.spectrum.function(lambda lam: np.exp(-1j * lam * t))


def evolve(h, t: float, w: DensityOperator) -> DensityOperator:
    """Schroedinger evolution ``U(t) W U(t)^dagger``.

    ``h`` is a :class:`Magnitude` or a Hermitian matrix (rejected otherwise).
    """
    h = _as_magnitude(h)
    _check_dims(h, w.dim)
    u = propagator(h, t)
    m = u @ w.matrix @ adjoint(u)
    return DensityOperator(0.5 * (m + m.conj().T))


def evolve_state(h, t: float, psi) -> np.ndarray:
    h = _as_magnitude(h)
    psi = as_state(psi)
    _check_dims(h, psi.size)
    return as_state(propagator(h, t) @ psi, tol=1e-10)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _cell_probabilities(w: DensityOperator, a: Magnitude, partition: Sequence[Interval]) -> np.ndarray:
    _check_partition(a, partition)
    return np.array([born_mixed(w, a, cell) for cell in partition])


def _draw(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs)
    idx = np.searchsorted(cum, u * cum[-1], side="right")
    # u * total can round onto the last edge; fall back to the last live cell.
    last = int(np.flatnonzero(probs > 0)[-1])
    return np.minimum(idx, last)


def sample_outcome(w: DensityOperator, a: Magnitude, partition: Sequence[Interval], seed=0):
    """Draw one outcome cell with its Born probability and collapse onto it.

    ``seed`` is an int or a ``numpy.random.Generator``; a generator is
    advanced in place so successive calls continue one stream.

    Returns
    -------
    value : float
        Representative value of the drawn cell (its eigenvalue when the cell
        holds a single one, otherwise the midpoint).
    post : DensityOperator
        Lueders post-measurement state.
    """
    partition = list(partition)
    probs = _cell_probabilities(w, a, partition)
    rng = _rng(seed)
    k = int(_draw(probs, np.array([rng.random()]))[0])
    cell = partition[k]
    return _representative(cell, a), collapse_mixed(w, a, cell)


def sample_outcomes(w: DensityOperator, a: Magnitude, partition: Sequence[Interval], n: int, seed=0) -> np.ndarray:
    """``n`` independent outcome values; same stream as ``n`` calls to :func:`sample_outcome`."""
    partition = list(partition)
    probs = _cell_probabilities(w, a, partition)
    rng = _rng(seed)
    values = np.array([_representative(c, a) for c in partition])
    return values[_draw(probs, rng.random(n))]


def spin_half_magnitudes() -> tuple[Magnitude, Magnitude, Magnitude]:
    """Spin components ``(S_x, S_y, S_z)`` with eigenvalues +-1/2 (hbar = 1)."""
    return (
        Magnitude.from_operator("sigma_x", SPIN_X),
        Magnitude.from_operator("sigma_y", SPIN_Y),
        Magnitude.from_operator("sigma_z", SPIN_Z),
    )


__all__ = [
    "DensityOperator",
    "DeterminateProperty",
    "ImpossibleOutcomeError",
    "Magnitude",
    "OutcomeDistribution",
    "born_mixed",
    "born_pure",
    "collapse_mixed",
    "collapse_pure",
    "eigenlink_properties",
    "evolve",
    "evolve_state",
    "outcome_distribution",
    "propagator",
    "sample_outcome",
    "sample_outcomes",
    "specification_value",
    "spin_half_magnitudes",
]
