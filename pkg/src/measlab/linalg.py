"""Dense complex linear algebra over finite-dimensional Hilbert spaces.

Operators, projectors, unitaries and density operators are all plain
``numpy`` arrays of dtype ``complex128``. State vectors are 1-D arrays of unit
norm. Everything returned from this module is marked read-only so values can
be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
ORTHONORMAL_TOL = 1e-10
STATE_NORM_TOL = 1e-12
DEGENERACY_RTOL = 1e-9
# Membership slack when matching floating eigenvalues against interval endpoints.
INTERVAL_ATOL = 1e-9
# Minimum residual norm for a standard basis vector to join a complement basis.
_GS_ACCEPT = 1e-6


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a read-only 2-D complex array, rejecting NaN/Inf."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or 0 in m.shape:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return _frozen(m)


def as_state(v, tol: float = STATE_NORM_TOL) -> np.ndarray:
    """Return ``v`` as a read-only unit vector; raise if its norm is not 1."""
    psi = np.array(v, dtype=complex).reshape(-1)
    if psi.size == 0 or not np.all(np.isfinite(psi)):
        raise ValueError("state vector must be non-empty and finite")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state vector norm is {norm!r}, expected 1 within {tol}")
    return _frozen(psi)


def normalize(v) -> np.ndarray:
    psi = np.array(v, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return _frozen(psi / norm)


def basis_vector(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return _frozen(e)


def identity(dim: int) -> np.ndarray:
    return _frozen(np.eye(dim, dtype=complex))


def ket_bra(v, w=None) -> np.ndarray:
    """Outer product ``|v><w|``; ``|v><v|`` when ``w`` is omitted."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    w = v if w is None else np.asarray(w, dtype=complex).reshape(-1)
    return _frozen(np.outer(v, w.conj()))


def _square(a: np.ndarray, name: str = "matrix") -> None:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")


# ---------------------------------------------------------------------------
# Elementary operations


def tensor(a, b, *rest) -> np.ndarray:
    """Kronecker product of two or more matrices (or vectors)."""
    return _frozen(reduce(np.kron, (np.asarray(x, dtype=complex) for x in (a, b, *rest))))


def adjoint(a) -> np.ndarray:
    return _frozen(np.asarray(a, dtype=complex).conj().T.copy())


def trace(a) -> complex:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError("trace needs a 2-D array")
    _square(a)
    return complex(np.trace(a))


def commutator(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _square(a, "first operand")
    _square(b, "second operand")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return _frozen(a @ b - b @ a)


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and float(np.max(np.abs(a - a.conj().T))) <= tol


def is_unitary(u, tol: float = HERMITIAN_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return unitarity_defect(u) <= tol


def unitarity_defect(u) -> float:
    """Largest entry of ``|U^dagger U - 1|``."""
    u = np.asarray(u, dtype=complex)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def partial_trace(a, dims: Sequence[int], keep: int) -> np.ndarray:
    """Trace out every tensor factor except ``keep`` from an operator on ``prod(dims)``."""
    a = np.asarray(a, dtype=complex)
    n = len(dims)
    t = a.reshape(tuple(dims) * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for k in range(n):
        if k != keep:
            cols[k] = rows[k]
    subs = "".join(rows) + "".join(cols) + "->" + rows[keep] + cols[keep]
    return _frozen(np.einsum(subs, t))


# ---------------------------------------------------------------------------
# Intervals and spectral families


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lo, hi]``; a singleton when ``lo == hi``.

    Endpoints may be infinite. Membership tests accept an absolute slack so
    that floating eigenvalues match the exact values they stand for.
    """

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def real_line(cls) -> "Interval":
        return cls(-math.inf, math.inf)

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: float, atol: float = INTERVAL_ATOL) -> bool:
        return self.lo - atol <= x <= self.hi + atol

    def overlaps(self, other: "Interval") -> bool:
        return max(self.lo, other.lo) <= min(self.hi, other.hi)

    def midpoint(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            raise ValueError("unbounded interval has no midpoint")
        return 0.5 * (self.lo + self.hi)

    def __str__(self) -> str:
        if self.is_singleton:
            return f"{{{self.lo:g}}}"
        return f"[{self.lo:g}, {self.hi:g}]"


def check_disjoint(intervals: Sequence[Interval]) -> None:
    for i, a in enumerate(intervals):
        for b in intervals[i + 1 :]:
            if a.overlaps(b):
                raise ValueError(f"intervals {a} and {b} overlap")


@dataclass(frozen=True, eq=False)
class SpectralFamily:
    """Eigenvalues (strictly increasing) paired with their eigenprojectors."""

    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        vals = tuple(float(x) for x in self.eigenvalues)
        projs = tuple(as_matrix(p, "projector") for p in self.projectors)
        if not vals or len(vals) != len(projs):
            raise ValueError("need one projector per eigenvalue")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("eigenvalues must be strictly increasing")
        n = projs[0].shape[0]
        for p in projs:
            if p.shape != (n, n):
                raise ValueError("projectors must share one square shape")
            if not is_hermitian(p) or np.max(np.abs(p @ p - p)) > HERMITIAN_TOL:
                raise ValueError("spectral projectors must be Hermitian and idempotent")
        stack = np.stack(projs)
        if np.max(np.abs(stack.sum(axis=0) - np.eye(n))) > HERMITIAN_TOL:
            raise ValueError("spectral projectors must sum to the identity")
        for i in range(len(projs) - 1):
            cross = np.einsum("ij,kjl->kil", projs[i], stack[i + 1 :])
            if np.max(np.abs(cross)) > HERMITIAN_TOL:
                raise ValueError("spectral projectors must be mutually orthogonal")
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "projectors", projs)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def __iter__(self):
        return iter(zip(self.eigenvalues, self.projectors))

    def multiplicities(self) -> tuple[int, ...]:
        return tuple(int(round(trace(p).real)) for p in self.projectors)

    def reconstruct(self) -> np.ndarray:
        return _frozen(sum(lam * p for lam, p in self))

    def function(self, f) -> np.ndarray:
        """Apply a scalar function through the spectral calculus: ``sum f(l) P_l``."""
        return _frozen(sum(complex(f(lam)) * p for lam, p in self))


def eig_hermitian(a, degeneracy_tol: float | None = None) -> SpectralFamily:
    """Decompose a Hermitian matrix into its spectral family.

    Parameters
    ----------
    a : array_like
        Square matrix, Hermitian within ``HERMITIAN_TOL``.
    degeneracy_tol : float, optional
        Eigenvalues closer than this (chained, after sorting) share one
        eigenspace. Defaults to ``1e-9`` times the largest absolute
        eigenvalue, or ``1e-9`` for the zero matrix.

    Returns
    -------
    SpectralFamily
        Eigenvalue clusters (mean value) with orthogonal projectors.
    """
    a = as_matrix(a)
    _square(a)
    if not is_hermitian(a):
        raise ValueError("eig_hermitian requires a Hermitian matrix")
    h = 0.5 * (a + a.conj().T)
    vals, vecs = np.linalg.eigh(h)
    if degeneracy_tol is None:
        scale = float(np.max(np.abs(vals)))
        degeneracy_tol = DEGENERACY_RTOL * scale if scale > 0 else DEGENERACY_RTOL
    groups: list[list[int]] = [[0]]
    for k in range(1, len(vals)):
        if vals[k] - vals[k - 1] <= degeneracy_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    eigenvalues = []
    projectors = []
    for g in groups:
        v = vecs[:, g]
        eigenvalues.append(float(np.mean(vals[g])))
        projectors.append(v @ v.conj().T)
    return SpectralFamily(tuple(eigenvalues), tuple(projectors))


def spectral_projector(fam: SpectralFamily, interval: Interval, atol: float = INTERVAL_ATOL) -> np.ndarray:
    """Sum of the projectors whose eigenvalue lies in ``interval``."""
    out = np.zeros((fam.dim, fam.dim), dtype=complex)
    for lam, p in fam:
        if interval.contains(lam, atol):
            out = out + p
    return _frozen(out)


def eigenspace_basis(projector, tol: float = _GS_ACCEPT) -> np.ndarray:
    """Canonical orthonormal basis (as columns) of a projector's range.

    Gram-Schmidt over the projector's columns ``P e_0, P e_1, ...`` in index
    order, so a diagonal projector yields standard basis vectors.
    """
    p = np.asarray(projector, dtype=complex)
    basis: list[np.ndarray] = []
    rank = int(round(trace(p).real))
    for j in range(p.shape[0]):
        if len(basis) == rank:
            break
        r = _orthogonalize(p[:, j], basis)
        nr = np.linalg.norm(r)
        if nr > tol:
            basis.append(r / nr)
    if len(basis) != rank:
        raise ValueError("could not extract an eigenspace basis")
    return _frozen(np.array(basis).T.reshape(p.shape[0], rank))


# ---------------------------------------------------------------------------
# Unitary completion


def _orthogonalize(v: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    # Modified Gram-Schmidt, run twice for stability.
    r = np.array(v, dtype=complex)
    for _ in range(2):
        for b in basis:
            r = r - np.vdot(b, r) * b
    return r


def orthonormal_complement(vectors: Sequence[np.ndarray], dim: int) -> list[np.ndarray]:
    """Complete ``vectors`` to a basis by Gram-Schmidt over ``e_0, e_1, ...`` in order."""
    basis = [np.asarray(v, dtype=complex) for v in vectors]
    extra: list[np.ndarray] = []
    for i in range(dim):
        if len(basis) + len(extra) == dim:
            break
        r = _orthogonalize(basis_vector(dim, i), basis + extra)
        nr = np.linalg.norm(r)
        if nr > _GS_ACCEPT:
            extra.append(r / nr)
    if len(basis) + len(extra) != dim:
        raise ValueError("failed to complete an orthonormal basis")
    return extra


def _check_orthonormal(vectors: Sequence[np.ndarray], what: str, tol: float) -> None:
    m = np.array(vectors).T
    gram = m.conj().T @ m
    err = float(np.max(np.abs(gram - np.eye(len(vectors)))))
    if err > tol:
        raise ValueError(f"{what} are not orthonormal (Gram defect {err:.3g})")


def complete_to_unitary(
    pairs: Iterable[tuple[np.ndarray, np.ndarray]], tol: float = ORTHONORMAL_TOL
) -> np.ndarray:
    """Build a unitary ``U`` with ``U @ x == y`` for every ``(x, y)`` pair.

    The inputs and the outputs must each be orthonormal families. The rest
    of ``U`` is fixed canonically: both families are completed by
    Gram-Schmidt over the standard basis in index order and the two
    complements are matched up in order. Identical inputs therefore give
    bit-identical results.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (input, output) pair")
    ins = [np.asarray(x, dtype=complex).reshape(-1) for x, _ in pairs]
    outs = [np.asarray(y, dtype=complex).reshape(-1) for _, y in pairs]
    dim = ins[0].size
    if any(v.size != dim for v in ins + outs):
        raise ValueError("all vectors must have the same dimension")
    if len(ins) > dim:
        raise ValueError("more pairs than dimensions")
    _check_orthonormal(ins, "input vectors", tol)
    _check_orthonormal(outs, "output vectors", tol)
    ins_full = np.array(ins + orthonormal_complement(ins, dim)).T
    outs_full = np.array(outs + orthonormal_complement(outs, dim)).T
    return _frozen(outs_full @ ins_full.conj().T)


# ---------------------------------------------------------------------------
# Random sampling helpers (tests, scenario generators)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return _frozen(q * (d / np.abs(d)))


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return normalize(z)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return _frozen(0.5 * (z + z.conj().T))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    z = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = z @ z.conj().T
    return _frozen(rho / np.trace(rho).real)


def random_projector(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    v = random_unitary(dim, rng)[:, :rank]
    return _frozen(v @ v.conj().T)


# Pauli matrices (unit entries) and spin-1/2 operators in units hbar = 1.
PAULI_X = _frozen(np.array([[0, 1], [1, 0]], dtype=complex))
PAULI_Y = _frozen(np.array([[0, -1j], [1j, 0]], dtype=complex))
PAULI_Z = _frozen(np.array([[1, 0], [0, -1]], dtype=complex))
SPIN_X = _frozen(0.5 * PAULI_X)
SPIN_Y = _frozen(0.5 * PAULI_Y)
SPIN_Z = _frozen(0.5 * PAULI_Z)
