import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from measlab.linalg import (
    SPIN_X,
    SPIN_Z,
    Interval,
    basis_vector,
    ket_bra,
    random_density_matrix,
    random_hermitian,
    random_state,
    random_unitary,
    tensor,
)
from measlab.measurement import realistic_ready_state
from measlab.postulates import (
    DensityOperator,
    ImpossibleOutcomeError,
    Magnitude,
    OutcomeDistribution,
    born_mixed,
    born_pure,
    collapse_mixed,
    collapse_pure,
    eigenlink_properties,
    evolve,
    outcome_distribution,
    propagator,
    sample_outcome,
    sample_outcomes,
    specification_value,
    spin_half_magnitudes,
)

UP, DOWN = basis_vector(2, 0), basis_vector(2, 1)
SZ = Magnitude.from_operator("sigma_z", SPIN_Z)
SX = Magnitude.from_operator("sigma_x", SPIN_X)
PLUS_HALF, MINUS_HALF = Interval.point(0.5), Interval.point(-0.5)
seeds = st.integers(0, 2**32 - 1)


def random_magnitude(dim, rng, distinct=4):
    vals = rng.integers(-distinct, distinct + 1, size=dim).astype(float)
    u = random_unitary(dim, rng)
    return Magnitude.from_operator("A", u @ np.diag(vals) @ u.conj().T)


# -- states and magnitudes ---------------------------------------------------


def test_density_operator_validation():
    with pytest.raises(ValueError):
        DensityOperator(np.diag([0.5, 0.4]))
    with pytest.raises(ValueError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityOperator(np.array([[0.5, 0.5], [0.0, 0.5]]))
    w = DensityOperator.pure(UP)
    assert w.is_pure() and w.dim == 2


def test_mixture_and_purity():
    w = DensityOperator.mixture([0.5, 0.5], [UP, DOWN])
    assert np.allclose(w.matrix, np.eye(2) / 2)
    assert abs(w.purity() - 0.5) < 1e-15
    with pytest.raises(ValueError):
        DensityOperator.mixture([0.7, 0.7], [UP, DOWN])


def test_magnitude_rejects_mismatched_spectrum():
    fam = SZ.spectrum
    with pytest.raises(ValueError):
        Magnitude("bad", SPIN_X, fam)


def test_outcome_distribution_validation():
    with pytest.raises(ValueError):
        OutcomeDistribution(((0.0, 0.5), (0.0, 0.5)))
    with pytest.raises(ValueError):
        OutcomeDistribution(((0.0, 0.5), (1.0, 0.6)))


# -- Born rule ---------------------------------------------------------------


def test_born_pure_examples():
    assert born_pure(UP, SZ, PLUS_HALF) == 1.0
    alpha, beta = 0.6, 0.8j
    assert abs(born_pure(alpha * UP + beta * DOWN, SZ, PLUS_HALF) - 0.36) < 1e-12
    with pytest.raises(ValueError):
        born_pure(basis_vector(3, 0), SZ, PLUS_HALF)


@given(seeds)
def test_born_full_spectrum_is_one(seed):
    rng = np.random.default_rng(seed)
    psi = random_state(2, rng)
    assert abs(born_pure(psi, SZ, Interval.real_line()) - 1) < 1e-12


def test_born_mixed_examples():
    assert born_mixed(DensityOperator.pure(UP), SZ, PLUS_HALF) == 1.0
    pointer = Magnitude.from_operator("M", np.diag([5.0, 1.0, -1.0]))
    w = DensityOperator(np.diag([0.2, 0.5, 0.3]))
    for value, weight in zip((5.0, 1.0, -1.0), (0.2, 0.5, 0.3)):
        assert abs(born_mixed(w, pointer, Interval.point(value)) - weight) < 1e-15


def test_born_mixed_realistic_ready_state():
    pointer = Magnitude.from_operator("M", np.diag([5.0, 5.0, 5.0, 1.0, -1.0]))
    eps = 1e-3
    w = realistic_ready_state(pointer, 5.0, [(1 - eps) / 3] * 3, [eps / 2, eps / 2], eps)
    assert abs(born_mixed(w, pointer, Interval.point(5.0)) - (1 - eps)) < 1e-12


@given(seeds, st.integers(1, 6))
def test_pure_mixed_consistency(seed, dim):
    rng = np.random.default_rng(seed)
    a = random_magnitude(dim, rng)
    psi = random_state(dim, rng)
    w = DensityOperator.pure(psi)
    for cell in a.cells() + [Interval(-1.5, 1.5)]:
        assert abs(born_mixed(w, a, cell) - born_pure(psi, a, cell)) < 1e-12


@given(seeds, st.integers(1, 6))
def test_normalization_over_partition(seed, dim):
    rng = np.random.default_rng(seed)
    a = random_magnitude(dim, rng)
    w = DensityOperator(random_density_matrix(dim, rng))
    assert abs(sum(outcome_distribution(w, a).probabilities) - 1) < 1e-10
    coarse = [Interval(-10, -0.5), Interval(0, 10)]
    assert abs(sum(born_mixed(w, a, c) for c in coarse) - 1) < 1e-10


@given(seeds, st.floats(0, 2 * math.pi))
def test_phase_invariance(seed, phase):
    rng = np.random.default_rng(seed)
    a = random_magnitude(3, rng)
    psi = random_state(3, rng)
    phased = np.exp(1j * phase) * psi
    for cell in a.cells():
        assert abs(born_pure(psi, a, cell) - born_pure(phased, a, cell)) < 1e-12
    assert len(eigenlink_properties(psi, a, a.cells())) == len(eigenlink_properties(phased, a, a.cells()))
    w1, w2 = DensityOperator.pure(psi), DensityOperator.pure(phased)
    assert np.array_equal(sample_outcomes(w1, a, a.cells(), 50, seed=1), sample_outcomes(w2, a, a.cells(), 50, seed=1))


def test_outcome_distribution_rejects_gapped_partition():
    with pytest.raises(ValueError):
        outcome_distribution(UP, SZ, [PLUS_HALF])


# -- Eigenlink ---------------------------------------------------------------


def test_eigenlink_examples():
    props = eigenlink_properties(UP, SZ, SZ.cells())
    assert [(p.magnitude.name, p.value_set) for p in props] == [("sigma_z", PLUS_HALF)]
    props = eigenlink_properties(UP, SZ, [Interval(0, 1), Interval(-1, -0.1)])
    assert [p.value_set for p in props] == [Interval(0, 1)]
    assert eigenlink_properties((UP + DOWN) / math.sqrt(2), SZ, SZ.cells()) == []


def test_eigenlink_entangled_state_on_pointer_factor():
    m = np.diag([5.0, 1.0, -1.0])
    plus, minus = basis_vector(3, 1), basis_vector(3, 2)
    psi = (tensor(UP, plus) + tensor(DOWN, minus)) / math.sqrt(2)
    one_m = Magnitude.from_operator("1xM", tensor(np.eye(2), m))
    assert eigenlink_properties(psi, one_m, one_m.cells()) == []
    # sigma_z x M has the degenerate eigenvalue 1/2 = (+1/2)(+1) = (-1/2)(-1),
    # so the entangled state lies inside one of its eigenspaces.
    joint = Magnitude.from_operator("sigma_z x M", tensor(SPIN_Z, m))
    props = eigenlink_properties(psi, joint, joint.cells())
    assert [p.value_set for p in props] == [Interval.point(0.5)]


@given(seeds)
def test_possession_implies_certainty(seed):
    rng = np.random.default_rng(seed)
    a = random_magnitude(4, rng, distinct=1)
    # Draw the state from one eigenspace half of the time.
    if seed % 2:
        p = a.spectrum.projectors[0]
        psi = p @ random_state(4, rng)
        psi = psi / np.linalg.norm(psi)
    else:
        psi = random_state(4, rng)
    for prop in eigenlink_properties(psi, a, a.cells()):
        assert abs(born_pure(psi, a, prop.value_set) - 1) < 1e-10
    for cell in a.cells():
        if abs(born_pure(psi, a, cell) - 1) < 1e-12:
            assert eigenlink_properties(psi, a, [cell])


def test_specification_value():
    assert specification_value(UP, SZ) == 0.5
    assert specification_value((UP + DOWN) / math.sqrt(2), SZ) is None


# -- collapse ----------------------------------------------------------------


def test_collapse_pure_examples():
    assert np.allclose(collapse_pure(UP, SZ, PLUS_HALF), UP)
    assert np.allclose(collapse_pure((UP + DOWN) / math.sqrt(2), SZ, PLUS_HALF), UP)
    with pytest.raises(ImpossibleOutcomeError):
        collapse_pure(UP, SZ, MINUS_HALF)


def test_collapse_mixed_examples():
    w = DensityOperator.pure(UP)
    assert np.allclose(collapse_mixed(w, SZ, PLUS_HALF).matrix, w.matrix)
    half = DensityOperator(np.eye(2) / 2)
    assert np.allclose(collapse_mixed(half, SZ, PLUS_HALF).matrix, ket_bra(UP))
    with pytest.raises(ImpossibleOutcomeError):
        collapse_mixed(w, SZ, MINUS_HALF)


@given(seeds)
def test_collapse_mixed_matches_componentwise_oracle(seed):
    rng = np.random.default_rng(seed)
    a = random_magnitude(4, rng, distinct=1)
    w = DensityOperator(random_density_matrix(4, rng))
    cell = a.cells()[0]
    # Spectral expansion of W, collapse each pure component, reweight.
    lam, vecs = np.linalg.eigh(w.matrix)
    terms, weights = [], []
    for k in range(4):
        p_k = born_pure(vecs[:, k], a, cell)
        if lam[k] > 1e-14 and p_k > 1e-14:
            terms.append(ket_bra(collapse_pure(vecs[:, k], a, cell)))
            weights.append(lam[k] * p_k)
    oracle = sum(wt * t for wt, t in zip(weights, terms)) / sum(weights)
    assert np.allclose(collapse_mixed(w, a, cell).matrix, oracle, atol=1e-10)


@given(seeds)
def test_collapse_idempotent(seed):
    rng = np.random.default_rng(seed)
    a = random_magnitude(3, rng, distinct=1)
    w = DensityOperator(random_density_matrix(3, rng))
    cell = a.cells()[-1]
    once = collapse_mixed(w, a, cell)
    assert np.allclose(collapse_mixed(once, a, cell).matrix, once.matrix, atol=1e-12)


# -- evolution ---------------------------------------------------------------


def test_evolve_identity_time(rng):
    w = DensityOperator(random_density_matrix(3, rng))
    assert np.allclose(evolve(random_hermitian(3, rng), 0.0, w).matrix, w.matrix, atol=1e-14)


@pytest.mark.parametrize("t", [0.3, 1.0, 7.5])
def test_stationary_eigenstate(t):
    w = DensityOperator.pure(UP)
    assert np.allclose(evolve(SZ, t, w).matrix, w.matrix, atol=1e-14)


@pytest.mark.parametrize("t", [0.0, 0.4, 1.3, math.pi, 5.0])
def test_rabi_closed_form(t):
    # Eigenvalues of S_x differ by 1, so P_up(t) = cos^2(t / 2).
    w = evolve(SX, t, DensityOperator.pure(UP))
    assert abs(born_mixed(w, SZ, PLUS_HALF) - math.cos(t / 2) ** 2) < 1e-12


def test_evolve_rejects_non_hermitian():
    with pytest.raises(ValueError):
        evolve(np.array([[0, 1], [0, 0]]), 1.0, DensityOperator.pure(UP))


@given(seeds, st.floats(-20, 20))
def test_evolution_preserves_trace_and_spectrum(seed, t):
    rng = np.random.default_rng(seed)
    w = DensityOperator(random_density_matrix(4, rng))
    out = evolve(random_hermitian(4, rng), t, w)
    assert abs(np.trace(out.matrix) - 1) < 1e-10
    assert np.allclose(np.linalg.eigvalsh(out.matrix), np.linalg.eigvalsh(w.matrix), atol=1e-10)


def test_propagator_group_law(rng):
    h = random_hermitian(3, rng)
    assert np.allclose(propagator(h, 0.3) @ propagator(h, 0.5), propagator(h, 0.8), atol=1e-12)


# -- sampling ----------------------------------------------------------------


def test_sample_eigenstate():
    w = DensityOperator.pure(UP)
    for seed in range(20):
        value, post = sample_outcome(w, SZ, SZ.cells(), seed=seed)
        assert value == 0.5
        assert np.allclose(post.matrix, w.matrix)


def test_sample_never_draws_zero_probability_cells():
    pointer = Magnitude.from_operator("M", np.diag([5.0, 1.0, -1.0]))
    w = DensityOperator(np.diag([0.0, 1.0, 0.0]))
    assert set(sample_outcomes(w, pointer, pointer.cells(), 1000, seed=3)) == {1.0}


def test_sample_frequency_binomial_bound():
    n = 100_000
    w = DensityOperator.pure((UP + DOWN) / math.sqrt(2))
    draws = sample_outcomes(w, SZ, SZ.cells(), n, seed=2024)
    freq = np.mean(draws == 0.5)
    assert abs(freq - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_sampling_is_deterministic():
    w = DensityOperator.pure((UP + DOWN) / math.sqrt(2))
    a = sample_outcomes(w, SZ, SZ.cells(), 500, seed=9)
    assert np.array_equal(a, sample_outcomes(w, SZ, SZ.cells(), 500, seed=9))
    rng = np.random.default_rng(9)
    singles = [sample_outcome(w, SZ, SZ.cells(), seed=rng)[0] for _ in range(500)]
    assert np.array_equal(a, singles)


def test_spin_half_magnitudes():
    for mag in spin_half_magnitudes():
        assert mag.values == (-0.5, 0.5)
