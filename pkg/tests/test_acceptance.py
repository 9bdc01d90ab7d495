"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a ``PASS``/``FAIL`` line; ``conftest.py`` prints them in
the terminal summary, and running this file directly prints them too.
"""

import math

import numpy as np

from measlab.linalg import (
    SPIN_X,
    SPIN_Z,
    Interval,
    basis_vector,
    complete_to_unitary,
    eig_hermitian,
    random_density_matrix,
    random_hermitian,
    random_state,
    random_unitary,
)
from measlab.measurement import check_probability_reproducibility
from measlab.postulates import DensityOperator, Magnitude, born_pure, outcome_distribution, sample_outcomes
from measlab.problems import (
    admissible_pointer_states,
    expectation_independence,
    no_signalling_check,
    random_stein_instance,
    run_positive_control,
    run_probability_problem,
    run_reality_problem,
    singlet,
    stern_gerlach,
    verify_stein_lemma,
)

RESULTS = []
UP, DOWN = basis_vector(2, 0), basis_vector(2, 1)
SZ = Magnitude.from_operator("sigma_z", SPIN_Z)
SX = Magnitude.from_operator("sigma_x", SPIN_X)


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def random_amplitudes(rng, min_product=0.0):
    while True:
        v = random_state(2, rng)
        if abs(v[0] * v[1]) > min_product:
            return complex(v[0]), complex(v[1])


def test_criterion_01_stern_gerlach_probabilities():
    half = born_pure(np.array([1, 1]) / math.sqrt(2), SZ, Interval.point(0.5))
    uneven = born_pure(np.array([math.sqrt(0.9), math.sqrt(0.1)]), SZ, Interval.point(0.5))
    err = max(abs(half - 0.5), abs(uneven - 0.9))
    record(1, "Born probabilities 0.5 and 0.9", err <= 1e-12, f"max error {err:.2e}")


def test_criterion_02_reality_problem():
    rng = np.random.default_rng(2)
    state_err, missed = 0.0, 0
    for _ in range(100):
        alpha, beta = random_amplitudes(rng, 1e-6)
        rep = run_reality_problem(alpha, beta)
        state_err = max(state_err, rep.computed["final_state_residual"])
        missed += not rep.contradiction_flag
    false_alarms = sum(run_reality_problem(a, b).contradiction_flag for a, b in ((1, 0), (0, 1)))
    ok = state_err <= 1e-12 and missed == 0 and false_alarms == 0
    detail = f"final-state error {state_err:.2e}, unflagged superpositions {missed}/100, flagged eigenstates {false_alarms}/2"
    record(2, "Reality Problem flags every superposition", ok, detail)


def test_criterion_03_probability_independence():
    rng = np.random.default_rng(3)
    w = (0.2, 0.5, 0.3)
    dists = [
        run_probability_problem(*random_amplitudes(rng), w).computed["pointer_distribution"] for _ in range(10)
    ]
    spread = max(a.total_variation(b) for a in dists for b in dists)
    ready = run_probability_problem(1, 0, w).computed["ready_distribution"]
    off = max(d.total_variation(ready) for d in dists)
    ok = spread <= 1e-12 and off <= 1e-12
    record(3, "pointer distribution independent of (alpha, beta) and equal to w", ok, f"pairwise TV {spread:.3g}, TV to w {off:.3g}")


def test_criterion_04_reproducibility_clash():
    rng = np.random.default_rng(4)
    w = (0.2, 0.5, 0.3)
    scheme = stern_gerlach().scheme
    ready = DensityOperator(np.diag(w).astype(complex))
    err = 0.0
    for _ in range(10):
        alpha, beta = random_amplitudes(rng)
        rep = check_probability_reproducibility(scheme, DensityOperator.pure(alpha * UP + beta * DOWN), ready)
        err = max(err, abs(rep.max_deviation - abs(w[1] - abs(alpha) ** 2)))
    record(4, "reproducibility deviation equals |w1 - |alpha|^2|", err <= 1e-12, f"max mismatch {err:.3g}")


def test_criterion_05_positive_control():
    rng = np.random.default_rng(5)
    states = [DensityOperator(random_density_matrix(2, rng)) for _ in range(50)]
    worst = run_positive_control(states).computed["max_deviation"]
    record(5, "pure ready state reproduces Born statistics for 50 mixtures", worst <= 1e-12, f"max deviation {worst:.2e}")


def test_criterion_06_stein_lemma():
    rng = np.random.default_rng(6)
    fact = indep = 0.0
    dims = [(1 + k % 8, 1 + (3 * k) % 8) for k in range(24)] + [(8, 8)]
    for d1, d2 in dims:
        inst = random_stein_instance(d1, d2, rng, n_alternatives=10)
        rep = verify_stein_lemma(inst.p, inst.q, inst.w, inst.alternatives)
        fact = max(fact, rep.factorization_residual)
        indep = max(indep, rep.independence_residual)
    ok = fact <= 1e-10 and indep <= 1e-10
    record(6, "Stein factorisation on 25 instances up to 8x8", ok, f"factorisation {fact:.2e}, independence {indep:.2e}")


def test_criterion_07_expectation_independence():
    rng = np.random.default_rng(7)
    spread = 0.0
    checked = 0
    for extra in ((5.0, 3.0), (5.0, 5.0, 2.0), (3.0,), (5.0, 1.0, -1.0, 7.0)):
        scheme = stern_gerlach(extra_levels=extra).scheme
        found = admissible_pointer_states(scheme)
        for _ in range(5):
            weights = rng.dirichlet(np.ones(len(found)))
            ready = DensityOperator.mixture(list(weights), [v for _, v in found])
            states = [np.outer(UP, UP), np.outer(DOWN, DOWN)]
            rep = expectation_independence(scheme, ready, states)
            spread = max(spread, rep.spread, max(abs(e - rep.trace_t) for e in rep.expectations))
            checked += 1
    record(7, "<1xM> independent of the spin eigenstate", spread <= 1e-10, f"{checked} mixed ready states, max spread {spread:.2e}")


def test_criterion_08_sampling():
    n = 100_000
    w = DensityOperator.pure(np.array([1, 1]) / math.sqrt(2))
    draws = sample_outcomes(w, SZ, SZ.cells(), n, seed=8)
    freq = float(np.mean(draws == 0.5))
    bound = 3 * math.sqrt(0.25 / n)
    same = np.array_equal(draws, sample_outcomes(w, SZ, SZ.cells(), n, seed=8))
    ok = abs(freq - 0.5) <= bound and same
    record(8, "seeded sampling frequency and determinism", ok, f"|f - 0.5| = {abs(freq - 0.5):.2e} <= {bound:.2e}, repeatable {same}")


def test_criterion_09_kernel_invariants():
    rng = np.random.default_rng(9)
    unit = 0.0
    for dim in (2, 3, 5, 8, 13, 16, 24, 32, 48, 64):
        k = int(rng.integers(1, dim + 1))
        ins, outs = random_unitary(dim, rng)[:, :k], random_unitary(dim, rng)[:, :k]
        u = complete_to_unitary(zip(ins.T, outs.T))
        unit = max(unit, float(np.max(np.abs(u.conj().T @ u - np.eye(dim)))))
    recon = 0.0
    for dim in (1, 2, 4, 8, 16, 32):
        a = random_hermitian(dim, rng)
        recon = max(recon, float(np.max(np.abs(eig_hermitian(a).reconstruct() - a))))
    norm = 0.0
    for _ in range(1000):
        dim = int(rng.integers(1, 7))
        vals = rng.integers(-3, 4, size=dim).astype(float)
        v = random_unitary(dim, rng)
        a = Magnitude.from_operator("A", v @ np.diag(vals) @ v.conj().T)
        dist = outcome_distribution(random_state(dim, rng), a)
        norm = max(norm, abs(sum(dist.probabilities) - 1))
    ok = unit <= 1e-12 and recon <= 1e-9 and norm <= 1e-10
    record(9, "kernel invariants", ok, f"unitarity {unit:.2e}, reconstruction {recon:.2e}, normalisation {norm:.2e}")


def test_criterion_10_no_signalling():
    rep = no_signalling_check(singlet(), SZ, [SZ, SX])
    err = max(abs(p - 0.5) for m in rep.marginals for p in m.probabilities)
    ok = rep.max_deviation <= 1e-12 and err <= 1e-12
    record(10, "singlet marginals equal (0.5, 0.5) for both settings", ok, f"setting deviation {rep.max_deviation:.2e}, offset {err:.2e}")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
