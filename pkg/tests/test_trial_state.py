from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_pauli_terms
from varqa import fixtures
from varqa.errors import EmptyDistribution, ShapeError
from varqa.hamiltonian import PauliHamiltonian, exact_diagonalize
from varqa.sampler import (
    EXACT_GIBBS,
    INFINITE,
    IsingAnsatz,
    SampleDistribution,
    SamplerConfig,
    gibbs_distribution,
    sample,
)
from varqa.trial_state import (
    SignPattern,
    TrialState,
    _exhaustive,
    _greedy,
    batch_sign_energies,
    build_trial_state,
    coupling_labels,
    expected_energy,
    format_trial_state,
    optimize_sign_arrays,
    optimize_signs,
    parse_trial_state,
    transition_element,
)

ED_195 = exact_diagonalize(fixtures.load("h2", 1.95)).ground_energy


def real_hamiltonian(rng, M, n_terms=12):
    terms = [(c, w) for c, w in random_pauli_terms(rng, M, n_terms) if w.count("Y") % 2 == 0]
    return PauliHamiltonian(M, tuple(terms) or ((1.0, "Z" * M),))


def random_signs(rng, bitstrings):
    return SignPattern({b: int(s) for b, s in zip(bitstrings, rng.choice([-1, 1], size=len(bitstrings)))})


# ---- construction ---------------------------------------------------------------

def test_amplitudes_are_square_roots_of_ratios():
    dist = SampleDistribution(4, {"0101": 640, "1010": 360}, 1000)
    psi = build_trial_state(dist, SignPattern({"0101": 1, "1010": -1}))
    assert psi.amplitude("0101") == pytest.approx(0.8)
    assert psi.amplitude("1010") == pytest.approx(-0.6)


def test_point_mass_is_basis_state():
    psi = build_trial_state(SampleDistribution(3, {"110": 1000}, 1000))
    assert psi.support == [("110", 1.0)]


def test_uniform_two_state_support():
    th = IsingAnsatz(1, [0.0], [])
    psi = build_trial_state(gibbs_distribution(th, 1.0), SignPattern.all_plus(["0", "1"]))
    assert np.allclose(psi.amplitudes, [2 ** -0.5, 2 ** -0.5])


def test_empty_distribution():
    with pytest.raises(EmptyDistribution):
        build_trial_state({})
    with pytest.raises(EmptyDistribution):
        build_trial_state({"01": 0.1, "10": 0.9}, floor=0.95)


def test_floor_drops_rare_outcomes():
    psi = build_trial_state({"00": 0.001, "01": 0.499, "10": 0.5}, floor=0.01)
    assert [b for b, _ in psi.support] == ["01", "10"]
    assert np.sum(psi.amplitudes**2) == pytest.approx(1.0)


def test_trial_state_invariants():
    with pytest.raises(ValueError):
        TrialState(2, [0, 1], [1.0, 1.0])
    with pytest.raises(ValueError):
        TrialState(2, [1, 1], [0.6, 0.8])
    psi = TrialState(2, [3, 0], [-0.8, 0.6])
    assert psi.support == [("00", -0.6), ("11", 0.8)]


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.sampled_from([format(i, "04b") for i in range(16)]),
                       st.integers(1, 10**6), min_size=1))
def test_normalization_for_any_counts(counts):
    S = sum(counts.values())
    psi = build_trial_state(SampleDistribution(4, counts, S))
    assert abs(np.sum(psi.amplitudes**2) - 1) < 1e-10
    assert psi.amplitudes[np.argmax(np.abs(psi.amplitudes))] > 0


def test_serialization_round_trip():
    psi = TrialState(4, [5, 10], [-0.5220, np.sqrt(1 - 0.5220**2)])
    text = format_trial_state(psi)
    assert text.splitlines()[0].startswith("0101 -0.522")
    again = parse_trial_state(text)
    assert np.array_equal(again.amplitudes, psi.amplitudes)


# ---- transition elements and energies -----------------------------------------------

def test_module_transition_element():
    assert transition_element("01", "10", PauliHamiltonian(2, ((1.0, "XX"),))) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_transition_elements_match_dense(seed):
    rng = np.random.default_rng(seed)
    h = real_hamiltonian(rng, 4, 20)
    dense = h.to_dense()
    for m, n in itertools.product(range(16), repeat=2):
        assert h.transition_element(m, n) == pytest.approx(dense[m, n], abs=1e-12)


def test_cancelling_energy():
    h = PauliHamiltonian(1, ((1.0, "Z"),))
    psi = build_trial_state({"0": 0.5, "1": 0.5})
    assert expected_energy(psi, h) == pytest.approx(0.0, abs=1e-15)


def test_ed_state_gives_ed_energy():
    h = fixtures.load("h2", 1.95)
    v = exact_diagonalize(h).ground_state
    idx = np.flatnonzero(np.abs(v) > 1e-12)
    psi = TrialState(4, idx, v[idx] / np.linalg.norm(v[idx]))
    assert expected_energy(psi, h) == pytest.approx(ED_195, abs=1e-9)


def test_energy_qubit_mismatch():
    with pytest.raises(ShapeError):
        expected_energy(build_trial_state({"0": 1.0}), fixtures.load("h2", 1.0))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), M=st.integers(1, 5))
def test_energy_matches_dense_oracle(seed, M):
    rng = np.random.default_rng(seed)
    h = real_hamiltonian(rng, M)
    k = int(rng.integers(1, 2**M + 1))
    idx = np.sort(rng.choice(2**M, size=k, replace=False))
    a = rng.normal(size=k)
    psi = TrialState(M, idx, a / np.linalg.norm(a))
    v = psi.to_dense()
    assert expected_energy(psi, h) == pytest.approx(v @ h.to_dense() @ v, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_global_sign_flip_is_invisible(seed):
    rng = np.random.default_rng(seed)
    h = fixtures.load("heh+", 1.0)
    idx = np.sort(rng.choice(16, size=5, replace=False))
    a = rng.normal(size=5)
    a /= np.linalg.norm(a)
    assert expected_energy(TrialState(4, idx, a), h) == pytest.approx(
        expected_energy(TrialState(4, idx, -a), h), abs=1e-14)


def test_variational_bound_random_trials():
    rng = np.random.default_rng(0)
    cases = [(fixtures.load("h2", d), None) for d in (0.5, 1.2)] + [(fixtures.load("heh+", 0.9), None)]
    for h, _ in cases:
        e0 = exact_diagonalize(h).ground_energy
        for _ in range(400):
            th = IsingAnsatz.from_vector(rng.normal(size=11))
            dist = sample(th, SamplerConfig(backend=EXACT_GIBBS, shots=1000, beta=float(rng.uniform(0.2, 3))))
            bits = list(dist.counts)
            psi = build_trial_state(dist, random_signs(rng, bits))
            assert expected_energy(psi, h) >= e0 - 1e-9


# ---- sign optimization --------------------------------------------------------------

def test_single_state_has_no_freedom():
    h = fixtures.load("h2", 0.735)
    pattern, e = optimize_signs({"1010": 1.0}, h)
    assert pattern.epsilon == {"1010": 1}
    assert e == pytest.approx(h.transition_element("1010", "1010"))


def test_h2_dissociation_needs_opposite_signs():
    h = fixtures.load("h2", 1.95)
    v = exact_diagonalize(h).ground_state
    dist = {"1010": v[10] ** 2, "0101": v[5] ** 2}
    pattern, e = optimize_signs(dist, h)
    assert pattern.epsilon == {"0101": -1, "1010": 1}
    assert e == pytest.approx(ED_195, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_three_state_support_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    h = real_hamiltonian(rng, 4, 30)
    idx = np.sort(rng.choice(16, size=3, replace=False))
    p = rng.dirichlet(np.ones(3))
    dist = {format(int(i), "04b"): float(q) for i, q in zip(idx, p)}
    _, e = optimize_signs(dist, h)
    best = min(expected_energy(build_trial_state(dist, SignPattern(dict(zip(dist, s)))), h)
               for s in itertools.product([1, -1], repeat=3))
    assert e == pytest.approx(best, abs=1e-12)


def test_anchor_is_positive_and_ties_pick_first_pattern():
    # a diagonal Hamiltonian leaves every pattern tied; the all-plus one wins
    h = PauliHamiltonian(2, ((1.0, "ZI"),))
    pattern, _ = optimize_signs({"00": 0.25, "01": 0.25, "10": 0.5}, h)
    assert set(pattern.epsilon.values()) == {1}


def test_exhaustive_dominates_greedy():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(2, 9))
        A = rng.normal(size=(n, n))
        A = A + A.T
        _, ex = _exhaustive(A)
        _, gr = _greedy(A, np.random.default_rng(0))
        assert ex <= gr + 1e-12


def test_greedy_fallback_used_above_limit():
    rng = np.random.default_rng(3)
    h = fixtures.load("he2", 1.0)
    idx = np.arange(16)
    p = rng.dirichlet(np.ones(16))
    eps_g, e_g = optimize_sign_arrays(idx, p, h, exhaustive_limit=2)
    eps_x, e_x = optimize_sign_arrays(idx, p, h)
    assert e_x <= e_g + 1e-12
    a = np.sqrt(p) * eps_g
    assert e_g == pytest.approx(a @ h.to_dense() @ a, abs=1e-12)


def test_batched_energies_match_per_row():
    h = fixtures.load("h2", 0.9)
    dense, labels = coupling_labels(h)
    rng = np.random.default_rng(6)
    P = rng.dirichlet(np.ones(16) * 0.3, size=25)
    batch = batch_sign_energies(P, dense, labels)
    for row, e in zip(P, batch):
        idx = np.flatnonzero(row)
        _, ref = optimize_sign_arrays(idx, row[idx], h)
        assert e == pytest.approx(ref, abs=1e-12)


def test_batched_energies_refuse_big_blocks():
    h = fixtures.load("h2", 0.9)
    dense, labels = coupling_labels(h)
    assert batch_sign_energies(np.full((1, 16), 1 / 16), dense, labels, max_block=1) is None
    assert coupling_labels(PauliHamiltonian(11, ((1.0, "Z" * 11),)))[0] is None


def test_sign_pattern_validation():
    with pytest.raises(ValueError):
        SignPattern({"0": 2})
    assert SignPattern({"1": -1, "0": 1}) == SignPattern({"0": 1, "1": -1})
    assert "0:+" in repr(SignPattern.all_plus(["0"]))


def test_infinite_shot_state_uses_full_support():
    th = IsingAnsatz.from_vector(np.ones(11))
    psi = build_trial_state(sample(th, SamplerConfig(shots=INFINITE, beta=0.1)))
    assert len(psi) == 16
