"""Digitized parameter search, fine-tuning, ensembling and excited states.

Trials are independent: each one samples a distribution from its ansatz,
builds the signed trial state and records the expected energy. The search
keeps the lowest energy, breaking exact ties toward the lexicographically
smallest parameter vector.
"""
from __future__ import annotations

import logging
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .errors import BudgetExceeded, EmptyDistribution, ShapeError, VarqaError
from .hamiltonian.ed import DEFAULT_ALPHA, deflate, exact_diagonalize
from .hamiltonian.integrals import BLOCKED
from .sampler import (
    EXACT_ANNEAL,
    EXACT_GIBBS,
    MAX_CHAIN_QUBITS,
    INFINITE,
    MAX_GIBBS_QUBITS,
    IsingAnsatz,
    SamplerConfig,
    anneal_distributions,
    boltzmann,
    feature_table,
    largest_remainder,
    n_qubits_for,
    sample,
    trial_seed,
)
from .trial_state import (
    SignPattern,
    TrialState,
    expected_energy,
    batch_sign_energies,
    coupling_labels,
    optimize_sign_arrays,
    support_of,
)

log = logging.getLogger(__name__)

HARTREE_TO_KCAL = 627.509474

D1 = "D1"
D2 = "D2"
EXHAUSTIVE = "exhaustive"
RANDOM = "random"
LEVELS = {D1: (-1.0, 1.0), D2: (-1.0, 0.0, 1.0)}

ENUMERATION_BUDGET = 1 << 22
RANDOM_BLOCK = 4096
TRIAL_CHUNK = 4096

# (lowest distance in Angstrom, number of deflated states) for the H2 triplet
DEFAULT_K_RULE = ((0.0, 5), (0.475, 3), (0.75, 1))


@dataclass(frozen=True)
class DigitizerSpec:
    """Integer grid for the ansatz parameters.

    ``D1`` draws every parameter from {-1, 1}, ``D2`` from {-1, 0, 1}.
    Exhaustive mode walks the grid in odometer order (last parameter fastest);
    random mode draws ``trials`` vectors uniformly, reproducibly from ``seed``.
    """

    kind: str
    nu: int
    mode: str = EXHAUSTIVE
    trials: int | None = None
    seed: int = 0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in LEVELS:
            raise ValueError(f"unknown digitizer {self.kind!r}; expected D1 or D2")
        object.__setattr__(self, "kind", kind)
        n_qubits_for(self.nu)
        if self.mode == EXHAUSTIVE:
            if self.size > ENUMERATION_BUDGET:
                raise BudgetExceeded(
                    f"exhaustive {kind} over {self.nu} parameters has {self.size} points "
                    f"(budget {ENUMERATION_BUDGET})")
        elif self.mode == RANDOM:
            if self.trials is None or int(self.trials) < 1:
                raise ValueError("random mode needs trials >= 1")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def levels(self):
        return np.array(LEVELS[self.kind])

    @property
    def n_qubits(self):
        return n_qubits_for(self.nu)

    @property
    def size(self):
        return len(LEVELS[self.kind]) ** self.nu

    @property
    def n_trials(self):
        return self.size if self.mode == EXHAUSTIVE else int(self.trials)


def digitizer_vectors(spec, start, stop):
    """Parameter vectors for trial indices [start, stop) as a float array."""
    stop = min(stop, spec.n_trials)
    if stop <= start:
        return np.zeros((0, spec.nu))
    levels = spec.levels
    L = len(levels)
    if spec.mode == EXHAUSTIVE:
        t = np.arange(start, stop, dtype=np.int64)
        powers = L ** np.arange(spec.nu - 1, -1, -1, dtype=np.int64)
        return levels[(t[:, None] // powers) % L]
    # fixed-size blocks keep the stream independent of how it is sliced
    rows = []
    for block in range(start // RANDOM_BLOCK, (stop - 1) // RANDOM_BLOCK + 1):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(block,)))
        draws = rng.integers(0, L, size=(RANDOM_BLOCK, spec.nu))
        lo = max(start - block * RANDOM_BLOCK, 0)
        hi = min(stop - block * RANDOM_BLOCK, RANDOM_BLOCK)
        rows.append(draws[lo:hi])
    return levels[np.concatenate(rows)]


def enumerate_digitizer(spec):
    """Yield every ansatz of the digitizer stream in trial order."""
    M = spec.n_qubits
    for start in range(0, spec.n_trials, TRIAL_CHUNK):
        for vec in digitizer_vectors(spec, start, start + TRIAL_CHUNK):
            yield IsingAnsatz.from_vector(vec, M)


@dataclass(frozen=True)
class TrialEvaluation:
    theta: IsingAnsatz
    distribution: object
    signs: SignPattern
    state: TrialState
    energy: float


def _state_from_arrays(M, idx, p, h, floor=0.0):
    if floor > 0:
        keep = p >= floor
        idx, p = idx[keep], p[keep] / p[keep].sum()
    eps, _ = optimize_sign_arrays(idx, p, h)
    amp = np.sqrt(p) * eps
    state = TrialState(M, idx, amp / np.linalg.norm(amp))
    signs = SignPattern({format(int(i), f"0{M}b"): int(s) for i, s in zip(idx, eps)})
    return signs, state, expected_energy(state, h)


def evaluate_trial(theta, h, config=SamplerConfig(), seed=0, floor=0.0):
    """Sample ``theta``, choose signs and return the trial energy."""
    if theta.n_qubits != h.n_qubits:
        raise ShapeError(f"ansatz has {theta.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    dist = sample(theta, config, seed)
    M, idx, p = support_of(dist)
    signs, state, energy = _state_from_arrays(M, idx, p, h, floor)
    return TrialEvaluation(theta, dist, signs, state, energy)


GIBBS_BATCH_ELEMENTS = 1 << 22


_ROW_CACHE = OrderedDict()
_ROW_CACHE_SIZE = 64


def _exact_rows(vecs, config, M):
    """Per-trial probability rows on an exact backend (count frequencies for finite shots).

    Rows depend only on the parameters and the sampler, not on the Hamiltonian,
    so recent batches are memoized for scans over many geometries.
    """
    key = (vecs.tobytes(), M, config)
    if key in _ROW_CACHE:
        _ROW_CACHE.move_to_end(key)
        return _ROW_CACHE[key]
    if config.backend == EXACT_ANNEAL:
        probs = anneal_distributions(vecs, M, config.schedule)
    else:
        probs = boltzmann(vecs @ feature_table(M).T.astype(float), config.beta)
    if config.shots != INFINITE:
        probs = largest_remainder(probs, int(config.shots)) / int(config.shots)
    probs.setflags(write=False)
    _ROW_CACHE[key] = probs
    if len(_ROW_CACHE) > _ROW_CACHE_SIZE:
        _ROW_CACHE.popitem(last=False)
    return probs


def _row_energy(row, h, dense, labels):
    idx = np.flatnonzero(row)
    p = row[idx] / row[idx].sum()
    if dense is None:
        _, energy = optimize_sign_arrays(idx, p, h)
    else:
        _, energy = optimize_sign_arrays(idx, p, h, labels=labels[idx], sub=dense[np.ix_(idx, idx)])
    return energy


def _apply_floor(rows, floor):
    if floor <= 0:
        return rows
    rows = np.where(rows >= floor, rows, 0.0)
    sums = rows.sum(axis=1, keepdims=True)
    if np.any(sums == 0):
        raise EmptyDistribution("support floor removed every outcome")
    return rows / sums


def _exact_energies(h, vecs, config, floor, M, failures, start):
    """Trial energies on an exact backend, computed once per distinct distribution."""
    dense, labels = coupling_labels(h)
    batch = max(1, GIBBS_BATCH_ELEMENTS >> M)
    out = np.full(len(vecs), np.nan)
    for b0 in range(0, len(vecs), batch):
        stop = min(b0 + batch, len(vecs))
        try:
            rows = _exact_rows(vecs[b0:stop], config, M)
            uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
            uniq = _apply_floor(uniq, floor)
        except (VarqaError, ValueError, FloatingPointError) as exc:
            failures.extend((start + t, str(exc)) for t in range(b0, stop))
            continue
        energies = None
        if dense is not None:
            energies = batch_sign_energies(uniq, dense, labels)
        if energies is None:
            energies = np.full(len(uniq), np.nan)
            for u, row in enumerate(uniq):
                try:
                    energies[u] = _row_energy(row, h, dense, labels)
                except (VarqaError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
                    failures.extend((start + b0 + int(t), str(exc))
                                    for t in np.flatnonzero(inverse.reshape(-1) == u))
        out[b0:stop] = energies[inverse.reshape(-1)]
    return out


def _batched(config, M):
    if config.backend == EXACT_GIBBS:
        return M <= MAX_GIBBS_QUBITS
    return config.backend == EXACT_ANNEAL and M <= MAX_CHAIN_QUBITS


def _run_chunk(h, spec, config, master_seed, floor, start, stop):
    """Evaluate trials [start, stop); returns the chunk-local best and bookkeeping.

    On the exact backends energies are computed once per distinct
    distribution, since many grid points share one.
    """
    M = spec.n_qubits
    vecs = digitizer_vectors(spec, start, stop)
    failures = []
    if _batched(config, M):
        energies = _exact_energies(h, vecs, config, floor, M, failures, start)
    else:
        energies = np.full(len(vecs), np.nan)
        for offset, vec in enumerate(vecs):
            theta = IsingAnsatz.from_vector(vec, M)
            try:
                seed = trial_seed(master_seed, start + offset)
                energies[offset] = evaluate_trial(theta, h, config, seed, floor).energy
            except (VarqaError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
                failures.append((start + offset, str(exc)))
    for t, msg in failures:
        log.warning("trial %d failed: %s", t, msg)
    ok = np.flatnonzero(~np.isnan(energies))
    if len(ok) == 0:
        return None, [], failures, 0
    e = energies[ok]
    running = np.minimum.accumulate(e)
    improved = np.concatenate([[True], e[1:] < running[:-1]])
    improvements = [(start + int(ok[i]), float(e[i])) for i in np.flatnonzero(improved)]
    tied = ok[e == running[-1]]
    # lexicographically smallest parameter vector among the tied minimizers
    first = tied[np.lexsort(vecs[tied].T[::-1])[0]]
    best = (float(energies[first]), tuple(vecs[first].tolist()), start + int(first))
    return best, improvements, failures, len(ok)


@dataclass(frozen=True)
class VarqaResult:
    """Outcome of a parameter search; ``best_energy`` is in Hartree."""

    best_theta: IsingAnsatz
    best_signs: SignPattern
    best_state: TrialState
    best_energy: float
    trials_evaluated: int
    energy_trace: tuple = ()
    failures: tuple = ()
    best_trial: int = 0
    distribution: object = field(default=None, repr=False)


def varqa_search(h, spec, config=SamplerConfig(), master_seed=0, workers=1, floor=0.0):
    """Brute-force or randomized search over the digitizer grid.

    Trials are split into fixed chunks that may run in separate processes;
    results are reduced in chunk order so the outcome does not depend on
    ``workers``.
    """
    if spec.n_qubits != h.n_qubits:
        raise ShapeError(f"digitizer with nu={spec.nu} implies {spec.n_qubits} qubits, "
                         f"Hamiltonian has {h.n_qubits}")
    bounds = [(s, min(s + TRIAL_CHUNK, spec.n_trials)) for s in range(0, spec.n_trials, TRIAL_CHUNK)]
    job = partial(_run_chunk, h, spec, config, master_seed, floor)
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, *zip(*bounds)))
    else:
        parts = [job(s, e) for s, e in bounds]

    best, trace, failures, evaluated = None, [], [], 0
    for chunk_best, improvements, chunk_failures, n in parts:
        failures.extend(chunk_failures)
        evaluated += n
        for t, e in improvements:
            if not trace or e < trace[-1][1]:
                trace.append((t, e))
        if chunk_best is not None and (best is None or chunk_best[:2] < best[:2]):
            best = chunk_best
    if best is None:
        raise VarqaError(f"all {spec.n_trials} trials failed")

    _, vec, t = best
    theta = IsingAnsatz.from_vector(vec, spec.n_qubits)
    ev = evaluate_trial(theta, h, config, trial_seed(master_seed, t), floor)
    return VarqaResult(ev.theta, ev.signs, ev.state, ev.energy, evaluated,
                       tuple(trace), tuple(failures), t, ev.distribution)


def fine_tune(theta0, h, config=SamplerConfig(), coordinates=None, seed=0,
              step=0.25, min_step=1e-3, max_cycles=20, floor=0.0):
    """Cyclic coordinate descent on real-valued parameters from a warm start.

    Every evaluation uses the same sampler seed, so the objective is a fixed
    function of the parameters. ``coordinates`` is a list of parameter indices,
    an int (that many indices drawn at random from ``seed``) or None for all.
    Returns ``(theta, energy, trace)``; ``trace`` holds the accepted energies
    and is non-increasing.
    """
    vec = theta0.to_vector().astype(float)
    M = theta0.n_qubits
    if coordinates is None:
        coords = list(range(len(vec)))
    elif isinstance(coordinates, (int, np.integer)):
        rng = np.random.default_rng(seed)
        coords = sorted(rng.choice(len(vec), size=int(coordinates), replace=False).tolist())
    else:
        coords = [int(c) for c in coordinates]

    def energy_of(v):
        return evaluate_trial(IsingAnsatz.from_vector(v, M), h, config, seed, floor).energy

    best = energy_of(vec)
    trace = [best]
    for _ in range(max_cycles):
        moved = False
        for j in coords:
            for direction in (1.0, -1.0):
                went = False
                while True:
                    cand = vec.copy()
                    cand[j] += direction * step
                    e = energy_of(cand)
                    if e < best:
                        vec, best, went = cand, e, True
                        trace.append(e)
                    else:
                        break
                if went:
                    moved = True
                    break
        if not moved:
            step /= 2
            if step < min_step:
                break
    return IsingAnsatz.from_vector(vec, M), best, trace


def alpha_varqa(thetas, h, config=SamplerConfig(), seed=0, floor=0.0):
    """Average the distributions of several ansatz into one trial state.

    Ansatz k is sampled with the seed of trial k, so a single ansatz
    reproduces the ordinary trial evaluation. Returns ``(state, energy)``.
    """
    thetas = list(thetas)
    if not thetas:
        raise ValueError("alpha_varqa needs at least one ansatz")
    M = thetas[0].n_qubits
    if any(t.n_qubits != M for t in thetas) or h.n_qubits != M:
        raise ShapeError("all ansatz and the Hamiltonian must share the qubit count")
    total = {}
    for k, theta in enumerate(thetas):
        _, idx, p = support_of(sample(theta, config, trial_seed(seed, k)))
        for i, q in zip(idx.tolist(), p.tolist()):
            total[i] = total.get(i, 0.0) + q
    idx = np.array(sorted(total), dtype=np.int64)
    p = np.array([total[i] for i in idx]) / len(thetas)
    _, state, energy = _state_from_arrays(M, idx, p, h, floor)
    return state, energy


def deflated_hamiltonian(h, k, alpha_shift=DEFAULT_ALPHA, ordering=BLOCKED):
    """``H^k``: the lowest ``k`` exact eigenstates of ``h`` shifted up by ``alpha_shift``.

    Returns ``(H^k, spectrum)``; the spectrum holds at least k + 1 eigenpairs.
    """
    spectrum = exact_diagonalize(h, k=k + 1, ordering=ordering)
    if k == 0:
        return h, spectrum
    states = [spectrum.eigenvectors[:, i] for i in range(k)]
    return deflate(h, states, [alpha_shift] * k), spectrum


def excited_state_search(h, k, alpha_shift=DEFAULT_ALPHA, spec=None, config=SamplerConfig(),
                         master_seed=0, workers=1, ordering=BLOCKED):
    """Run :func:`varqa_search` on ``H^k`` to target the k-th eigenstate."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if spec is None:
        spec = DigitizerSpec(D1, h.n_qubits * (h.n_qubits + 1) // 2 + 1)
    hk, _ = deflated_hamiltonian(h, k, alpha_shift, ordering)
    return varqa_search(hk, spec, config, master_seed, workers)


def k_for_distance(distance, rule=DEFAULT_K_RULE):
    """Number of states to deflate: the entry with the largest threshold <= distance."""
    thresholds = [t for t, _ in rule]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("k-rule thresholds must be strictly increasing")
    chosen = None
    for threshold, k in rule:
        if distance >= threshold:
            chosen = k
    if chosen is None:
        raise ValueError(f"no k-rule entry covers distance {distance}")
    return chosen


def format_report(result, reference=None):
    """Line-oriented summary; energies in Hartree and kcal/mol."""
    M = result.best_theta.n_qubits
    lines = [
        "theta " + " ".join(f"{v:.17g}" for v in result.best_theta.to_vector()),
        "signs " + " ".join(f"{b}:{'+' if s > 0 else '-'}" for b, s in result.best_signs.epsilon.items()),
        f"support {len(result.best_state)}",
    ]
    for bits, amp in result.best_state.support:
        lines.append(f"amplitude {bits} {amp:.17g}")
    lines.append(f"energy_hartree {result.best_energy:.17g}")
    lines.append(f"energy_kcal_mol {result.best_energy * HARTREE_TO_KCAL:.17g}")
    if reference is not None:
        lines.append(f"reference_hartree {reference:.17g}")
        lines.append(f"error_kcal_mol {(result.best_energy - reference) * HARTREE_TO_KCAL:.17g}")
    lines.append(f"trials {result.trials_evaluated}")
    lines.append(f"best_trial {result.best_trial}")
    lines.append(f"failed_trials {len(result.failures)}")
    lines.append(f"qubits {M}")
    return "\n".join(lines) + "\n"
