"""Signed-amplitude trial states built from sampled bit-string frequencies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import EmptyDistribution, ShapeError

NORM_TOL = 1e-10
EXHAUSTIVE_LIMIT = 21
GREEDY_RESTARTS = 8
_CHUNK = 1 << 15


def support_of(dist, floor=0.0):
    """``(M, indices, probabilities)`` of a distribution, dropping p < floor and renormalizing."""
    if isinstance(dist, Mapping):
        if not dist:
            raise EmptyDistribution("distribution has no outcomes")
        M = len(next(iter(dist)))
        items = sorted((int(b, 2), float(p)) for b, p in dist.items() if p > 0)
        idx = np.array([i for i, _ in items], dtype=np.int64)
        p = np.array([q for _, q in items])
        p = p / p.sum() if len(p) else p
    else:
        M = dist.n_qubits
        idx, p = dist.support_arrays()
    if floor > 0:
        keep = p >= floor
        idx, p = idx[keep], p[keep]
        if len(p):
            p = p / p.sum()
    if len(idx) == 0:
        raise EmptyDistribution("distribution has no outcomes")
    return M, idx, p


@dataclass(frozen=True, eq=False)
class TrialState:
    """Real superposition over a sparse set of computational basis states.

    The state is normalized and its largest-magnitude amplitude is positive
    (ties resolved toward the smaller bit-string).
    """

    n_qubits: int
    indices: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64).reshape(-1)
        amp = np.array(self.amplitudes, dtype=float).reshape(-1)
        if idx.shape != amp.shape:
            raise ShapeError("indices and amplitudes differ in length")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("support bit-strings must be distinct")
        keep = amp != 0
        idx, amp = idx[keep], amp[keep]
        if len(idx) == 0:
            raise EmptyDistribution("trial state has empty support")
        if abs(float(amp @ amp) - 1.0) > NORM_TOL:
            raise ValueError(f"trial state norm^2 is {float(amp @ amp):.15f}")
        order = np.argsort(idx)
        idx, amp = idx[order], amp[order]
        if amp[np.argmax(np.abs(amp))] < 0:
            amp = -amp
        idx.setflags(write=False)
        amp.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def support(self):
        M = self.n_qubits
        return [(format(int(i), f"0{M}b"), float(a)) for i, a in zip(self.indices, self.amplitudes)]

    def amplitude(self, bits):
        hit = np.flatnonzero(self.indices == int(bits, 2))
        return float(self.amplitudes[hit[0]]) if len(hit) else 0.0

    def to_dense(self):
        vec = np.zeros(2 ** self.n_qubits)
        vec[self.indices] = self.amplitudes
        return vec

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class SignPattern:
    """Sign of each support bit-string; the anchor of every connected block is +1."""

    epsilon: Mapping[str, int]

    def __post_init__(self):
        eps = {b: int(s) for b, s in sorted(self.epsilon.items())}
        if any(s not in (1, -1) for s in eps.values()):
            raise ValueError("signs must be +1 or -1")
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def all_plus(cls, bitstrings):
        return cls({b: 1 for b in bitstrings})

    def as_array(self, indices, M):
        return np.array([self.epsilon[format(int(i), f"0{M}b")] for i in indices], dtype=float)

    def __eq__(self, other):
        return isinstance(other, SignPattern) and self.epsilon == other.epsilon

    def __repr__(self):
        return "SignPattern(" + " ".join(f"{b}:{'+' if s > 0 else '-'}" for b, s in self.epsilon.items()) + ")"


def build_trial_state(dist, signs=None, floor=0.0):
    """``sum_m eps_m sqrt(p(m)) |m>``; all signs + when ``signs`` is None."""
    M, idx, p = support_of(dist, floor)
    amp = np.sqrt(p)
    if signs is not None:
        amp = amp * signs.as_array(idx, M)
    # frequencies are normalized up to rounding; absorb it
    amp = amp / np.linalg.norm(amp)
    return TrialState(M, idx, amp)


def transition_element(m, n, h):
    """``<m|H|n>`` between computational basis states, evaluated term by term."""
    return h.transition_element(m, n)


def expected_energy(psi, h):
    """``<psi|H|psi>`` summed over support pairs only."""
    if h.n_qubits != psi.n_qubits:
        raise ShapeError(f"state has {psi.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    a = psi.amplitudes
    return float(a @ h.submatrix(psi.indices) @ a)


def _pattern_block(start, stop, n_free):
    """Rows of +/-1 for pattern numbers [start, stop); the first free member is the most significant bit."""
    codes = np.arange(start, stop, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n_free - 1, -1, -1)) & 1
    return 1.0 - 2.0 * bits


def _exhaustive(A):
    """Minimize eps^T A eps with eps[0] = +1; returns the first (lexicographic) minimizer."""
    c = len(A)
    if c == 1:
        return np.ones(1), float(A[0, 0])
    n_free = c - 1
    best_e, best_eps = np.inf, None
    for start in range(0, 1 << n_free, _CHUNK):
        stop = min(start + _CHUNK, 1 << n_free)
        free = _pattern_block(start, stop, n_free)
        eps = np.hstack([np.ones((len(free), 1)), free])
        energies = np.einsum("pi,pi->p", eps @ A, eps)
        k = int(np.argmin(energies))
        if energies[k] < best_e:
            best_e, best_eps = float(energies[k]), eps[k]
    return best_eps, best_e


def _greedy(A, rng, restarts=GREEDY_RESTARTS):
    """Single-flip descent from all-plus and from ``restarts`` random patterns."""
    c = len(A)
    off = A - np.diag(np.diag(A))
    starts = [np.ones(c)] + [1.0 - 2.0 * rng.integers(0, 2, size=c) for _ in range(restarts)]
    best_e, best_eps = np.inf, None
    for eps in starts:
        eps = eps.copy()
        while True:
            gain = 4.0 * eps * (off @ eps)  # energy drop from flipping each sign
            k = int(np.argmax(gain))
            if gain[k] <= 1e-15:
                break
            eps[k] = -eps[k]
        if eps[0] < 0:
            eps = -eps
        e = float(eps @ A @ eps)
        if e < best_e:
            best_e, best_eps = e, eps
    return best_eps, best_e


def _solve_blocks(a, A, labels, exhaustive_limit, rng):
    eps = np.ones(len(a))
    energy = 0.0
    for b in np.unique(labels):
        members = np.flatnonzero(labels == b)
        # anchor first: largest amplitude, ties to the smallest index (members are sorted)
        anchor = members[np.argmax(a[members])]
        members = np.concatenate([[anchor], members[members != anchor]])
        sub = A[np.ix_(members, members)]
        if len(members) <= exhaustive_limit:
            block_eps, e = _exhaustive(sub)
        else:
            block_eps, e = _greedy(sub, rng)
        eps[members] = block_eps
        energy += e
    return eps, energy


def optimize_sign_arrays(idx, p, h, exhaustive_limit=EXHAUSTIVE_LIMIT, seed=0,
                         labels=None, sub=None):
    """Best signs for amplitudes ``sqrt(p)`` on basis states ``idx``.

    Support states split into blocks connected by nonzero transition elements;
    blocks do not interact, so each is optimized on its own. Within a block the
    anchor (largest amplitude, then smallest index) is fixed to +1 and the
    remaining signs are enumerated when the block has at most
    ``exhaustive_limit`` states, otherwise found by greedy descent.

    ``labels`` may supply a precomputed grouping of the support that is no
    finer than the connected blocks, and ``sub`` the Hamiltonian submatrix.
    Returns ``(signs, energy)``.
    """
    a = np.sqrt(p)
    if sub is None:
        sub = h.submatrix(idx)
    A = np.outer(a, a) * sub
    if labels is None:
        k = len(idx)
        adjacency = (np.abs(A) > 0) & ~np.eye(k, dtype=bool)
        _, labels = connected_components(adjacency, directed=False)
    return _solve_blocks(a, A, np.asarray(labels), exhaustive_limit, np.random.default_rng(seed))


def coupling_labels(h, max_qubits=10):
    """Connected-component label of every basis state under ``h``, or None above ``max_qubits``."""
    if h.n_qubits > max_qubits:
        return None, None
    dense = h.to_dense()
    _, labels = connected_components(np.abs(dense) > 0, directed=False)
    return np.asarray(dense), labels


BATCH_BLOCK_LIMIT = 10


def batch_sign_energies(probs, dense, labels, max_block=BATCH_BLOCK_LIMIT):
    """Optimal-sign energies for many probability rows over the full basis at once.

    ``probs`` has shape (rows, 2**M) with rows summing to one; ``dense`` and
    ``labels`` come from :func:`coupling_labels`. Each coupled block contributes
    the minimum over all of its sign patterns (first member fixed to +1).
    Returns None when a block exceeds ``max_block`` states.
    """
    P = np.atleast_2d(np.asarray(probs, dtype=float))
    blocks = [np.flatnonzero(labels == b) for b in np.unique(labels)]
    if max(len(b) for b in blocks) > max_block:
        return None
    a = np.sqrt(P)
    total = np.zeros(len(P))
    for members in blocks:
        n = len(members)
        hb = dense[np.ix_(members, members)]
        ab = a[:, members]
        if n == 1:
            total += ab[:, 0] ** 2 * hb[0, 0]
            continue
        free = _pattern_block(0, 1 << (n - 1), n - 1)
        pats = np.hstack([np.ones((len(free), 1)), free])
        weights = (ab[:, :, None] * ab[:, None, :] * hb).reshape(len(P), n * n)
        signs = (pats[:, :, None] * pats[:, None, :]).reshape(len(pats), n * n)
        total += (weights @ signs.T).min(axis=1)
    return total


def optimize_signs(dist, h, exhaustive_limit=EXHAUSTIVE_LIMIT, floor=0.0, seed=0):
    """Lowest-energy sign pattern for the trial state of ``dist``; returns ``(SignPattern, energy)``."""
    M, idx, p = support_of(dist, floor)
    if M != h.n_qubits:
        raise ShapeError(f"distribution has {M} qubits, Hamiltonian {h.n_qubits}")
    eps, energy = optimize_sign_arrays(idx, p, h, exhaustive_limit, seed)
    pattern = SignPattern({format(int(i), f"0{M}b"): int(s) for i, s in zip(idx, eps)})
    return pattern, energy


def format_trial_state(psi):
    return "".join(f"{bits} {amp:.17g}\n" for bits, amp in psi.support)


def parse_trial_state(text):
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    if not rows:
        raise EmptyDistribution("no amplitudes")
    M = len(rows[0][0])
    return TrialState(M, [int(b, 2) for b, _ in rows], [float(a) for _, a in rows])
