"""Parameterized Ising ansatz and bit-string samplers.

Spin convention: bit 0 <-> s = +1, bit 1 <-> s = -1 (the eigenvalue of Z), so
``E_m = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + theta_0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import DimensionTooLarge, ShapeError

MAX_GIBBS_QUBITS = 24
INFINITE = "infinite"

EXACT_GIBBS = "exact_gibbs"
SIMULATED_ANNEALING = "simulated_annealing"
EXACT_ANNEAL = "exact_anneal"
BACKENDS = (EXACT_GIBBS, SIMULATED_ANNEALING, EXACT_ANNEAL)
EXACT_BACKENDS = (EXACT_GIBBS, EXACT_ANNEAL)
MAX_CHAIN_QUBITS = 12

DEFAULT_GIBBS_BETA = 2.0


def n_parameters(M):
    """Number of ansatz parameters: M fields, M(M-1)/2 couplings and one offset."""
    return M * (M + 1) // 2 + 1


def n_qubits_for(nu):
    M = int(round((math.sqrt(8 * nu - 7) - 1) / 2))
    if n_parameters(M) != nu:
        raise ShapeError(f"{nu} is not M(M+1)/2 + 1 for any integer M")
    return M


@dataclass(frozen=True, eq=False)
class IsingAnsatz:
    """Ising parameters in the fixed order (theta_1..theta_M, theta_12, theta_13, ..., theta_{M-1,M}, theta_0)."""

    n_qubits: int
    fields: np.ndarray
    couplings: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        M = self.n_qubits
        h = np.array(self.fields, dtype=float).reshape(-1)
        J = np.array(self.couplings, dtype=float).reshape(-1)
        if h.shape != (M,):
            raise ShapeError(f"expected {M} fields, got {h.size}")
        if J.shape != (M * (M - 1) // 2,):
            raise ShapeError(f"expected {M * (M - 1) // 2} couplings, got {J.size}")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(J)) and math.isfinite(self.offset)):
            raise ValueError("ansatz parameters must be finite")
        h.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "fields", h)
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_vector(cls, vector, n_qubits=None):
        vec = np.asarray(vector, dtype=float).reshape(-1)
        M = n_qubits_for(vec.size) if n_qubits is None else n_qubits
        if vec.size != n_parameters(M):
            raise ShapeError(f"{M} qubits need {n_parameters(M)} parameters, got {vec.size}")
        return cls(M, vec[:M], vec[M:-1], vec[-1])

    @classmethod
    def zeros(cls, M):
        return cls.from_vector(np.zeros(n_parameters(M)), M)

    @property
    def nu(self):
        return n_parameters(self.n_qubits)

    def to_vector(self):
        return np.concatenate([self.fields, self.couplings, [self.offset]])

    def coupling_matrix(self):
        """Symmetric M x M coupling matrix with zero diagonal."""
        M = self.n_qubits
        J = np.zeros((M, M))
        J[np.triu_indices(M, 1)] = self.couplings
        return J + J.T

    def key(self):
        return tuple(self.to_vector().tolist())

    def __repr__(self):
        vals = ", ".join(f"{v:g}" for v in self.to_vector())
        return f"IsingAnsatz({self.n_qubits}, [{vals}])"


def spin_table(M):
    """Spins of every basis state in index order, shape (2**M, M)."""
    idx = np.arange(2 ** M, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(M - 1, -1, -1)) & 1
    return 1 - 2 * bits


def feature_table(M):
    """Rows ``(s_1..s_M, s_1 s_2, ..., s_{M-1} s_M, 1)`` so that ``E = features @ theta``."""
    s = spin_table(M)
    iu, ju = np.triu_indices(M, 1)
    return np.hstack([s, s[:, iu] * s[:, ju], np.ones((2 ** M, 1), dtype=np.int64)])


def ising_energy(theta, m):
    """Energy of bit-string ``m`` under the ansatz."""
    if len(m) != theta.n_qubits:
        raise ShapeError(f"bit-string {m!r} has length {len(m)}, expected {theta.n_qubits}")
    s = np.array([1 - 2 * int(b) for b in m], dtype=float)
    J = theta.coupling_matrix()
    return float(theta.fields @ s + 0.5 * s @ J @ s + theta.offset)


def ising_energies(theta):
    """Energies of all 2**M basis states in index order."""
    M = theta.n_qubits
    if M > MAX_GIBBS_QUBITS:
        raise DimensionTooLarge(f"cannot enumerate 2**{M} states")
    s = spin_table(M).astype(float)
    J = theta.coupling_matrix()
    return s @ theta.fields + 0.5 * np.einsum("ai,ij,aj->a", s, J, s) + theta.offset


def boltzmann(energies, beta):
    """Normalized Boltzmann weights along the last axis, shifted by the lowest energy."""
    e = np.asarray(energies, dtype=float)
    w = np.exp(-beta * (e - e.min(axis=-1, keepdims=True)))
    return w / w.sum(axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class SampleDistribution:
    """Empirical bit-string counts from ``shots`` samples."""

    n_qubits: int
    counts: Mapping[str, int]
    shots: int

    def __post_init__(self):
        counts = {}
        for bits, c in sorted(self.counts.items()):
            if len(bits) != self.n_qubits:
                raise ShapeError(f"bit-string {bits!r} has length {len(bits)}, expected {self.n_qubits}")
            if int(c) < 0:
                raise ValueError(f"negative count for {bits}")
            if int(c) > 0:
                counts[bits] = int(c)
        if sum(counts.values()) != self.shots:
            raise ValueError(f"counts sum to {sum(counts.values())}, expected {self.shots}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_indices(cls, M, indices, counts):
        return cls(M, {format(int(i), f"0{M}b"): int(c) for i, c in zip(indices, counts)},
                   int(np.sum(counts)))

    def probabilities(self):
        return {b: c / self.shots for b, c in self.counts.items()}

    def support_arrays(self):
        """Sorted basis indices with nonzero counts and their frequencies."""
        idx = np.array([int(b, 2) for b in self.counts], dtype=np.int64)
        p = np.array(list(self.counts.values()), dtype=float) / self.shots
        order = np.argsort(idx)
        return idx[order], p[order]

    def __eq__(self, other):
        return (isinstance(other, SampleDistribution) and self.n_qubits == other.n_qubits
                and self.shots == other.shots and self.counts == other.counts)


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    """Exact probabilities over all 2**M basis states (index order)."""

    n_qubits: int
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.shape != (2 ** self.n_qubits,):
            raise ShapeError(f"expected {2 ** self.n_qubits} probabilities, got {p.shape}")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def support_arrays(self):
        idx = np.flatnonzero(self.probabilities > 0)
        return idx.astype(np.int64), self.probabilities[idx]

    def as_dict(self):
        M = self.n_qubits
        return {format(int(i), f"0{M}b"): float(p) for i, p in zip(*self.support_arrays())}


def gibbs_distribution(theta, beta):
    """Exact Boltzmann distribution of the ansatz at inverse temperature ``beta``."""
    if theta.n_qubits > MAX_GIBBS_QUBITS:
        raise DimensionTooLarge(f"Gibbs enumeration limited to {MAX_GIBBS_QUBITS} qubits")
    return ExactDistribution(theta.n_qubits, boltzmann(ising_energies(theta), beta))


def largest_remainder(probs, shots):
    """Round probability rows to integer counts summing to ``shots``.

    Leftover units go to the largest fractional parts; ties go to the lower index.
    """
    p = np.atleast_2d(np.asarray(probs, dtype=float))
    exact = p * shots
    base = np.floor(exact).astype(np.int64)
    deficit = shots - base.sum(axis=1)
    order = np.argsort(-(exact - base), axis=1, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(p.shape[1])[None, :].repeat(len(p), 0), axis=1)
    counts = base + (rank < deficit[:, None])
    return counts if np.ndim(probs) > 1 else counts[0]


@dataclass(frozen=True)
class AnnealSchedule:
    """Inverse-temperature ramp for simulated annealing, one value per sweep."""

    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    interpolation: str = "geometric"

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not 0 < self.beta_start <= self.beta_end:
            raise ValueError("need 0 < beta_start <= beta_end")
        if self.interpolation not in ("geometric", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    def betas(self):
        if self.sweeps == 1:
            return np.array([self.beta_end])
        if self.interpolation == "geometric":
            return np.geomspace(self.beta_start, self.beta_end, self.sweeps)
        return np.linspace(self.beta_start, self.beta_end, self.sweeps)


TIE_TOL = 1e-12


def metropolis_acceptance(delta, beta):
    """Probability of accepting a flip that changes the energy by ``delta``.

    Downhill moves are always taken and uphill ones with ``exp(-beta*delta)``.
    Zero-cost moves are taken with probability 1/2: accepting them always lets
    fixed-order sweeps cycle around a degenerate plateau without ever reaching
    a lower state next to it. Detailed balance holds either way.
    """
    delta = np.asarray(delta, dtype=float)
    uphill = np.exp(-beta * np.maximum(delta, 0.0))
    return np.where(np.abs(delta) <= TIE_TOL, 0.5, np.where(delta < 0, 1.0, uphill))


def simulated_anneal(theta, shots, schedule=AnnealSchedule(), seed=0):
    """Run ``shots`` independent single-spin-flip Metropolis anneals.

    All runs advance together as rows of one spin array; each starts from a
    uniformly random configuration and the final configuration is recorded.
    Output is a deterministic function of the arguments.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    M = theta.n_qubits
    rng = np.random.default_rng(seed)
    start = rng.integers(0, 2, size=(shots, M))
    if M <= MAX_CHAIN_QUBITS:
        idx = _anneal_indices(theta, start, schedule, rng)
    else:
        idx = _anneal_spins(theta, start, schedule, rng)
    values, counts = np.unique(idx, return_counts=True)
    return SampleDistribution.from_indices(M, values, counts)


def _anneal_indices(theta, start, schedule, rng):
    # runs tracked as basis-state indices; acceptance looked up per sweep
    M = theta.n_qubits
    energies = ising_energies(theta)
    states = np.arange(2 ** M)
    masks = 1 << np.arange(M - 1, -1, -1)
    deltas = [energies[states ^ m] - energies for m in masks]
    idx = start @ masks
    for beta in schedule.betas():
        u = rng.random((M, len(idx)))
        for i, m in enumerate(masks):
            accept = metropolis_acceptance(deltas[i], beta)
            idx = np.where(u[i] < accept[idx], idx ^ m, idx)
    return idx


def _anneal_spins(theta, start, schedule, rng):
    M = theta.n_qubits
    # one row per spin, one column per run
    spins = 1.0 - 2.0 * start.T
    h = theta.fields
    J = theta.coupling_matrix()
    for beta in schedule.betas():
        u = rng.random((M, spins.shape[1]))
        for i in range(M):
            row = spins[i]
            delta = -2.0 * row * (h[i] + J[i] @ spins)  # energy change on flipping spin i
            row[u[i] < metropolis_acceptance(delta, beta)] *= -1.0
    bits = (spins.T < 0).astype(np.int64)
    return bits @ (1 << np.arange(M - 1, -1, -1))


def anneal_distributions(vectors, M, schedule=AnnealSchedule()):
    """Exact output law of :func:`simulated_anneal` for each parameter row.

    The probability vector over all 2**M configurations starts uniform and is
    pushed through the same sequence of single-spin Metropolis updates the
    sampler applies, so each row is the infinite-shot limit of the sampler.
    Rows that differ only in the offset share one computation.
    """
    if M > MAX_CHAIN_QUBITS:
        raise DimensionTooLarge(f"annealing chain limited to {MAX_CHAIN_QUBITS} qubits, got {M}")
    vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
    energies = vecs @ feature_table(M).T.astype(float)
    energies -= energies.min(axis=1, keepdims=True)
    uniq, inverse = np.unique(energies, axis=0, return_inverse=True)
    n = 2 ** M
    states = np.arange(n)
    p = np.full((len(uniq), n), 1.0 / n)
    moves = []
    for i in range(M):
        partner = states ^ (1 << (M - 1 - i))
        delta = uniq[:, partner] - uniq
        values, codes = np.unique(delta, return_inverse=True)
        moves.append((partner, values, codes.reshape(delta.shape)))
    for beta in schedule.betas():
        for partner, values, codes in moves:
            accept = metropolis_acceptance(values, beta)[codes]
            flow = p * accept
            p = p - flow + flow[:, partner]
    return p[inverse.reshape(-1)]


def anneal_distribution(theta, schedule=AnnealSchedule()):
    return ExactDistribution(theta.n_qubits, anneal_distributions(theta.to_vector(), theta.n_qubits, schedule)[0])


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler selection. ``shots`` is an int or :data:`INFINITE` (exact backends only).

    Finite shots on an exact backend round the exact probabilities to counts
    (largest remainder), a noise-free stand-in for drawing ``shots`` samples.
    """

    backend: str = EXACT_GIBBS
    shots: int | str = 1000
    beta: float = DEFAULT_GIBBS_BETA
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if self.shots == INFINITE:
            if self.backend not in EXACT_BACKENDS:
                raise ValueError("infinite shots need an exact backend")
        elif int(self.shots) < 1:
            raise ValueError("shots must be >= 1")


def trial_seed(master_seed, index):
    """Seed for trial ``index``, independent of how trials are scheduled."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))


def sample(theta, config=SamplerConfig(), seed=0):
    """Draw a bit-string distribution for ``theta`` with the configured backend."""
    if config.backend == SIMULATED_ANNEALING:
        return simulated_anneal(theta, int(config.shots), config.schedule, seed)
    if config.backend == EXACT_ANNEAL:
        exact = anneal_distribution(theta, config.schedule)
    else:
        exact = gibbs_distribution(theta, config.beta)
    if config.shots == INFINITE:
        return exact
    counts = largest_remainder(exact.probabilities, int(config.shots))
    nz = np.flatnonzero(counts)
    return SampleDistribution.from_indices(theta.n_qubits, nz, counts[nz])
