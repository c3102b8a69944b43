"""Exact diagonalization (the reference oracle) and rank-one deflation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from ..errors import DimensionTooLarge, NonUnitState, ShapeError
from .integrals import BLOCKED, spin_labels
from .pauli import MAX_DENSE_QUBITS, PauliHamiltonian, _as_index

MAX_ED_QUBITS = 20
NORM_TOL = 1e-8

# default deflation shift, 2 Hartree
DEFAULT_ALPHA = 2.0


@dataclass(frozen=True, eq=False)
class DeflatedHamiltonian:
    """``base + sum_i alpha_i |e_i><e_i|`` with dense shift vectors of length 2**M."""

    base: PauliHamiltonian
    shifts: tuple = ()

    def __post_init__(self):
        dim = 2 ** self.base.n_qubits
        clean = []
        for alpha, state in self.shifts:
            vec = np.array(state, dtype=float if np.isrealobj(state) else complex)
            if vec.shape != (dim,):
                raise ShapeError(f"shift state has shape {vec.shape}, expected {(dim,)}")
            if abs(np.linalg.norm(vec) - 1.0) > NORM_TOL:
                raise NonUnitState(f"shift state has norm {np.linalg.norm(vec):.12f}")
            if not alpha > 0:
                raise ValueError(f"deflation shift must be positive, got {alpha}")
            vec.setflags(write=False)
            clean.append((float(alpha), vec))
        object.__setattr__(self, "shifts", tuple(clean))

    @property
    def n_qubits(self):
        return self.base.n_qubits

    @cached_property
    def _shift_arrays(self):
        if not self.shifts:
            return np.zeros(0), np.zeros((0, 2 ** self.n_qubits))
        alphas = np.array([a for a, _ in self.shifts])
        vecs = np.array([v for _, v in self.shifts])
        return alphas, vecs

    def transition_element(self, m, n):
        M = self.n_qubits
        i, j = _as_index(m, M), _as_index(n, M)
        alphas, vecs = self._shift_arrays
        shift = np.sum(alphas * vecs[:, i] * np.conj(vecs[:, j]))
        return self.base.transition_element(i, j) + float(np.real(shift))

    def submatrix(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        alphas, vecs = self._shift_arrays
        sub = vecs[:, idx]
        shift = np.einsum("k,ki,kj->ij", alphas, sub, np.conj(sub))
        return self.base.submatrix(idx) + np.real(shift)

    def to_dense(self, max_qubits=MAX_DENSE_QUBITS):
        mat = self.base.to_dense(max_qubits)
        alphas, vecs = self._shift_arrays
        for a, v in zip(alphas, vecs):
            mat = mat + a * np.real(np.outer(v, np.conj(v)))
        return mat


def deflate(h, states, alphas=None):
    """Shift each state in ``states`` up by the matching alpha (default 2 Hartree)."""
    states = list(states)
    if alphas is None:
        alphas = [DEFAULT_ALPHA] * len(states)
    alphas = list(alphas)
    if len(alphas) != len(states):
        raise ShapeError(f"{len(states)} states but {len(alphas)} shifts")
    return DeflatedHamiltonian(h, tuple(zip(alphas, states)))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues; ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``.

    Eigenvectors are dense over the full 2**M space and phase-fixed so that their
    largest-magnitude component is positive. ``sector_labels[i]`` is
    ``(particle number, 2*Sz)`` when the Hamiltonian conserves both.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sector_labels: tuple | None = None

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def ground_energy(self):
        return float(self.eigenvalues[0])

    @property
    def ground_state(self):
        return self.eigenvectors[:, 0]

    def in_sector(self, n_particles, ms2=None):
        """Indices of eigenpairs in the given sector."""
        if self.sector_labels is None:
            raise ValueError("spectrum has no sector labels")
        return [i for i, (n, s) in enumerate(self.sector_labels)
                if n == n_particles and (ms2 is None or s == ms2)]


def sector_of_basis(M, ordering=BLOCKED):
    """``(N, 2Sz)`` for every basis index; ``2Sz`` is None for odd M."""
    idx = np.arange(2 ** M, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(M - 1, -1, -1)) & 1
    n = bits.sum(axis=1)
    if M % 2:
        return n, None
    spins = spin_labels(M // 2, ordering)
    ms2 = bits[:, spins == 0].sum(axis=1) - bits[:, spins == 1].sum(axis=1)
    return n, ms2


def _fix_phase(vecs):
    pivots = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivots, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1
    return vecs * signs


def _sector_blocks(h, groups):
    """Dense blocks of ``h`` per basis group, or None when the groups are coupled."""
    base = h.base if isinstance(h, DeflatedHamiltonian) else h
    blocks = []
    for members in groups:
        try:
            blocks.append(base._tables.dense_columns(members))
        except ValueError:
            return None
    if isinstance(h, DeflatedHamiltonian):
        alphas, vecs = h._shift_arrays
        for a, v in zip(alphas, vecs):
            touched = [g for g, members in enumerate(groups) if np.linalg.norm(v[members]) > 1e-12]
            if len(touched) > 1:
                return None
            for g in touched:
                part = v[groups[g]]
                blocks[g] = blocks[g] + a * np.real(np.outer(part, np.conj(part)))
    return blocks


def exact_diagonalize(h, k=None, ordering=BLOCKED, n_particles=None):
    """Exact spectrum of a Pauli or deflated Hamiltonian.

    The basis is split into (particle number, 2Sz) sectors and each block is
    diagonalized separately, so eigenvectors carry well-defined labels. If the
    operator couples sectors, the full matrix is diagonalized instead and no
    labels are attached. Above 14 qubits only the ``n_particles`` sector is
    treated (required argument); above 20 qubits the call is refused.
    ``k`` truncates to the lowest k eigenpairs.
    """
    M = h.n_qubits
    if M > MAX_ED_QUBITS:
        raise DimensionTooLarge(f"exact diagonalization limited to {MAX_ED_QUBITS} qubits, got {M}")
    if M > MAX_DENSE_QUBITS and n_particles is None:
        raise DimensionTooLarge(
            f"{M} qubits need a particle-number sector (n_particles) for exact diagonalization")
    dim = 2 ** M
    n_of, ms2_of = sector_of_basis(M, ordering)
    basis = np.arange(dim, dtype=np.int64)
    if n_particles is not None:
        basis = basis[n_of == n_particles]
    blocks = None
    for use_sz in ((True, False) if ms2_of is not None else (False,)):
        ms2_b = ms2_of[basis] if use_sz else np.zeros(len(basis), dtype=np.int64)
        codes = n_of[basis] * (2 * M + 1) + ms2_b + M
        uniq, gid = np.unique(codes, return_inverse=True)
        groups = [basis[gid == g] for g in range(len(uniq))]
        labels_of_group = [(int(c // (2 * M + 1)), int(c % (2 * M + 1)) - M if use_sz else None)
                           for c in uniq]
        blocks = _sector_blocks(h, groups)
        if blocks is not None:
            break
    if blocks is None:
        if n_particles is not None:
            raise ValueError("Hamiltonian does not conserve particle number; cannot restrict sector")
        blocks = [h.to_dense()]
        groups = [basis]
        labels_of_group = None

    values, owners, local = [], [], []
    eigvecs = []
    for g, block in enumerate(blocks):
        w, v = np.linalg.eigh(block)
        values.append(w)
        eigvecs.append(v)
        owners.extend([g] * len(w))
        local.extend(range(len(w)))
    values = np.concatenate(values)
    order = np.argsort(values, kind="stable")
    if k is not None:
        order = order[:k]
    vectors = np.zeros((dim, len(order)))
    for col, i in enumerate(order):
        vectors[groups[owners[i]], col] = eigvecs[owners[i]][:, local[i]]
    labels = None
    if labels_of_group is not None:
        labels = tuple(labels_of_group[owners[i]] for i in order)
    return Spectrum(values[order], _fix_phase(vectors), labels)


def number_operator(M):
    """Total particle number as a PauliHamiltonian: sum_p (I - Z_p) / 2."""
    terms = [(M / 2, "I" * M)]
    for q in range(M):
        terms.append((-0.5, "I" * q + "Z" + "I" * (M - q - 1)))
    return PauliHamiltonian(M, tuple(terms))


def sz_operator(M, ordering=BLOCKED):
    """``S_z`` as a PauliHamiltonian: (n_alpha - n_beta) / 2 = sum_p -/+ Z_p / 4."""
    spins = spin_labels(M // 2, ordering)
    terms = []
    for q in range(M):
        sign = 1.0 if spins[q] == 0 else -1.0
        terms.append((-0.25 * sign, "I" * q + "Z" + "I" * (M - q - 1)))
    return PauliHamiltonian(M, tuple(terms))


def basis_states(M, n_particles):
    """Sorted indices of all M-bit states with ``n_particles`` set bits."""
    out = []
    for occ in combinations(range(M), n_particles):
        out.append(sum(1 << (M - 1 - q) for q in occ))
    return np.array(sorted(out), dtype=np.int64)
