"""Weighted Pauli-string Hamiltonians and their computational-basis matrix elements.

Bit-string convention used everywhere in the package: big-endian, the leftmost
character is qubit 1, and the integer index of a basis state is ``int(bits, 2)``.
A Pauli word is aligned the same way, so word[q] acts on bits[q].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from ..errors import DimensionTooLarge, ImaginaryResidue, ParseError, ShapeError

PRUNE_THRESHOLD = 1e-12
IMAG_TOL = 1e-10
MAX_DENSE_QUBITS = 14

_AXES = "IXYZ"


def word_to_masks(word):
    """Return ``(x_mask, z_mask)``; Y sets both bits."""
    M = len(word)
    x = z = 0
    for q, c in enumerate(word):
        bit = 1 << (M - 1 - q)
        if c == "X":
            x |= bit
        elif c == "Z":
            z |= bit
        elif c == "Y":
            x |= bit
            z |= bit
        elif c != "I":
            raise ValueError(f"invalid Pauli axis {c!r} in {word!r}")
    return x, z


def masks_to_word(x, z, M):
    chars = []
    for q in range(M):
        bit = 1 << (M - 1 - q)
        chars.append("IXZY"[bool(x & bit) + 2 * bool(z & bit)])
    return "".join(chars)


def bits_to_index(bits):
    return int(bits, 2)


def index_to_bits(index, M):
    return format(index, f"0{M}b")


def popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.int64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class PauliHamiltonian:
    """Real linear combination of M-qubit Pauli words.

    Duplicate words are merged on construction, coefficients with magnitude below
    ``prune`` are dropped, and terms are kept sorted by word.
    """

    n_qubits: int
    terms: tuple
    prune: float = PRUNE_THRESHOLD

    def __post_init__(self):
        merged = {}
        for coef, word in self.terms:
            if len(word) != self.n_qubits:
                raise ShapeError(f"word {word!r} has length {len(word)}, expected {self.n_qubits}")
            word_to_masks(word)
            c = complex(coef)
            if abs(c.imag) > IMAG_TOL:
                raise ImaginaryResidue(f"coefficient of {word} has imaginary part {c.imag:.3e}")
            if not math.isfinite(c.real):
                raise ValueError(f"non-finite coefficient for {word}")
            merged[word] = merged.get(word, 0.0) + c.real
        terms = tuple((c, w) for w, c in sorted(merged.items()) if abs(c) >= self.prune)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_dict(cls, n_qubits, mapping, prune=PRUNE_THRESHOLD):
        return cls(n_qubits, tuple((c, w) for w, c in mapping.items()), prune)

    def to_dict(self):
        return {w: c for c, w in self.terms}

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"PauliHamiltonian(n_qubits={self.n_qubits}, n_terms={len(self.terms)})"

    @property
    def identity_coefficient(self):
        return self.to_dict().get("I" * self.n_qubits, 0.0)

    @cached_property
    def _tables(self):
        return _TransitionTable(self)

    def is_diagonal(self):
        return all(set(w) <= {"I", "Z"} for _, w in self.terms)

    def transition_element(self, m, n):
        return self._tables.element(_as_index(m, self.n_qubits), _as_index(n, self.n_qubits))

    def submatrix(self, indices):
        """Real matrix ``<m|H|n>`` over the given basis-state indices."""
        return self._tables.submatrix(np.asarray(indices, dtype=np.int64))

    def to_dense(self, max_qubits=MAX_DENSE_QUBITS):
        if self.n_qubits > max_qubits:
            raise DimensionTooLarge(f"dense matrix of {self.n_qubits} qubits exceeds {max_qubits}")
        return self._tables.dense_columns(np.arange(2 ** self.n_qubits, dtype=np.int64))


def _as_index(state, M):
    if isinstance(state, str):
        if len(state) != M:
            raise ShapeError(f"bit-string {state!r} has length {len(state)}, expected {M}")
        return int(state, 2)
    return int(state)


class _TransitionTable:
    """Terms grouped by flip mask for O(M) matrix-element evaluation.

    For a term with masks ``(x, z)`` and real coefficient ``c``,
    ``<n ^ x| P |n> = c * i**popcount(x & z) * (-1)**popcount(n & z)``.
    """

    def __init__(self, h):
        self.M = h.n_qubits
        groups = {}
        for coef, word in h.terms:
            x, z = word_to_masks(word)
            phase = (1, 1j, -1, -1j)[bin(x & z).count("1") % 4]
            groups.setdefault(x, ([], []))
            groups[x][0].append(z)
            groups[x][1].append(coef * phase)
        self.groups = {
            x: (np.array(zs, dtype=np.int64), np.array(cs, dtype=complex))
            for x, (zs, cs) in groups.items()
        }

    def element(self, m, n):
        group = self.groups.get(m ^ n)
        if group is None:
            return 0.0
        zs, cs = group
        signs = 1 - 2 * (popcount(n & zs) & 1)
        value = complex(np.dot(cs, signs))
        if abs(value.imag) >= IMAG_TOL:
            raise ImaginaryResidue(f"<{m}|H|{n}> has imaginary part {value.imag:.3e}")
        return value.real

    def submatrix(self, idx):
        k = len(idx)
        out = np.zeros((k, k), dtype=complex)
        flips = idx[:, None] ^ idx[None, :]
        for x in np.unique(flips):
            group = self.groups.get(int(x))
            if group is None:
                continue
            zs, cs = group
            rows, cols = np.nonzero(flips == x)
            signs = 1 - 2 * (popcount(idx[cols][:, None] & zs[None, :]) & 1)
            out[rows, cols] = signs @ cs
        return _real_or_raise(out)

    def dense_columns(self, idx):
        """Matrix over the basis subset ``idx`` (sorted); amplitude leaving the subset is an error."""
        k = len(idx)
        out = np.zeros((k, k), dtype=complex)
        full = k == 2 ** self.M
        for x, (zs, cs) in self.groups.items():
            rows = idx ^ x
            if full:
                pos = rows
                keep = slice(None)
            else:
                pos = np.searchsorted(idx, rows)
                pos_c = np.minimum(pos, k - 1)
                keep = idx[pos_c] == rows
                pos = pos_c[keep]
            vals = np.zeros(k, dtype=complex)
            for z, c in zip(zs, cs):
                vals += c * (1 - 2 * (popcount(idx & z) & 1))
            if not full and not np.all(keep):
                if np.max(np.abs(vals[~keep]), initial=0.0) > IMAG_TOL:
                    raise ValueError("basis subset is not invariant under the Hamiltonian")
            cols = np.arange(k)[keep]
            np.add.at(out, (pos, cols), vals[keep])
        return _real_or_raise(out)


def _real_or_raise(mat):
    if mat.size and np.max(np.abs(mat.imag)) >= IMAG_TOL:
        raise ImaginaryResidue(f"matrix has imaginary part up to {np.max(np.abs(mat.imag)):.3e}")
    return np.ascontiguousarray(mat.real)


def transition_element(m, n, h):
    """``<m|H|n>`` for computational basis states given as bit-strings or indices."""
    return h.transition_element(m, n)


def format_pauli_text(h):
    lines = [f"# qubits: {h.n_qubits}"]
    lines += [f"{coef:.17g} {word}" for coef, word in h.terms]
    return "\n".join(lines) + "\n"


def parse_pauli_text(text):
    n_qubits = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            if key.strip().lower() == "qubits":
                try:
                    n_qubits = int(value)
                except ValueError:
                    raise ParseError(f"bad qubit count {value.strip()!r}", lineno) from None
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'coefficient word', got {line!r}", lineno)
        try:
            coef = float(parts[0])
        except ValueError:
            raise ParseError(f"non-numeric coefficient {parts[0]!r}", lineno) from None
        word = parts[1].upper()
        if set(word) - set(_AXES):
            raise ParseError(f"invalid Pauli word {parts[1]!r}", lineno)
        if n_qubits is None:
            n_qubits = len(word)
        if len(word) != n_qubits:
            raise ParseError(f"word {word!r} does not have {n_qubits} qubits", lineno)
        terms.append((coef, word))
    if n_qubits is None:
        raise ParseError("no '# qubits: M' header and no terms", 1)
    return PauliHamiltonian(n_qubits, tuple(terms))


def read_pauli_text(path):
    return parse_pauli_text(Path(path).read_text(encoding="utf-8"))


def write_pauli_text(h, path):
    Path(path).write_text(format_pauli_text(h), encoding="utf-8")
