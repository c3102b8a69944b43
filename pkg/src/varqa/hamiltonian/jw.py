"""Jordan-Wigner mapping of second-quantized Hamiltonians onto Pauli words.

Products of Pauli operators are tracked in the form ``c * X^x Z^z`` (all X
factors to the left), where ``x`` and ``z`` are bit masks. Multiplying two
such operators only needs ``(-1)**popcount(z1 & x2)``, so whole batches of
ladder-operator products can be formed with integer array operations.
"""
from __future__ import annotations

import numpy as np

from ..errors import ImaginaryResidue
from .pauli import IMAG_TOL, PRUNE_THRESHOLD, PauliHamiltonian, masks_to_word, popcount


def _product_terms(indices, daggers, coeffs, M):
    """Expand ``coeffs[t] * prod_k op_k(indices[k][t])`` into XZ-form arrays.

    ``daggers[k]`` tells whether factor ``k`` is a creation operator. Each ladder
    operator is ``0.5 * X^e Z^below  -/+ 0.5 * X^e Z^(e|below)``.
    """
    n_factors = len(indices)
    e_all, below_all, ez_all = [], [], []
    for idx in indices:
        e = np.left_shift(1, M - 1 - idx).astype(np.int64)
        below = (((1 << M) - 1) ^ (np.left_shift(1, M - idx) - 1)).astype(np.int64)
        e_all.append(e)
        below_all.append(below)
        ez_all.append(e | below)
    xs, zs, cs = [], [], []
    for choice in range(2 ** n_factors):
        x = np.zeros_like(indices[0])
        z = np.zeros_like(indices[0])
        c = coeffs.astype(complex) * 0.5 ** n_factors
        for k in range(n_factors):
            pick = (choice >> k) & 1
            fx = e_all[k]
            fz = ez_all[k] if pick else below_all[k]
            if pick and not daggers[k]:
                c = -c
            c = c * (1 - 2 * (popcount(z & fx) & 1))
            x = x ^ fx
            z = z ^ fz
        xs.append(x)
        zs.append(z)
        cs.append(c)
    return np.concatenate(xs), np.concatenate(zs), np.concatenate(cs)


def jordan_wigner(h_so, g_so, core_energy=0.0, prune=PRUNE_THRESHOLD):
    """Map ``sum h a+_p a_q + 0.5 sum g a+_p a+_q a_r a_s + core`` to a PauliHamiltonian.

    Raises :class:`ImaginaryResidue` when a merged coefficient keeps an imaginary
    part above 1e-10, which happens for non-Hermitian (asymmetric) integrals.
    """
    h_so = np.asarray(h_so, dtype=float)
    g_so = np.asarray(g_so, dtype=float)
    M = h_so.shape[0]
    xs, zs, cs = [np.zeros(1, np.int64)], [np.zeros(1, np.int64)], [np.array([complex(core_energy)])]

    p, q = np.nonzero(np.abs(h_so) > 0)
    if len(p):
        x, z, c = _product_terms([p, q], (True, False), h_so[p, q], M)
        xs.append(x)
        zs.append(z)
        cs.append(c)

    p, q, r, s = np.nonzero(np.abs(g_so) > 0)
    # a+_p a+_p and a_r a_r vanish identically
    keep = (p != q) & (r != s)
    p, q, r, s = p[keep], q[keep], r[keep], s[keep]
    if len(p):
        x, z, c = _product_terms([p, q, r, s], (True, True, False, False), 0.5 * g_so[p, q, r, s], M)
        xs.append(x)
        zs.append(z)
        cs.append(c)

    x = np.concatenate(xs)
    z = np.concatenate(zs)
    c = np.concatenate(cs)
    # X^x Z^z equals the Pauli word with Y where both bits are set, times (-i)^|x&z|
    c = c * np.array([1, -1j, -1, 1j])[popcount(x & z) % 4]
    keys, inverse = np.unique(x * (1 << M) + z, return_inverse=True)
    total = np.zeros(len(keys), dtype=complex)
    np.add.at(total, inverse, c)
    bad = np.abs(total.imag) > IMAG_TOL
    if np.any(bad):
        k = int(np.argmax(np.abs(total.imag)))
        word = masks_to_word(int(keys[k] >> M), int(keys[k] & ((1 << M) - 1)), M)
        raise ImaginaryResidue(f"coefficient of {word} has imaginary part {total[k].imag:.3e}")
    terms = tuple(
        (float(t.real), masks_to_word(int(key >> M), int(key & ((1 << M) - 1)), M))
        for key, t in zip(keys, total)
    )
    return PauliHamiltonian(M, terms, prune)


def molecular_hamiltonian(mi, ordering="blocked"):
    """Integrals -> qubit Hamiltonian under the chosen spin-orbital ordering."""
    from .integrals import to_spin_orbitals

    h_so, g_so, _ = to_spin_orbitals(mi, ordering)
    return jordan_wigner(h_so, g_so, mi.core_energy)
