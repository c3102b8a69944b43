"""Molecular Hamiltonians: integrals, Jordan-Wigner mapping, exact diagonalization."""
from .ed import (
    DEFAULT_ALPHA,
    DeflatedHamiltonian,
    Spectrum,
    deflate,
    exact_diagonalize,
    number_operator,
    sz_operator,
)
from .integrals import (
    BLOCKED,
    INTERLEAVED,
    ORDERINGS,
    MolecularIntegrals,
    format_fcidump,
    parse_fcidump,
    read_fcidump,
    to_spin_orbitals,
)
from .jw import jordan_wigner, molecular_hamiltonian
from .pauli import (
    PauliHamiltonian,
    format_pauli_text,
    parse_pauli_text,
    read_pauli_text,
    transition_element,
    write_pauli_text,
)

__all__ = [
    "BLOCKED", "DEFAULT_ALPHA", "DeflatedHamiltonian", "INTERLEAVED", "MolecularIntegrals", "ORDERINGS",
    "PauliHamiltonian", "Spectrum", "deflate", "exact_diagonalize", "format_fcidump",
    "format_pauli_text", "jordan_wigner", "molecular_hamiltonian", "number_operator",
    "parse_fcidump", "parse_pauli_text", "read_fcidump", "read_pauli_text", "sz_operator",
    "to_spin_orbitals", "transition_element", "write_pauli_text",
]
