"""Bundled STO-3G Hamiltonians (H2, HeH+, He2, active-space LiH).

Each fixture exists as an FCIDUMP and as a blocked-ordering pauli_text file;
``manifest.json`` records the reference energies used by the tests.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .hamiltonian import read_pauli_text

MOLECULES = ("h2", "heh+", "he2", "as-lih")


def data_dir():
    return Path(str(resources.files("varqa") / "data"))


@lru_cache(maxsize=None)
def _manifest():
    return tuple(json.loads((data_dir() / "manifest.json").read_text()))


def manifest(molecule=None):
    """Manifest entries, optionally for one molecule, sorted by distance."""
    rows = [dict(r) for r in _manifest() if molecule is None or r["molecule"] == molecule]
    return sorted(rows, key=lambda r: (r["molecule"], r["distance"]))


def entry(molecule, distance):
    for row in manifest(molecule):
        if abs(row["distance"] - distance) < 5e-4:
            return row
    raise KeyError(f"no {molecule} fixture at {distance} Angstrom")


def distances(molecule):
    return [r["distance"] for r in manifest(molecule)]


def fixture_path(molecule, distance, fmt="pauli_text"):
    row = entry(molecule, distance)
    return data_dir() / row["pauli" if fmt == "pauli_text" else "fcidump"]


def load(molecule, distance):
    """PauliHamiltonian of a bundled fixture."""
    return read_pauli_text(fixture_path(molecule, distance))
