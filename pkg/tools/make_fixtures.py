#!/usr/bin/env python3
"""Regenerate the bundled STO-3G Hamiltonian fixtures.

Needs PySCF, which is a development-time dependency only; the package reads
the committed FCIDUMP / pauli_text files and never imports it.

    python tools/make_fixtures.py [--out src/varqa/data]
"""
import argparse
import json
from pathlib import Path

import numpy as np
from pyscf import ao2mo, fci, gto, mcscf, scf

from varqa.hamiltonian import (
    MolecularIntegrals,
    exact_diagonalize,
    format_fcidump,
    format_pauli_text,
    molecular_hamiltonian,
)

DISTANCES = [round(0.2 + 0.025 * i, 3) for i in range(72)] + [0.735]

MOLECULES = {
    # name: (atoms, charge, active (n_elec, n_orb) or None)
    "h2": (("H", "H"), 0, None),
    "heh+": (("He", "H"), 1, None),
    "he2": (("He", "He"), 0, None),
    "as-lih": (("Li", "H"), 0, (2, 2)),
}


def integrals_for(atoms, charge, active, d):
    mol = gto.M(atom=f"{atoms[0]} 0 0 0; {atoms[1]} 0 0 {d}", basis="sto-3g",
                charge=charge, unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.max_cycle = 200
    mf.kernel()
    if not mf.converged:
        mf = scf.newton(mf).run()
    if active is None:
        c = mf.mo_coeff
        n = c.shape[1]
        h1 = c.T @ mf.get_hcore() @ c
        h2 = ao2mo.restore(1, ao2mo.full(mol, c), n)
        core = mol.energy_nuc()
        nelec = mol.nelectron
        e_fci = fci.FCI(mf).kernel()[0]
    else:
        ne, n = active
        cas = mcscf.CASCI(mf, n, ne)
        h1, core = cas.get_h1eff()
        h2 = ao2mo.restore(1, cas.get_h2eff(), n)
        nelec = ne
        e_fci = cas.kernel()[0]
    h1 = 0.5 * (h1 + h1.T)
    return MolecularIntegrals(n, nelec, 0, core, h1, h2), float(e_fci)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/varqa/data"))
    args = ap.parse_args()
    out = Path(args.out)
    manifest = []
    for name, (atoms, charge, active) in MOLECULES.items():
        folder = out / name
        folder.mkdir(parents=True, exist_ok=True)
        for d in sorted(DISTANCES):
            mi, e_fci = integrals_for(atoms, charge, active, d)
            stem = f"{name}_{d:.3f}"
            (folder / f"{stem}.fcidump").write_text(format_fcidump(mi))
            h = molecular_hamiltonian(mi, "blocked")
            (folder / f"{stem}.pauli").write_text(format_pauli_text(h))
            spec = exact_diagonalize(h)
            sector = spec.in_sector(mi.n_electrons, mi.ms2)
            e_sector = float(spec.eigenvalues[sector[0]])
            if abs(e_sector - e_fci) > 1e-8:
                raise SystemExit(f"{stem}: sector ED {e_sector} disagrees with FCI {e_fci}")
            manifest.append({
                "molecule": name,
                "distance": d,
                "pauli": f"{name}/{stem}.pauli",
                "fcidump": f"{name}/{stem}.fcidump",
                "n_electrons": mi.n_electrons,
                "ordering": "blocked",
                "fci_energy": e_fci,
                "ed_ground_energy": spec.ground_energy,
                "ed_ground_sector": list(spec.sector_labels[0]),
            })
            print(f"{stem}: E_fci={e_fci:.10f} E_ed={spec.ground_energy:.10f} {spec.sector_labels[0]}")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")

    h = molecular_hamiltonian(
        integrals_for(*MOLECULES["h2"][:2], None, 1.95)[0], "blocked")
    gs = exact_diagonalize(h).ground_state
    amps = {format(i, "04b"): round(float(a), 4) for i, a in enumerate(gs) if abs(a) > 1e-6}
    print("H2 1.950 ground-state amplitudes:", amps)


if __name__ == "__main__":
    np.set_printoptions(precision=6)
    main()
