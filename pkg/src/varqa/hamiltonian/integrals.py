"""Molecular integrals: FCIDUMP I/O and spin-orbital expansion."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError, ShapeError

SYMMETRY_TOL = 1e-12

BLOCKED = "blocked"
INTERLEAVED = "interleaved"
ORDERINGS = (BLOCKED, INTERLEAVED)


@dataclass(frozen=True, eq=False)
class MolecularIntegrals:
    """One- and two-electron integrals over spatial orbitals (Hartree).

    ``two_body`` is in chemists' notation, ``two_body[i, j, k, l] = (ij|kl)``.
    ``core_energy`` holds nuclear repulsion plus any frozen-core constant.
    """

    n_spatial_orbitals: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray

    def __post_init__(self):
        n = self.n_spatial_orbitals
        h = np.asarray(self.one_body, dtype=float)
        g = np.asarray(self.two_body, dtype=float)
        if h.shape != (n, n):
            raise ShapeError(f"one_body has shape {h.shape}, expected {(n, n)}")
        if g.shape != (n, n, n, n):
            raise ShapeError(f"two_body has shape {g.shape}, expected {(n,) * 4}")
        if self.n_electrons < 0 or self.n_electrons > 2 * n:
            raise ValueError(f"{self.n_electrons} electrons do not fit in {n} spatial orbitals")
        if not np.allclose(h, h.T, rtol=0, atol=SYMMETRY_TOL):
            raise ValueError("one_body is not symmetric")
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(g, g.transpose(perm), rtol=0, atol=SYMMETRY_TOL):
                raise ValueError(f"two_body lacks permutational symmetry {perm}")
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "one_body", h)
        object.__setattr__(self, "two_body", g)
        object.__setattr__(self, "core_energy", float(self.core_energy))


_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_namelist(text, first_line):
    body = re.sub(r"&\s*FCI\b", " ", text, flags=re.IGNORECASE)
    body = re.sub(r"&\s*END\b|/\s*$", " ", body, flags=re.IGNORECASE)
    matches = list(_KEY_RE.finditer(body))
    if not matches:
        raise ParseError("header has no KEY=VALUE entries", first_line)
    fields = {}
    for k, match in enumerate(matches):
        end = matches[k + 1].start() if k + 1 < len(matches) else len(body)
        raw = body[match.end():end].replace("\n", " ").strip().strip(",")
        values = [v for v in re.split(r"[,\s]+", raw) if v]
        try:
            fields[match.group(1).upper()] = [int(v) for v in values]
        except ValueError:
            raise ParseError(f"non-integer value for {match.group(1)}: {raw!r}", first_line) from None
    for key in ("NORB", "NELEC"):
        if len(fields.get(key, [])) != 1:
            raise ParseError(f"header is missing a single {key} value", first_line)
    return fields


def _is_data_line(line):
    parts = line.split()
    if len(parts) != 5:
        return False
    try:
        float(parts[0].replace("D", "E").replace("d", "e"))
        [int(p) for p in parts[1:]]
    except ValueError:
        return False
    return True


def parse_fcidump(text):
    """Parse FCIDUMP text into fully symmetrized :class:`MolecularIntegrals`."""
    lines = text.splitlines()
    start = 0
    while start < len(lines) and not lines[start].strip():
        start += 1
    if start == len(lines):
        raise ParseError("empty input", 1)

    header_end = start
    if lines[start].lstrip().startswith("&"):
        while header_end < len(lines):
            stripped = lines[header_end].strip()
            if re.search(r"&\s*END\b", stripped, re.IGNORECASE) or stripped == "/":
                break
            header_end += 1
        else:
            raise ParseError("unterminated &FCI namelist", start + 1)
        header_end += 1
    else:
        while header_end < len(lines) and not _is_data_line(lines[header_end]):
            header_end += 1
    fields = _parse_namelist("\n".join(lines[start:header_end]), start + 1)

    norb = fields["NORB"][0]
    nelec = fields["NELEC"][0]
    ms2 = fields.get("MS2", [0])[0]
    if norb < 1:
        raise ParseError(f"NORB must be positive, got {norb}", start + 1)

    h = np.zeros((norb, norb))
    g = np.zeros((norb, norb, norb, norb))
    core = 0.0
    for lineno, line in enumerate(lines[header_end:], start=header_end + 1):
        parts = line.split()
        if not parts or parts[0].startswith(("#", "!")):
            continue
        if len(parts) != 5:
            raise ParseError(f"expected 'value i j k l', got {line.strip()!r}", lineno)
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
        except ValueError:
            raise ParseError(f"non-numeric integral value {parts[0]!r}", lineno) from None
        try:
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError:
            raise ParseError(f"non-integer orbital index in {line.strip()!r}", lineno) from None
        for idx in (i, j, k, l):
            if not 0 <= idx <= norb:
                raise IndexError(f"line {lineno}: orbital index {idx} outside [0, {norb}]")
        if i == j == k == l == 0:
            core = value
        elif k == l == 0:
            if j == 0:
                continue  # orbital energy line, not needed
            h[i - 1, j - 1] = h[j - 1, i - 1] = value
        else:
            if 0 in (i, j, k, l):
                raise ParseError(f"partially zero two-body index in {line.strip()!r}", lineno)
            i, j, k, l = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k)):
                g[a, b, c, d] = value
                g[c, d, a, b] = value
    return MolecularIntegrals(norb, nelec, ms2, core, h, g)


def read_fcidump(path):
    return parse_fcidump(Path(path).read_text(encoding="utf-8"))


def format_fcidump(mi, tol=1e-15):
    """Render integrals as FCIDUMP text using the 8-fold unique index set."""
    n = mi.n_spatial_orbitals
    out = [f" &FCI NORB={n},NELEC={mi.n_electrons},MS2={mi.ms2},",
           "  ORBSYM=" + "1," * n, "  ISYM=1,", " &END"]
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    v = mi.two_body[i, j, k, l]
                    if abs(v) > tol:
                        out.append(f" {v: .16e} {i + 1:4d} {j + 1:4d} {k + 1:4d} {l + 1:4d}")
    for i in range(n):
        for j in range(i + 1):
            v = mi.one_body[i, j]
            if abs(v) > tol:
                out.append(f" {v: .16e} {i + 1:4d} {j + 1:4d}    0    0")
    out.append(f" {mi.core_energy: .16e}    0    0    0    0")
    return "\n".join(out) + "\n"


def spin_orbital_index(p, spin, n_spatial, ordering=BLOCKED):
    """Spin-orbital (qubit, zero-based) index of spatial orbital ``p`` with ``spin`` 0=alpha, 1=beta."""
    if ordering == BLOCKED:
        return p + spin * n_spatial
    if ordering == INTERLEAVED:
        return 2 * p + spin
    raise ValueError(f"unknown ordering {ordering!r}; expected one of {ORDERINGS}")


def spin_labels(n_spatial, ordering=BLOCKED):
    """Spin (0=alpha, 1=beta) of each spin orbital under ``ordering``."""
    labels = np.empty(2 * n_spatial, dtype=int)
    for p in range(n_spatial):
        for s in (0, 1):
            labels[spin_orbital_index(p, s, n_spatial, ordering)] = s
    return labels


def to_spin_orbitals(mi, ordering=BLOCKED):
    """Expand spatial integrals to spin orbitals.

    Returns ``(h_so, g_so, M)`` where ``g_so`` is in the physicists' layout used by
    ``0.5 * g[p, q, r, s] a+_p a+_q a_r a_s``, i.e. ``g_so[p, q, r, s] = (ps|qr)``.
    """
    n = mi.n_spatial_orbitals
    M = 2 * n
    perm = np.array([spin_orbital_index(p, s, n, ordering) for s in (0, 1) for p in range(n)])
    # build in blocked layout, then permute to the requested ordering
    h_blk = np.kron(np.eye(2), mi.one_body)
    chem = np.zeros((M, M, M, M))
    for s1 in (0, 1):
        for s2 in (0, 1):
            a, b = slice(s1 * n, (s1 + 1) * n), slice(s2 * n, (s2 + 1) * n)
            chem[a, a, b, b] = mi.two_body
    g_blk = chem.transpose(0, 2, 3, 1)  # (ps|qr) -> g[p, q, r, s]
    inv = np.argsort(perm)
    h_so = h_blk[np.ix_(inv, inv)]
    g_so = g_blk[np.ix_(inv, inv, inv, inv)]
    return h_so, g_so, M
