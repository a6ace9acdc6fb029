"""Molecule container, MOL2 / SDF V2000 readers and writers, charge files.

Formal charges in MOL2
----------------------
MOL2 has no standard formal-charge column.  Two sources are read, in
this order of precedence:

1. a trailing comment on an ATOM record of the form ``# fc=<int>``, e.g.::

       2 O2  1.2000  0.0000  0.0000 O.co2  1 ACT  -0.5000  # fc=-1

2. ``charge <int>`` attributes in a ``@<TRIPOS>UNITY_ATOM_ATTR`` section.

Atoms with neither get formal charge 0.  :func:`write_mol2` emits the
comment form for every atom with a non-zero formal charge.

Charge files
------------
:func:`write_charge_file` writes 8 values per line, each ``%10.6f``,
with a trailing newline; an empty charge list gives an empty string.
"""

from __future__ import annotations

import enum
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from graphqeq.errors import (
    DisconnectedMolecule,
    InvalidArgument,
    ParseError,
    UnsupportedElement,
)

ELEMENTS = ("H", "Li", "C", "N", "O", "F", "Na", "Mg", "P", "S", "Cl", "K", "Ca", "Br", "I")
ELEMENT_INDEX = {symbol: i for i, symbol in enumerate(ELEMENTS)}

CHARGES_PER_LINE = 8


class BondKind(enum.IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


@dataclass(frozen=True, slots=True)
class AtomRecord:
    element: str
    formal_charge: int = 0
    aromatic_flag: bool | None = None

    def __post_init__(self):
        if self.element not in ELEMENT_INDEX:
            raise UnsupportedElement(self.element)


@dataclass(frozen=True)
class Molecule:
    """A single connected molecule.

    ``bonds`` holds ``(i, j, BondKind)`` triples with 0-based atom indices.
    ``coordinates`` is either None or one ``(x, y, z)`` tuple (Å) per atom.
    Construction validates indices, duplicate bonds, coordinate count and
    connectivity.
    """

    atoms: tuple[AtomRecord, ...]
    bonds: tuple[tuple[int, int, BondKind], ...] = ()
    coordinates: tuple[tuple[float, float, float], ...] | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple((int(a), int(b), BondKind(k)) for a, b, k in self.bonds))
        if self.coordinates is not None:
            coords = tuple(tuple(float(c) for c in xyz) for xyz in self.coordinates)
            object.__setattr__(self, "coordinates", coords)
        self._validate()

    def _validate(self):
        n = len(self.atoms)
        if n == 0:
            raise InvalidArgument("molecule has no atoms")
        seen = set()
        for a, b, _ in self.bonds:
            if not (0 <= a < n and 0 <= b < n):
                raise InvalidArgument(f"bond ({a}, {b}) references a missing atom")
            if a == b:
                raise InvalidArgument(f"bond ({a}, {b}) is a self-loop")
            key = (a, b) if a < b else (b, a)
            if key in seen:
                raise InvalidArgument(f"duplicate bond {key}")
            seen.add(key)
        if self.coordinates is not None:
            if len(self.coordinates) != n:
                raise InvalidArgument(f"{len(self.coordinates)} coordinates for {n} atoms")
            if any(len(xyz) != 3 for xyz in self.coordinates):
                raise InvalidArgument("coordinates must be (x, y, z) triples")
        if n_components(n, self.bonds) != 1:
            raise DisconnectedMolecule(
                f"molecule {self.name!r} has disconnected fragments; charge each fragment separately"
            )

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def net_charge(self) -> int:
        return sum(atom.formal_charge for atom in self.atoms)

    @property
    def elements(self) -> list[str]:
        return [atom.element for atom in self.atoms]

    def edge_index(self) -> np.ndarray:
        """Bond endpoints as an ``(n_bonds, 2)`` int64 array."""
        if not self.bonds:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(a, b) for a, b, _ in self.bonds], dtype=np.int64)

    def coordinate_array(self) -> np.ndarray:
        if self.coordinates is None:
            raise InvalidArgument(f"molecule {self.name!r} has no coordinates")
        return np.asarray(self.coordinates, dtype=np.float64)

    def neighbors(self) -> list[list[int]]:
        adj = [[] for _ in self.atoms]
        for a, b, _ in self.bonds:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def permuted(self, order: Sequence[int]) -> "Molecule":
        """Relabel atoms so that new atom ``k`` is old atom ``order[k]``."""
        if sorted(order) != list(range(self.n_atoms)):
            raise InvalidArgument("order is not a permutation of the atom indices")
        new_index = {old: new for new, old in enumerate(order)}
        coords = None
        if self.coordinates is not None:
            coords = tuple(self.coordinates[old] for old in order)
        return Molecule(
            atoms=tuple(self.atoms[old] for old in order),
            bonds=tuple((new_index[a], new_index[b], k) for a, b, k in self.bonds),
            coordinates=coords,
            name=self.name,
        )


def n_components(n_atoms: int, bonds: Iterable[tuple[int, int, object]]) -> int:
    parent = list(range(n_atoms))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    count = n_atoms
    for a, b, _ in bonds:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            count -= 1
    return count


@dataclass(frozen=True)
class ChargeResult:
    charges: np.ndarray
    net_charge: int

    @property
    def residual(self) -> float:
        """Σq − Q, which should be at rounding level."""
        return float(np.sum(self.charges, dtype=np.float64) - self.net_charge)

    def __len__(self):
        return len(self.charges)


def normalize_element(symbol: str) -> str:
    symbol = symbol.strip()
    return symbol[:1].upper() + symbol[1:].lower()


def _make_atom(element: str, formal_charge: int, aromatic: bool | None, line: int) -> AtomRecord:
    element = normalize_element(element)
    if element not in ELEMENT_INDEX:
        raise UnsupportedElement(element, line=line)
    return AtomRecord(element, formal_charge, aromatic)


def _build(atoms, bonds, coords, name, line=None) -> Molecule:
    try:
        return Molecule(atoms=atoms, bonds=bonds, coordinates=coords, name=name)
    except (InvalidArgument,) as exc:
        raise ParseError(str(exc), line=line) from exc


# ---------------------------------------------------------------------------
# MOL2

_MOL2_BOND_KINDS = {
    "1": BondKind.SINGLE,
    "2": BondKind.DOUBLE,
    "3": BondKind.TRIPLE,
    "ar": BondKind.AROMATIC,
    "am": BondKind.SINGLE,
}
_FC_COMMENT = re.compile(r"\bfc\s*=\s*([+-]?\d+)")


def _mol2_sections(lines):
    """Map section name -> list of (lineno, text) for the first molecule."""
    sections = {}
    current = None
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if stripped.startswith("@<TRIPOS>"):
            name = stripped[len("@<TRIPOS>"):].upper()
            if name == "MOLECULE" and "MOLECULE" in sections:
                break
            current = name
            sections[current] = [(lineno, raw)]
            continue
        if current is not None and stripped and not stripped.startswith("#"):
            sections[current].append((lineno, raw))
    return sections


def parse_mol2(text: str) -> Molecule:
    """Parse the first molecule of a TRIPOS MOL2 text.

    Elements come from the SYBYL atom type (``C.ar`` -> C), aromatic
    flags from ``.ar`` types or ``ar`` bonds, coordinates from the ATOM
    records.  Only the first ``@<TRIPOS>MOLECULE`` record is read.
    """
    sections = _mol2_sections(text.splitlines())
    for required in ("MOLECULE", "ATOM", "BOND"):
        if required not in sections:
            raise ParseError(f"missing @<TRIPOS>{required} section")

    header = sections["MOLECULE"]
    name = header[1][1].strip() if len(header) > 1 else ""
    n_atoms_decl = n_bonds_decl = None
    if len(header) > 2:
        lineno, counts = header[2]
        fields = counts.split()
        try:
            n_atoms_decl = int(fields[0])
            n_bonds_decl = int(fields[1]) if len(fields) > 1 else None
        except (ValueError, IndexError):
            raise ParseError("bad MOLECULE counts line", line=lineno) from None

    elements, charges, coords, ar_types, id_to_index = [], [], [], [], {}
    for lineno, raw in sections["ATOM"][1:]:
        body, _, comment = raw.partition("#")
        fields = body.split()
        if len(fields) < 6:
            raise ParseError("ATOM record needs at least 6 fields", line=lineno)
        try:
            xyz = (float(fields[2]), float(fields[3]), float(fields[4]))
        except ValueError:
            raise ParseError("non-numeric coordinate", line=lineno) from None
        atom_id = fields[0]
        if atom_id in id_to_index:
            raise ParseError(f"duplicate atom id {atom_id}", line=lineno)
        sybyl = fields[5]
        element = normalize_element(sybyl.split(".")[0])
        if element not in ELEMENT_INDEX:
            raise UnsupportedElement(element, line=lineno)
        fc = 0
        match = _FC_COMMENT.search(comment)
        if match:
            fc = int(match.group(1))
        id_to_index[atom_id] = len(elements)
        elements.append(element)
        charges.append(fc)
        coords.append(xyz)
        ar_types.append(sybyl.lower().endswith(".ar"))

    n = len(elements)
    if n_atoms_decl is not None and n_atoms_decl != n:
        raise ParseError(f"header declares {n_atoms_decl} atoms, found {n}", line=header[2][0])

    bonds = []
    aromatic = list(ar_types)
    bond_lines = sections["BOND"][1:]
    for lineno, raw in bond_lines:
        fields = raw.split("#")[0].split()
        if len(fields) < 4:
            raise ParseError("BOND record needs 4 fields", line=lineno)
        a, b = id_to_index.get(fields[1]), id_to_index.get(fields[2])
        if a is None or b is None:
            raise ParseError(f"bond references unknown atom id {fields[1]!r} or {fields[2]!r}", line=lineno)
        kind = _MOL2_BOND_KINDS.get(fields[3].lower())
        if kind is None:
            raise ParseError(f"unsupported bond type {fields[3]!r}", line=lineno)
        if kind is BondKind.AROMATIC:
            aromatic[a] = aromatic[b] = True
        bonds.append((a, b, kind))
    if n_bonds_decl is not None and n_bonds_decl != len(bonds):
        raise ParseError(f"header declares {n_bonds_decl} bonds, found {len(bonds)}", line=header[2][0])

    _apply_unity_attrs(sections.get("UNITY_ATOM_ATTR"), id_to_index, charges)

    atoms = [AtomRecord(el, fc, ar) for el, fc, ar in zip(elements, charges, aromatic)]
    last_line = bond_lines[-1][0] if bond_lines else None
    return _build(atoms, bonds, coords, name, line=last_line)


def _apply_unity_attrs(section, id_to_index, charges):
    if not section:
        return
    rows = section[1:]
    i = 0
    while i < len(rows):
        lineno, raw = rows[i]
        fields = raw.split()
        try:
            atom_id, n_attr = fields[0], int(fields[1])
        except (ValueError, IndexError):
            raise ParseError("bad UNITY_ATOM_ATTR header", line=lineno) from None
        if atom_id not in id_to_index:
            raise ParseError(f"UNITY_ATOM_ATTR for unknown atom id {atom_id}", line=lineno)
        for lineno, raw in rows[i + 1 : i + 1 + n_attr]:
            key, _, value = raw.strip().partition(" ")
            if key.lower() == "charge":
                try:
                    charges[id_to_index[atom_id]] = int(value)
                except ValueError:
                    raise ParseError("non-integer charge attribute", line=lineno) from None
        i += 1 + n_attr


def _sybyl_type(mol: Molecule, i: int, kinds: list[set]) -> str:
    atom = mol.atoms[i]
    if atom.aromatic_flag:
        return f"{atom.element}.ar"
    if atom.element in ("C", "N", "O", "S", "P"):
        if BondKind.TRIPLE in kinds[i]:
            return f"{atom.element}.1"
        if BondKind.DOUBLE in kinds[i]:
            return f"{atom.element}.2"
        return f"{atom.element}.3"
    return atom.element


def write_mol2(mol: Molecule) -> str:
    kinds = [set() for _ in mol.atoms]
    for a, b, k in mol.bonds:
        kinds[a].add(k)
        kinds[b].add(k)
    coords = mol.coordinates or [(0.0, 0.0, 0.0)] * mol.n_atoms
    out = [
        "@<TRIPOS>MOLECULE",
        mol.name,
        f"{mol.n_atoms} {mol.n_bonds} 1 0 0",
        "SMALL",
        "NO_CHARGES",
        "",
        "@<TRIPOS>ATOM",
    ]
    for i, (atom, (x, y, z)) in enumerate(zip(mol.atoms, coords), start=1):
        line = (
            f"{i:7d} {atom.element}{i:<4d} {x:10.4f} {y:10.4f} {z:10.4f} "
            f"{_sybyl_type(mol, i - 1, kinds):<6s} 1 MOL 0.0000"
        )
        if atom.formal_charge:
            line += f"  # fc={atom.formal_charge}"
        out.append(line)
    out.append("@<TRIPOS>BOND")
    for j, (a, b, k) in enumerate(mol.bonds, start=1):
        label = "ar" if k is BondKind.AROMATIC else str(int(k))
        out.append(f"{j:6d} {a + 1:5d} {b + 1:5d} {label}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# SDF V2000

# legacy atom-block charge codes; M  CHG lines take precedence
_SDF_CHARGE_CODES = {0: 0, 1: 3, 2: 2, 3: 1, 5: -1, 6: -2, 7: -3}


def _parse_molblock(lines: list[str], offset: int = 0) -> tuple[Molecule, int]:
    """Parse one V2000 molfile block; returns the molecule and the index of
    the line after ``M  END``.  ``offset`` is added to reported line numbers."""
    if len(lines) < 4:
        raise ParseError("molfile block is shorter than its header", line=offset + len(lines))
    name = lines[0].strip()
    counts = lines[3]
    count_line = offset + 4
    if "V3000" in counts:
        raise ParseError("V3000 molfiles are not supported", line=count_line)
    if "V2000" not in counts:
        raise ParseError("counts line lacks V2000 version tag", line=count_line)
    try:
        n_atoms, n_bonds = int(counts[0:3]), int(counts[3:6])
    except ValueError:
        raise ParseError("bad counts line", line=count_line) from None

    atom_lines = lines[4 : 4 + n_atoms]
    bond_lines = lines[4 + n_atoms : 4 + n_atoms + n_bonds]
    if len(atom_lines) != n_atoms or len(bond_lines) != n_bonds:
        raise ParseError("file ends before the atom/bond blocks declared in the counts line", line=count_line)

    elements, charges, coords = [], [], []
    for k, raw in enumerate(atom_lines):
        lineno = offset + 5 + k
        if raw.startswith("M  "):
            raise ParseError(f"counts line declares {n_atoms} atoms but the atom block is shorter", line=lineno)
        try:
            xyz = (float(raw[0:10]), float(raw[10:20]), float(raw[20:30]))
        except ValueError:
            raise ParseError("bad atom coordinates", line=lineno) from None
        symbol = raw[31:34].strip()
        element = normalize_element(symbol)
        if element not in ELEMENT_INDEX:
            raise UnsupportedElement(element or symbol, line=lineno)
        code_field = raw[36:39].strip()
        try:
            code = int(code_field) if code_field else 0
        except ValueError:
            raise ParseError("bad charge code", line=lineno) from None
        elements.append(element)
        charges.append(_SDF_CHARGE_CODES.get(code, 0))
        coords.append(xyz)

    bonds = []
    aromatic = [None] * n_atoms
    for k, raw in enumerate(bond_lines):
        lineno = offset + 5 + n_atoms + k
        if raw.startswith("M  "):
            raise ParseError(f"counts line declares {n_bonds} bonds but the bond block is shorter", line=lineno)
        try:
            a, b, order = int(raw[0:3]), int(raw[3:6]), int(raw[6:9])
        except ValueError:
            raise ParseError("bad bond record", line=lineno) from None
        if not (1 <= a <= n_atoms and 1 <= b <= n_atoms):
            raise ParseError(f"bond references atom outside 1..{n_atoms}", line=lineno)
        if order not in (1, 2, 3, 4):
            raise ParseError(f"unsupported bond order {order}", line=lineno)
        if order == 4:
            aromatic[a - 1] = aromatic[b - 1] = True
        bonds.append((a - 1, b - 1, BondKind(order)))

    pos = 4 + n_atoms + n_bonds
    chg_seen = False
    while True:
        if pos >= len(lines):
            raise ParseError("missing 'M  END'", line=offset + pos)
        raw = lines[pos]
        lineno = offset + pos + 1
        pos += 1
        if raw.startswith("M  END"):
            break
        if raw.startswith("M  CHG"):
            if not chg_seen:
                charges = [0] * n_atoms
                chg_seen = True
            fields = raw[6:].split()
            try:
                count = int(fields[0])
                pairs = [int(f) for f in fields[1 : 1 + 2 * count]]
            except (ValueError, IndexError):
                raise ParseError("bad M  CHG line", line=lineno) from None
            if len(pairs) != 2 * count:
                raise ParseError("M  CHG entry count mismatch", line=lineno)
            for idx, value in zip(pairs[::2], pairs[1::2]):
                if not 1 <= idx <= n_atoms:
                    raise ParseError(f"M  CHG references atom {idx}", line=lineno)
                charges[idx - 1] = value

    atoms = [AtomRecord(el, fc, ar) for el, fc, ar in zip(elements, charges, aromatic)]
    return _build(atoms, bonds, coords, name, line=count_line), pos


def parse_sdf(text: str) -> Molecule:
    """Parse the first record of an SDF (V2000 molfile) text."""
    mol, _ = _parse_molblock(text.splitlines())
    return mol


def write_sdf(mol: Molecule) -> str:
    """V2000 molfile block ending in ``M  END`` (no ``$$$$``)."""
    if mol.n_atoms > 999 or mol.n_bonds > 999:
        raise InvalidArgument("V2000 counts are limited to 999 atoms and bonds")
    coords = mol.coordinates or [(0.0, 0.0, 0.0)] * mol.n_atoms
    out = [mol.name, "  graphqeq", "", f"{mol.n_atoms:3d}{mol.n_bonds:3d}  0  0  0  0  0  0  0  0999 V2000"]
    for atom, (x, y, z) in zip(mol.atoms, coords):
        out.append(f"{x:10.4f}{y:10.4f}{z:10.4f} {atom.element:<3s} 0  0  0  0  0  0  0  0  0  0  0  0")
    for a, b, k in mol.bonds:
        out.append(f"{a + 1:3d}{b + 1:3d}{int(k):3d}  0")
    charged = [(i + 1, atom.formal_charge) for i, atom in enumerate(mol.atoms) if atom.formal_charge]
    for start in range(0, len(charged), 8):
        chunk = charged[start : start + 8]
        out.append(f"M  CHG{len(chunk):3d}" + "".join(f"{i:4d}{c:4d}" for i, c in chunk))
    out.append("M  END")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# charge files


def write_charge_file(result: ChargeResult | Sequence[float]) -> str:
    charges = result.charges if isinstance(result, ChargeResult) else result
    values = [f"{float(q):10.6f}" for q in charges]
    lines = ["".join(values[i : i + CHARGES_PER_LINE]) for i in range(0, len(values), CHARGES_PER_LINE)]
    return "".join(line + "\n" for line in lines)


def read_charge_file(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split()], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"bad charge value: {exc}") from None


def read_molecule_file(path) -> Molecule:
    """Dispatch on suffix: ``.mol2`` or ``.sdf`` / ``.mol``."""
    path = str(path)
    with open(path) as fh:
        text = fh.read()
    lower = path.lower()
    if lower.endswith(".mol2"):
        return parse_mol2(text)
    if lower.endswith((".sdf", ".mol", ".sd")):
        return parse_sdf(text)
    raise InvalidArgument(f"cannot infer molecule format from {path!r} (expected .mol2 or .sdf)")


# ---------------------------------------------------------------------------
# labelled datasets: SDF records carrying a "partial_charges" data item

DATASET_TAG = "partial_charges"


def write_dataset(records: Iterable[tuple[Molecule, Sequence[float]]]) -> str:
    chunks = []
    for mol, charges in records:
        chunks.append(write_sdf(mol) + f"> <{DATASET_TAG}>\n" + write_charge_file(charges) + "\n$$$$\n")
    return "".join(chunks)


def read_dataset(text: str) -> list[tuple[Molecule, np.ndarray]]:
    lines = text.splitlines()
    records = []
    start = 0
    while start < len(lines):
        if not lines[start].strip() and all(not line.strip() for line in lines[start:]):
            break
        mol, pos = _parse_molblock(lines[start:], offset=start)
        pos += start
        charges = None
        while pos < len(lines) and lines[pos].strip() != "$$$$":
            if lines[pos].startswith(">") and f"<{DATASET_TAG}>" in lines[pos]:
                block = []
                pos += 1
                while pos < len(lines) and lines[pos].strip() and lines[pos].strip() != "$$$$":
                    block.append(lines[pos])
                    pos += 1
                charges = read_charge_file("\n".join(block))
                continue
            pos += 1
        if charges is None:
            raise ParseError(f"record {mol.name!r} has no <{DATASET_TAG}> block", line=start + 1)
        if len(charges) != mol.n_atoms:
            raise ParseError(f"record {mol.name!r}: {len(charges)} charges for {mol.n_atoms} atoms", line=start + 1)
        records.append((mol, charges))
        start = pos + 1
    return records


# ---------------------------------------------------------------------------
# synthetic chains


def _alkane(n: int) -> Molecule:
    atoms = [AtomRecord("C") for _ in range(n)]
    bonds = [(i, i + 1, BondKind.SINGLE) for i in range(n - 1)]
    for c in range(n):
        n_h = 4 if n == 1 else (3 if c in (0, n - 1) else 2)
        for _ in range(n_h):
            bonds.append((c, len(atoms), BondKind.SINGLE))
            atoms.append(AtomRecord("H"))
    return Molecule(atoms=atoms, bonds=bonds, name=f"alkane_{n}")


def _pseudo_peptide(n: int) -> Molecule:
    """ACE-(ALA)n-NME topology: 6 + 10 n + 6 atoms."""
    atoms: list[AtomRecord] = []
    bonds: list[tuple[int, int, BondKind]] = []

    def add(element, bonded_to=None, kind=BondKind.SINGLE):
        atoms.append(AtomRecord(element))
        idx = len(atoms) - 1
        if bonded_to is not None:
            bonds.append((bonded_to, idx, kind))
        return idx

    methyl = add("C")
    for _ in range(3):
        add("H", methyl)
    carbonyl = add("C", methyl)
    add("O", carbonyl, BondKind.DOUBLE)
    for _ in range(n):
        nitrogen = add("N", carbonyl)
        add("H", nitrogen)
        alpha = add("C", nitrogen)
        add("H", alpha)
        beta = add("C", alpha)
        for _ in range(3):
            add("H", beta)
        carbonyl = add("C", alpha)
        add("O", carbonyl, BondKind.DOUBLE)
    nitrogen = add("N", carbonyl)
    add("H", nitrogen)
    cap = add("C", nitrogen)
    for _ in range(3):
        add("H", cap)
    return Molecule(atoms=atoms, bonds=bonds, name=f"pseudo_peptide_{n}")


def generate_chain(n_units: int, kind: str = "alkane") -> Molecule:
    """Deterministic linear test molecule whose size grows linearly in ``n_units``.

    ``alkane`` gives C_n H_{2n+2}; ``pseudo_peptide`` gives an
    acetyl-(alanine)_n-methylamide topology with 10 n + 12 atoms.
    """
    if not isinstance(n_units, (int, np.integer)) or n_units < 1:
        raise InvalidArgument(f"n_units must be a positive integer, got {n_units!r}")
    if kind == "alkane":
        return _alkane(int(n_units))
    if kind == "pseudo_peptide":
        return _pseudo_peptide(int(n_units))
    raise InvalidArgument(f"unknown chain kind {kind!r}")
