"""SMILES reader and writer for the OpenSMILES core grammar.

Supported: organic-subset atoms, bracket atoms
``[isotope? symbol chirality? Hcount? charge? :class?]``, lowercase aromatic
atoms, bonds ``- = # : / \\``, branches, ring closures ``0-9``/``%nn`` and
the ``.`` component separator. Chirality and bond direction are kept as
opaque annotations.
"""

from __future__ import annotations

import heapq
import re
from typing import Optional, Sequence

from chemtune.chem.elements import BY_SYMBOL, ORGANIC_SUBSET
from chemtune.chem.errors import (
    RingClosureError,
    SmilesSyntaxError,
    UnknownElementError,
)
from chemtune.chem.molecule import (
    AROMATIC,
    DOUBLE,
    H_SLOT,
    SINGLE,
    TRIPLE,
    Atom,
    Bond,
    Molecule,
)

_TOKEN = re.compile(
    r"(Cl|Br|[BCNOPSFI])"  # 1 aliphatic organic atom
    r"|([bcnops])"  # 2 aromatic organic atom
    r"|(\[[^\]\[]*\])"  # 3 bracket atom
    r"|([-=#:/\\])"  # 4 bond
    r"|(\d|%\d\d)"  # 5 ring closure
    r"|(\()"  # 6
    r"|(\))"  # 7
    r"|(\.)"  # 8
)
_BRACKET = re.compile(
    r"\[(\d{1,4})?"
    r"([A-Z][a-z]?|se|as|te|[bcnops])"
    r"(@(?:@|TH[12]|AL[12]|SP[1-3]|TB(?:1\d|20|[1-9])|OH(?:[12]\d|30|[1-9]))?)?"
    r"(H\d?)?"
    r"(\+\+|--|[+-](?:\d{1,2})?)?"
    r"(?::(\d{1,6}))?\]"
)
_BOND_ORDER = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC, "/": SINGLE, "\\": SINGLE}
_AROMATIC_BRACKET = {"b", "c", "n", "o", "p", "s", "se", "as", "te"}
_ELEMENT_START = re.compile(r"[A-Z][a-z]?")

# Organic-subset atoms are interned: most atoms in real data are one of these.
_ORGANIC = {s: Atom(BY_SYMBOL[s]) for s in ORGANIC_SUBSET}
_AROMATIC_ORGANIC = {s: Atom(BY_SYMBOL[s.upper()], aromatic=True) for s in "bcnops"}


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8", "surrogatepass"))


def _parse_bracket(token: str, text: str, pos: int) -> Atom:
    m = _BRACKET.fullmatch(token)
    if m is None:
        sym = re.match(r"\[\d*([A-Za-z][a-z]?)", token)
        if sym and sym.group(1) not in BY_SYMBOL and sym.group(1) not in _AROMATIC_BRACKET:
            if sym.group(1)[0] not in BY_SYMBOL:
                raise UnknownElementError(
                    f"unknown element {sym.group(1)!r}", _byte_offset(text, pos)
                )
        raise SmilesSyntaxError(f"malformed bracket atom {token!r}", _byte_offset(text, pos))
    iso, sym, chir, hcount, charge, amap = m.groups()
    aromatic = sym[0].islower()
    if aromatic:
        sym = sym.capitalize()
    elem = BY_SYMBOL.get(sym)
    if elem is None:
        raise UnknownElementError(f"unknown element {sym!r}", _byte_offset(text, pos))
    if charge is None:
        q = 0
    elif charge == "++":
        q = 2
    elif charge == "--":
        q = -2
    else:
        q = int(charge[1:] or 1) * (1 if charge[0] == "+" else -1)
    h = 0 if hcount is None else int(hcount[1:] or 1)
    return Atom(
        elem,
        int(iso) if iso else None,
        q,
        h,
        aromatic,
        int(amap) or None if amap else None,
        chir,
    )


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a :class:`Molecule`.

    Atom order follows left-to-right appearance. Raises a
    :class:`~chemtune.chem.errors.ChemError` subclass carrying the byte
    offset of the problem.
    """
    if not isinstance(text, str):
        raise TypeError("SMILES must be a str")
    lead = len(text) - len(text.lstrip())
    body = text.strip()
    if not body:
        raise SmilesSyntaxError("empty SMILES", 0)

    def fail(cls, msg, at):
        raise cls(msg, _byte_offset(text, lead + at))

    atoms: list[Atom] = []
    bonds: list[Bond] = []
    pairs: dict[tuple[int, int], int] = {}
    stereo: dict[int, list] = {}
    branches: list[int] = []
    rings: dict[str, tuple[int, Optional[str], int]] = {}
    prev = -1
    pending: Optional[str] = None
    pending_at = 0
    last = 0  # 0 start, 1 atom, 2 bond, 3 ring, 4 open, 5 close, 6 dot
    pos = 0

    def add_bond(i: int, j: int, sym: Optional[str], at: int, opener: int = -1) -> None:
        key = (i, j) if i < j else (j, i)
        if i == j:
            fail(RingClosureError, "ring closure bonds an atom to itself", at)
        if key in pairs:
            fail(RingClosureError, "duplicate bond between the same atoms", at)
        if sym is None:
            order = AROMATIC if atoms[i].aromatic and atoms[j].aromatic else SINGLE
            direction = None
        else:
            order = _BOND_ORDER[sym]
            direction = sym if sym in "/\\" else None
            if order == AROMATIC and not (atoms[i].aromatic and atoms[j].aromatic):
                fail(SmilesSyntaxError, "aromatic bond between non-aromatic atoms", at)
        pairs[key] = len(bonds)
        bonds.append(Bond(i, j, order, direction))
        if stereo:
            # the ring opener already holds a placeholder slot for this bond
            if i in stereo and i != opener:
                stereo[i].append(j)
            if j in stereo and j != opener:
                stereo[j].append(i)

    for m in _TOKEN.finditer(body):
        start = m.start()
        if start != pos:
            _bad_char(body, pos, fail)
        pos = m.end()
        kind = m.lastindex
        if kind <= 3:
            if kind == 1:
                atom = _ORGANIC[m.group(1)]
            elif kind == 2:
                atom = _AROMATIC_ORGANIC[m.group(2)]
            else:
                atom = _parse_bracket(m.group(3), text, lead + start)
            idx = len(atoms)
            atoms.append(atom)
            if atom.chirality is not None:
                stereo[idx] = []
            if prev >= 0:
                add_bond(prev, idx, pending, start)
            elif pending is not None:
                fail(SmilesSyntaxError, "bond without a preceding atom", pending_at)
            if atom.chirality is not None and atom.explicit_h:
                stereo[idx].append(H_SLOT)
            pending = None
            prev = idx
            last = 1
        elif kind == 4:
            if last not in (1, 3, 4, 5) or pending is not None:
                fail(SmilesSyntaxError, "misplaced bond symbol", start)
            pending = m.group(4)
            pending_at = start
            last = 2
        elif kind == 5:
            if prev < 0 or last not in (1, 2, 3, 5):
                fail(SmilesSyntaxError, "ring closure without an atom", start)
            if last == 5:
                fail(SmilesSyntaxError, "ring closure after a branch", start)
            digit = m.group(5)
            if digit in rings:
                j, sym, _ = rings.pop(digit)
                if (
                    sym is not None
                    and pending is not None
                    and _BOND_ORDER[sym] != _BOND_ORDER[pending]
                ):
                    fail(SmilesSyntaxError, "conflicting ring-closure bond orders", start)
                if j in stereo:
                    _fill_ring_slot(stereo[j], digit, prev)
                if sym is not None:
                    # a bond written at the opening digit reads opener -> closer
                    add_bond(j, prev, sym, start, opener=j)
                else:
                    add_bond(prev, j, pending, start, opener=j)
            else:
                rings[digit] = (prev, pending, start)
                if prev in stereo:
                    stereo[prev].append(("ring", digit))
            pending = None
            last = 3
        elif kind == 6:
            if prev < 0 or pending is not None or last == 4:
                fail(SmilesSyntaxError, "misplaced '('", start)
            branches.append(prev)
            last = 4
        elif kind == 7:
            if not branches:
                fail(SmilesSyntaxError, "unbalanced parenthesis", start)
            if last in (2, 4):
                fail(SmilesSyntaxError, "empty branch or dangling bond", start)
            prev = branches.pop()
            last = 5
        else:
            if last in (0, 2, 4, 6) or branches:
                fail(SmilesSyntaxError, "misplaced '.'", start)
            prev = -1
            last = 6
    if pos != len(body):
        _bad_char(body, pos, fail)
    if branches:
        fail(SmilesSyntaxError, "unbalanced parenthesis", len(body))
    if pending is not None:
        fail(SmilesSyntaxError, "dangling bond at end of input", pending_at)
    if last == 6:
        fail(SmilesSyntaxError, "dangling '.' at end of input", len(body) - 1)
    if rings:
        digit, (_, _, at) = min(rings.items(), key=lambda kv: kv[1][2])
        fail(RingClosureError, f"unmatched ring closure {digit}", at)

    mol = Molecule(atoms, bonds, {i: tuple(r) for i, r in stereo.items()})
    if any(b.order == AROMATIC for b in bonds):
        mol = _demote_acyclic_aromatic(mol)
    return mol


def _fill_ring_slot(refs: list, digit: str, partner: int) -> None:
    for k, r in enumerate(refs):
        if r == ("ring", digit):
            refs[k] = partner
            return


def _bad_char(body: str, pos: int, fail) -> None:
    ch = body[pos]
    if ch.isalpha():
        sym = _ELEMENT_START.match(body, pos)
        if sym and sym.group() in BY_SYMBOL:
            fail(SmilesSyntaxError, f"element {sym.group()} must be written in brackets", pos)
        if pos > 0 and body[pos - 1:pos + 1] in BY_SYMBOL:
            fail(
                SmilesSyntaxError,
                f"element {body[pos - 1:pos + 1]} must be written in brackets",
                pos - 1,
            )
        fail(UnknownElementError, f"unknown element at {body[pos:pos + 2]!r}", pos)
    if ch == "[":
        fail(SmilesSyntaxError, "unterminated bracket atom", pos)
    fail(SmilesSyntaxError, f"unexpected character {ch!r}", pos)


def _demote_acyclic_aromatic(mol: Molecule) -> Molecule:
    # An aromatic bond that is not on any cycle (biphenyl's linker written
    # without '-') is a single bond.
    ring = mol.ring_bonds
    bonds = list(mol.bonds)
    changed = False
    for k, b in enumerate(bonds):
        if b.order == AROMATIC and k not in ring:
            bonds[k] = b._replace(order=SINGLE)
            changed = True
    if not changed:
        return mol
    out = Molecule(mol.atoms, bonds, mol.stereo)
    out._ring_bonds = ring
    return out


# ---------------------------------------------------------------------------
# writer

FLIP_DIRECTION = {"/": "\\", "\\": "/"}


def _plain_hydrogens(mol: Molecule, i: int) -> Optional[int]:
    """Hydrogens a reader would infer for atom ``i`` written without brackets.

    Returns None when the atom cannot be written without brackets.
    """
    atom = mol.atoms[i]
    elem = atom.element
    if not elem.organic_subset:
        return None
    if atom.aromatic and elem.symbol not in ("B", "C", "N", "O", "P", "S"):
        return None
    bonds = mol.bonds
    total = 0
    n_arom = 0
    for _, k in mol.adjacency[i]:
        o = bonds[k].order
        if o == AROMATIC:
            n_arom += 1
            total += 1
        else:
            total += o
    for v in elem.default_valences:
        if v >= total:
            if atom.aromatic and n_arom and v > total:
                return v - total - 1
            return v - total
    return 0


def atom_token(mol: Molecule, i: int, chirality: Optional[str] = None) -> str:
    atom = mol.atoms[i]
    sym = atom.element.symbol
    if atom.aromatic:
        sym = sym.lower()
    h = mol.total_hs[i]
    chir = atom.chirality if chirality is None else chirality
    if (
        atom.isotope is None
        and not atom.charge
        and atom.atom_map is None
        and chir is None
        and _plain_hydrogens(mol, i) == h
    ):
        return sym
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(sym)
    if chir:
        parts.append(chir)
    if h:
        parts.append("H" if h == 1 else f"H{h}")
    q = atom.charge
    if q:
        sign = "+" if q > 0 else "-"
        parts.append(sign if abs(q) == 1 else f"{sign}{abs(q)}")
    if atom.atom_map is not None:
        parts.append(f":{atom.atom_map}")
    parts.append("]")
    return "".join(parts)


def _bond_token(mol: Molecule, k: int, src: int) -> str:
    bond = mol.bonds[k]
    order = bond.order
    if bond.direction is not None:
        return bond.direction if src == bond.a else FLIP_DIRECTION[bond.direction]
    if order == SINGLE:
        atoms = mol.atoms
        return "-" if atoms[bond.a].aromatic and atoms[bond.b].aromatic else ""
    if order == AROMATIC:
        return ""
    return "=" if order == DOUBLE else "#"


def _ring_label(d: int) -> str:
    return str(d) if d < 10 else f"%{d}"


def permutation_parity(src: Sequence, dst: Sequence) -> int:
    pos = {v: k for k, v in enumerate(src)}
    perm = [pos[v] for v in dst]
    parity = 0
    seen = [False] * len(perm)
    for k in range(len(perm)):
        if seen[k]:
            continue
        length = 0
        j = k
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


CHIRAL_FLIP = {"@": "@@", "@@": "@", "@TH1": "@TH2", "@TH2": "@TH1"}


def write_smiles(mol: Molecule, atom_order: Optional[Sequence[int]] = None) -> str:
    """Write ``mol`` as SMILES, traversing atoms by priority in ``atom_order``.

    Each component starts at its highest-priority unvisited atom and
    neighbours are visited in priority order. Defaults to index order.
    """
    n = len(mol.atoms)
    if n == 0:
        return ""
    if atom_order is None:
        prio = list(range(n))
    else:
        if sorted(atom_order) != list(range(n)):
            raise ValueError("atom_order must be a permutation of atom indices")
        prio = [0] * n
        for r, i in enumerate(atom_order):
            prio[i] = r
    adj = mol.adjacency
    sorted_adj = [sorted(nbrs, key=lambda e: prio[e[0]]) for nbrs in adj]
    starts = sorted(range(n), key=prio.__getitem__)

    # Pass 1: DFS spanning forest; non-tree edges become ring closures.
    visited = [False] * n
    parent_bond = [-1] * n
    children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    ring_at: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    visit_order: list[int] = []
    roots = []
    tree = set()
    for s in starts:
        if visited[s]:
            continue
        roots.append(s)
        visited[s] = True
        visit_order.append(s)
        stack = [(s, iter(sorted_adj[s]))]
        while stack:
            v, it = stack[-1]
            for w, k in it:
                if k == parent_bond[v]:
                    continue
                if not visited[w]:
                    visited[w] = True
                    visit_order.append(w)
                    parent_bond[w] = k
                    tree.add(k)
                    children[v].append((w, k))
                    stack.append((w, iter(sorted_adj[w])))
                    break
            else:
                stack.pop()
    emitted_rank = [0] * n
    for r, v in enumerate(visit_order):
        emitted_rank[v] = r
    for k, b in enumerate(mol.bonds):
        if k not in tree:
            ring_at[b.a].append((b.b, k))
            ring_at[b.b].append((b.a, k))

    # Pass 2: emit.
    out: list[str] = []
    free_digits: list[int] = []
    next_digit = 1
    open_rings: dict[int, int] = {}  # bond index -> digit
    for ci, root in enumerate(roots):
        if ci:
            out.append(".")
        stack = [("atom", root, -1)]
        while stack:
            item = stack.pop()
            if item[0] == "str":
                out.append(item[1])
                continue
            _, v, from_atom = item
            if from_atom >= 0:
                out.append(_bond_token(mol, parent_bond[v], from_atom))
            nbr_out: list[int] = [from_atom] if from_atom >= 0 else []
            ring_part: list[str] = []
            rank_v = emitted_rank[v]
            rings_here = ring_at[v]
            if rings_here:
                closes = [e for e in rings_here if emitted_rank[e[0]] < rank_v]
                opens = sorted(
                    (e for e in rings_here if emitted_rank[e[0]] > rank_v),
                    key=lambda e: prio[e[0]],
                )
            else:
                closes, opens = [], []
            closes.sort(key=lambda e: open_rings[e[1]])
            freed = []
            for w, k in closes:
                d = open_rings.pop(k)
                ring_part.append(_ring_label(d))
                freed.append(d)
                nbr_out.append(w)
            for w, k in opens:
                if free_digits:
                    d = heapq.heappop(free_digits)
                else:
                    d = next_digit
                    next_digit += 1
                open_rings[k] = d
                ring_part.append(_bond_token(mol, k, v) + _ring_label(d))
                nbr_out.append(w)
            for d in freed:
                heapq.heappush(free_digits, d)
            kids = children[v]
            nbr_out.extend(w for w, _ in kids)
            chir = None
            atom = mol.atoms[v]
            if atom.chirality is not None:
                chir = _restate_chirality(mol, v, nbr_out, from_atom < 0)
            out.append(atom_token(mol, v, chir))
            out.extend(ring_part)
            # Push children in reverse: last child continues the chain unbranched.
            for idx in range(len(kids) - 1, -1, -1):
                w, _ = kids[idx]
                if idx < len(kids) - 1:
                    stack.append(("str", ")"))
                    stack.append(("atom", w, v))
                    stack.append(("str", "("))
                else:
                    stack.append(("atom", w, v))
    return "".join(out)


def _restate_chirality(mol: Molecule, v: int, nbr_out: list[int], is_first: bool) -> str:
    chir = mol.atoms[v].chirality
    refs = mol.stereo.get(v)
    if chir not in CHIRAL_FLIP or refs is None:
        return chir
    order = list(nbr_out)
    if H_SLOT in refs:
        order.insert(0 if is_first else 1, H_SLOT)
    if sorted(order) != sorted(refs):
        return chir
    if permutation_parity(refs, order):
        return CHIRAL_FLIP[chir]
    return chir
