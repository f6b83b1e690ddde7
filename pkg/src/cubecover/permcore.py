"""Facelet permutations of the cube: generators, products, words and projections.

Points are numbered 1..48 in all I/O (1..24 edge facelets, 25..48 corner
facelets, as laid out in ``NET``) and 0..47 internally.  A permutation is a
``uint8`` array ``p`` of length 48 with ``p[i]`` the point that ``i`` moves to.

Products follow the "apply the left factor first" convention, so
``compose(p, q)[i] == q[p[i]]`` and conjugation of ``x`` by ``h`` is
``compose(compose(inverse(h), x), h)``.
"""
from __future__ import annotations

import functools
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError, InvariantError, ParseError

NPOINTS = 48
NEDGE = 24

# Unfolded cube; numbers are facelet labels, letters mark face centres.
NET = """
 .  .  . 25  1 26  .  .  .  .  .  .
 .  .  .  8  U  2  .  .  .  .  .  .
 .  .  . 36  4 29  .  .  .  .  .  .
31  6 40 27 22 33 45 17 44 38 11 46
 3  L 12 15  F 18  9  R 13  5  B 19
28 20 47 35 23 43 37 21 48 30 24 42
 .  .  . 32 16 39  .  .  .  .  .  .
 .  .  . 14  D 10  .  .  .  .  .  .
 .  .  . 41  7 34  .  .  .  .  .  .
"""

FACES = "ULFBRD"
MOVE_NAMES = ("U", "L", "F", "B", "R", "D", "U'", "L'", "F'", "B'", "R'", "D'")

# outward normals, x to the right, y up, z towards the viewer
_NORMALS = {
    "U": (0, 1, 0), "D": (0, -1, 0), "L": (-1, 0, 0),
    "R": (1, 0, 0), "F": (0, 0, 1), "B": (0, 0, -1),
}
_BLOCKS = {"U": (0, 3), "L": (3, 0), "F": (3, 3), "R": (3, 6), "B": (3, 9), "D": (6, 3)}


def _net_coords(face, r, c):
    a, b = r - 1, c - 1
    return {
        "U": (b, 1, a), "F": (b, -a, 1), "D": (b, -1, -a),
        "L": (-1, -a, b), "R": (1, -a, -b), "B": (-b, -a, -1),
    }[face]


@functools.lru_cache(maxsize=None)
def facelet_geometry():
    """Map each 0-based point to ``(cubie position, outward normal)``."""
    rows = [line.split() for line in NET.strip().splitlines()]
    geo = {}
    for face, (r0, c0) in _BLOCKS.items():
        for r in range(3):
            for c in range(3):
                tok = rows[r0 + r][c0 + c]
                if tok.isdigit():
                    geo[int(tok) - 1] = (_net_coords(face, r, c), _NORMALS[face])
    if sorted(geo) != list(range(NPOINTS)):
        raise InvariantError("facelet net does not label 48 distinct points")
    return geo


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _quarter_turn(normal, v):
    # clockwise seen from outside: rotation by -90 degrees about the normal
    c = _cross(normal, v)
    d = sum(x * y for x, y in zip(normal, v))
    return tuple(-c[i] + normal[i] * d for i in range(3))


def cubie_groups():
    """Facelets grouped by cubie: (edge pairs, corner triples), 0-based, sorted."""
    by_pos = {}
    for pt, (pos, _) in facelet_geometry().items():
        by_pos.setdefault(pos, []).append(pt)
    edges = sorted(tuple(sorted(v)) for v in by_pos.values() if len(v) == 2)
    corners = sorted(tuple(sorted(v)) for v in by_pos.values() if len(v) == 3)
    return edges, corners


def _face_turn(face):
    geo = facelet_geometry()
    where = {v: k for k, v in geo.items()}
    n = _NORMALS[face]
    img = np.arange(NPOINTS, dtype=np.uint8)
    for pt, (pos, nrm) in geo.items():
        if sum(x * y for x, y in zip(pos, n)) == 1:
            img[pt] = where[(_quarter_turn(n, pos), _quarter_turn(n, nrm))]
    return img


def identity():
    return np.arange(NPOINTS, dtype=np.uint8)


def compose(p, q):
    """Apply ``p`` first, then ``q``."""
    return np.asarray(q)[np.asarray(p)]


def inverse(p):
    p = np.asarray(p)
    out = np.empty_like(p)
    out[p] = np.arange(len(p), dtype=p.dtype)
    return out


def conjugate(x, h):
    """``h^-1 x h``."""
    return compose(compose(inverse(h), x), h)


def is_identity(p):
    p = np.asarray(p)
    return bool(np.array_equal(p, np.arange(len(p))))


def from_cycles(cycles, n=NPOINTS):
    """Build a permutation from 1-based disjoint cycles."""
    img = np.arange(n, dtype=np.uint8)
    seen = set()
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            if not 1 <= a <= n or a in seen:
                raise InputError(f"bad cycle point {a}")
            seen.add(a)
            img[a - 1] = b - 1
    if len(set(img.tolist())) != n:
        raise InputError("cycles do not define a permutation")
    return img


def to_cycles(p):
    """Disjoint cycles of ``p`` with 1-based points, fixed points omitted."""
    p = np.asarray(p)
    seen = np.zeros(len(p), dtype=bool)
    out = []
    for i in range(len(p)):
        if seen[i] or p[i] == i:
            continue
        cyc = []
        j = i
        while not seen[j]:
            seen[j] = True
            cyc.append(j + 1)
            j = int(p[j])
        out.append(tuple(cyc))
    return out


def format_cycles(p):
    cycles = to_cycles(p)
    if not cycles:
        return "()"
    return "".join("(" + ",".join(map(str, c)) + ")" for c in cycles)


@dataclass(frozen=True)
class GeneratorSet:
    """``s[0..11]`` = U, L, F, B, R, D and their inverses, as 48-point images.

    ``s`` is stacked as a ``(12, 48)`` array so that word evaluation can index
    it directly; move number ``n`` (1..12) is row ``n - 1``.
    """
    s: np.ndarray

    def __getitem__(self, n):
        return self.s[n - 1]

    @property
    def checksum(self):
        import hashlib
        return hashlib.sha256(self.s.tobytes()).hexdigest()[:16]


def _check_generators(s):
    ident = identity()
    for n in range(6):
        if not np.array_equal(compose(s[n], s[n + 6]), ident):
            raise InvariantError(f"s[{n + 7}] is not the inverse of s[{n + 1}]")
        p = ident
        for k in range(1, 5):
            p = compose(p, s[n])
            if is_identity(p) != (k == 4):
                raise InvariantError(f"{FACES[n]} does not have order 4")
    for p in s:
        if not (p[:NEDGE] < NEDGE).all() or not (p[NEDGE:] >= NEDGE).all():
            raise InvariantError("generator mixes edge and corner facelets")
    edges, corners = cubie_groups()
    for groups in (edges, corners):
        sets = {frozenset(g) for g in groups}
        for n in range(6):
            moved = 0
            for g in groups:
                image = frozenset(int(s[n][x]) for x in g)
                if image not in sets:
                    raise InvariantError(f"{FACES[n]} does not move cubies rigidly")
                moved += image != frozenset(g)
            if moved != 4:
                raise InvariantError(f"{FACES[n]} moves {moved} cubies, expected 4")


@functools.lru_cache(maxsize=None)
def build_generators():
    """Derive the twelve quarter turns from ``NET`` and validate them.

    Fails loudly if the derived turns break any generator invariant or do not
    reproduce the conjugation action of the two symmetry generators on T.
    """
    faces = [_face_turn(f) for f in FACES]
    s = np.stack(faces + [inverse(p) for p in faces])
    _check_generators(s)
    s.flags.writeable = False
    gens = GeneratorSet(s)
    from .symmetry import check_printed_action
    check_printed_action(gens)
    return gens


def check_word(w):
    w = [int(x) for x in w]
    for i, x in enumerate(w):
        if not 1 <= x <= 12:
            raise InputError(f"move index {x} at position {i} outside 1..12")
    return w


def mult_el(w, gens=None):
    """Left-to-right product ``s[w[0]] * s[w[1]] * ...``; identity for ``[]``."""
    s = (gens or build_generators()).s
    p = identity()
    for x in check_word(w):
        p = s[x - 1][p]
    return p


def mult_words(words, gens=None):
    """Evaluate many words at once; ``words`` is a list of move lists."""
    s = (gens or build_generators()).s
    out = np.tile(identity(), (len(words), 1))
    if not words:
        return out
    longest = max(len(w) for w in words)
    padded = np.zeros((len(words), longest), dtype=np.int64)
    for i, w in enumerate(words):
        padded[i, :len(w)] = check_word(w)
    for k in range(longest):
        m = padded[:, k]
        act = m > 0
        if act.any():
            out[act] = np.take_along_axis(s[m[act] - 1], out[act].astype(np.intp), axis=1)
    return out


def invg(w):
    """Word of the inverse element: reversed, each move swapped with its inverse."""
    return [(x + 5) % 12 + 1 for x in reversed(check_word(w))]


def project_edges(p):
    p = np.asarray(p)
    if not (p[:NEDGE] < NEDGE).all():
        raise InvariantError("edge facelets are not mapped among themselves")
    return p[:NEDGE].copy()


def project_corners(p):
    p = np.asarray(p)
    if not (p[NEDGE:] >= NEDGE).all():
        raise InvariantError("corner facelets are not mapped among themselves")
    return p[NEDGE:] - NEDGE


def _perm_parity(perm):
    perm = list(perm)
    seen = [False] * len(perm)
    parity = 0
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


def word_parity(p):
    """Parity (0 even, 1 odd) of every word for ``p``, read off the corner cubies."""
    from .cornerindex import decompose
    sigma, _ = decompose(project_corners(p))
    return _perm_parity(sigma)


_TOKEN = re.compile(r"\s*([ULFBRD])(['2]?)")


def parse_moves(text):
    """Parse face-turn notation (``U``, ``U'``, ``U2``) into a move list.

    Half turns become two quarter turns.
    """
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            offset = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unknown move token {text[offset:offset + 3]!r}", offset)
        n = FACES.index(m.group(1)) + 1
        suffix = m.group(2)
        if suffix == "'":
            out.append(n + 6)
        elif suffix == "2":
            out.extend((n, n))
        else:
            out.append(n)
        pos = m.end()
        if pos < len(text) and not text[pos].isspace() and text[pos] not in FACES:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
    return out


def format_moves(w):
    return " ".join(MOVE_NAMES[x - 1] for x in check_word(w))


def fixes_all_cubies(p):
    """True if every cubie is in its home slot (orientation may differ)."""
    edges, corners = cubie_groups()
    p = np.asarray(p)
    return all(set(p[list(g)].tolist()) == set(g) for g in edges + corners)


def require_edges_fixed(p):
    if not is_identity(project_edges(p)):
        raise DomainError("edge projection is not the identity; the state is not in E_f")
