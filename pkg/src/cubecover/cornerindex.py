"""Bijection between corner configurations and the integers 1..88179840.

A corner permutation (24 corner facelets, local indices 0..23 for points
25..48) is split into the permutation ``sigma`` of the eight cubie slots and
a twist ``ori`` per slot.  The rank is ``3**7 * lehmer(sigma) + base3(ori[:7]) + 1``.

Slot ``i`` is the ``i``-th triple of ``CUBIE_TRIPLES``; the first facelet of a
triple is its U or D facelet and the other two follow in a fixed cyclic
order, so the solved state has all twists zero.  ``sigma[i]`` is the slot the
cubie from slot ``i`` moves to; ``ori[j]`` is the twist of the cubie arriving
in slot ``j``.
"""
from __future__ import annotations

import functools
from math import factorial

import numpy as np

from .errors import DomainError, InputError, InvariantError
from .permcore import NEDGE, cubie_groups, facelet_geometry

NRANKS = factorial(8) * 3 ** 7          # 88179840
EVEN_RANKS = NRANKS // 2                # corner images of E_f

# 1-based; reference facelet first, ring order fixed by corner_layout()
_TRIPLE_SETS = [
    (25, 31, 46), (26, 44, 38), (36, 40, 27), (29, 33, 45),
    (32, 47, 35), (39, 43, 37), (41, 28, 42), (34, 48, 30),
]

_FACT = np.array([factorial(7 - k) for k in range(8)], dtype=np.int64)
_POW3 = np.array([3 ** (6 - k) for k in range(7)], dtype=np.int64)


def _det(a, b, c):
    return (a[0] * (b[1] * c[2] - b[2] * c[1])
            - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))


def _ring(triple):
    """Order a triple as (ref, next, next) going clockwise seen from outside."""
    geo = facelet_geometry()
    ref, a, b = (x - 1 for x in triple)
    if _det(geo[ref][1], geo[a][1], geo[b][1]) > 0:
        a, b = b, a
    return (ref + 1, a + 1, b + 1)


@functools.lru_cache(maxsize=None)
def corner_layout(triples=None):
    """Validated ``(8, 3)`` array of local corner facelets, one row per slot.

    Raises ``InvariantError`` if the triples are not exactly the cubies of the
    derived geometry, a reference facelet is not on U or D, or a generator
    fails to move the triples rigidly.
    """
    triples = tuple(_TRIPLE_SETS) if triples is None else tuple(map(tuple, triples))
    _, corners = cubie_groups()
    got = sorted(tuple(sorted(x - 1 for x in t)) for t in triples)
    if got != sorted(corners):
        raise InvariantError("cubie triples do not match the facelet net")
    geo = facelet_geometry()
    rows = []
    for t in triples:
        if geo[t[0] - 1][1][1] == 0:
            raise InvariantError(f"reference facelet {t[0]} is not on U or D")
        rows.append([x - 1 - NEDGE for x in _ring(t)])
    layout = np.array(rows, dtype=np.intp)
    _check_rigid(layout)
    layout.flags.writeable = False
    return layout


def _check_rigid(layout):
    from .permcore import build_generators
    slot_of, twist_of = _lookup(layout)
    for n, g in enumerate(build_generators().s[:6]):
        c = g[NEDGE:] - NEDGE
        for i in range(8):
            dest = layout[i, 0]
            j, t = slot_of[c[dest]], twist_of[c[dest]]
            for r in range(3):
                if c[layout[i, r]] != layout[j, (r + t) % 3]:
                    raise InvariantError(f"generator {n + 1} is not rigid on slot {i + 1}")


def _lookup(layout):
    slot_of = np.empty(24, dtype=np.intp)
    twist_of = np.empty(24, dtype=np.intp)
    for i in range(8):
        for r in range(3):
            slot_of[layout[i, r]] = i
            twist_of[layout[i, r]] = r
    return slot_of, twist_of


@functools.lru_cache(maxsize=None)
def _tables():
    layout = corner_layout()
    slot_of, twist_of = _lookup(layout)
    return layout, slot_of, twist_of


def decompose(c):
    """``(sigma, ori)`` of a local corner permutation, both 0-based tuples."""
    layout, slot_of, twist_of = _tables()
    c = np.asarray(c)
    sigma = [0] * 8
    ori = [0] * 8
    for i in range(8):
        dest = c[layout[i, 0]]
        j, t = int(slot_of[dest]), int(twist_of[dest])
        for r in range(3):
            if c[layout[i, r]] != layout[j, (r + t) % 3]:
                raise DomainError("corner permutation does not move cubies rigidly")
        sigma[i] = j
        ori[j] = t
    return tuple(sigma), tuple(ori)


def compose_states(a, b):
    """Semidirect-product law matching ``compose``: state of "a then b"."""
    sa, oa = a
    sb, ob = b
    sigma = tuple(sb[sa[i]] for i in range(8))
    inv_b = [0] * 8
    for k in range(8):
        inv_b[sb[k]] = k
    ori = tuple((oa[inv_b[j]] + ob[j]) % 3 for j in range(8))
    return sigma, ori


def assemble(sigma, ori):
    """Local corner permutation of the state ``(sigma, ori)`` (0-based)."""
    layout = _tables()[0]
    c = np.empty(24, dtype=np.uint8)
    for i in range(8):
        j = sigma[i]
        for r in range(3):
            c[layout[i, r]] = layout[j, (r + ori[j]) % 3]
    return c


def rank_s8(sigma):
    """Number of permutations below ``sigma`` in lexicographic order."""
    sigma = list(sigma)
    if sorted(sigma) not in (list(range(8)), list(range(1, 9))):
        raise InputError(f"{sigma} is not a permutation of 8 values")
    total = 0
    for k in range(7):
        smaller = sum(1 for v in sigma[k + 1:] if v < sigma[k])
        total += factorial(7 - k) * smaller
    return total


def unrank_s8(n):
    if not 0 <= n < factorial(8):
        raise InputError(f"permutation rank {n} out of range")
    pool = list(range(8))
    out = []
    for k in range(8):
        d, n = divmod(n, factorial(7 - k))
        out.append(pool.pop(d))
    return tuple(out)


def rank_ori(ori):
    ori = [int(x) for x in ori]
    if len(ori) != 8 or any(x not in (0, 1, 2) for x in ori):
        raise InputError(f"bad orientation vector {ori}")
    if sum(ori) % 3:
        raise DomainError("corner twists do not sum to 0 mod 3")
    value = 0
    for x in ori[:7]:
        value = value * 3 + x
    return value


def unrank_ori(n):
    if not 0 <= n < 3 ** 7:
        raise InputError(f"orientation rank {n} out of range")
    trits = []
    for _ in range(7):
        n, t = divmod(n, 3)
        trits.append(t)
    trits.reverse()
    trits.append((-sum(trits)) % 3)
    return tuple(trits)


def rank(c):
    sigma, ori = decompose(c)
    return 3 ** 7 * rank_s8(sigma) + rank_ori(ori) + 1


def unrank(r):
    r = int(r)
    if not 1 <= r <= NRANKS:
        raise InputError(f"corner rank {r} outside 1..{NRANKS}")
    hi, lo = divmod(r - 1, 3 ** 7)
    return assemble(unrank_s8(hi), unrank_ori(lo))


# -- vectorised forms ---------------------------------------------------------

def ranks_from_ref_images(D, weights=_POW3):
    """Ranks from ``D[:, i]`` = local facelet where slot i's reference facelet lands."""
    _, slot_of, twist_of = _tables()
    sigma = slot_of[D]
    twist = twist_of[D]
    n = len(D)
    ori = np.empty((n, 8), dtype=np.int64)
    ori[np.arange(n)[:, None], sigma] = twist
    lehmer = np.zeros(n, dtype=np.int64)
    for k in range(7):
        smaller = (sigma[:, k + 1:] < sigma[:, k:k + 1]).sum(axis=1)
        lehmer += _FACT[k] * smaller
    return 2187 * lehmer + ori[:, :7] @ weights + 1


def rank_many(C):
    """Ranks of the rows of an ``(N, 24)`` array of local corner permutations."""
    layout = _tables()[0]
    return ranks_from_ref_images(np.asarray(C)[:, layout[:, 0]])


def sigma_parity_many(R):
    """0 for even cubie permutation, 1 for odd, for an array of ranks."""
    lehmer = (np.asarray(R, dtype=np.int64) - 1) // 2187
    parity = np.zeros(len(lehmer), dtype=np.int64)
    for k in range(7):
        parity += (lehmer // _FACT[k]) % (8 - k)
        lehmer = lehmer % _FACT[k]
    return parity & 1


def unrank_many(R):
    R = np.asarray(R, dtype=np.int64)
    if len(R) and (R.min() < 1 or R.max() > NRANKS):
        raise InputError("corner rank out of range")
    layout = _tables()[0]
    n = len(R)
    hi, lo = np.divmod(R - 1, 2187)
    sigma = np.empty((n, 8), dtype=np.intp)
    avail = np.ones((n, 8), dtype=bool)
    rows = np.arange(n)
    for k in range(8):
        d, hi = np.divmod(hi, _FACT[k])
        pick = ((np.cumsum(avail, axis=1) == (d + 1)[:, None]) & avail).argmax(axis=1)
        sigma[:, k] = pick
        avail[rows, pick] = False
    ori = np.empty((n, 8), dtype=np.intp)
    for k in range(6, -1, -1):
        lo, ori[:, k] = np.divmod(lo, 3)
    ori[:, 7] = (-ori[:, :7].sum(axis=1)) % 3
    C = np.empty((n, 24), dtype=np.uint8)
    for i in range(8):
        j = sigma[:, i]
        t = ori[rows, j]
        for r in range(3):
            C[:, layout[i, r]] = layout[j, (r + t) % 3]
    return C


def invert_many(C):
    Ci = np.empty_like(C)
    np.put_along_axis(Ci, C.astype(np.intp), np.arange(C.shape[1], dtype=C.dtype)[None, :], axis=1)
    return Ci


def bijectivity_selftest(start=1, stop=NRANKS, chunk=1 << 20, rank_fn=None):
    """True iff ``rank(unrank(r)) == r`` for every r in ``start..stop``.

    A round trip that holds on the whole range makes ``unrank`` injective
    into a set of size ``NRANKS``, hence the rank map is a bijection.
    ``rank_fn`` substitutes the ranking routine (used to check that a
    corrupted one is caught).
    """
    rank_fn = rank_fn or rank_many
    for lo in range(start, stop + 1, chunk):
        R = np.arange(lo, min(lo + chunk, stop + 1), dtype=np.int64)
        C = unrank_many(R)
        if not np.array_equal(rank_fn(C), R):
            return False
    return True
