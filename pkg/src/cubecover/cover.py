"""Covering E_f with words of length <= 22.

For a seed ``g`` (an edge element of length <= 10) every product in
``S(10, g) * S(12, g^-1)`` fixes the edges and has length <= 22.  A ledger
bit per corner rank records which E_f elements have a word; one word per
≈ class is kept in a positions store and the whole class is marked.
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import cornerindex as ci
from .errors import (
    DomainError, IncompleteCoverError, InputError, StoreIntegrityError, VerificationError,
)
from .permcore import NEDGE, identity, invg, is_identity, mult_words
from .search import default_index, edge_keys, edge_perms, make_set
from .symmetry import build_m

log = logging.getLogger(__name__)

MAX_WORD = 22
NORBIT = 96


# -- orbits ---------------------------------------------------------------------

def _corner_symmetry(M):
    Mc = (M.elements[:, NEDGE:] - NEDGE).astype(np.intp)
    ref = ci.corner_layout()[:, 0]
    # columns to read from y for each h: h^-1[ref]
    cols = Mc[M.inv][:, ref]
    return Mc, cols


def orbit_ranks(C, M=None):
    """``(N, 96)`` ranks of the ≈ orbit of each local corner permutation.

    Column ``k`` is conjugation by ``M.elements[k]`` for ``k < 48`` and
    conjugation of the inverse by ``M.elements[k - 48]`` otherwise.
    """
    M = M or build_m()
    Mc, cols = _corner_symmetry(M)
    C = np.asarray(C)
    out = np.empty((len(C), 2 * M.order), dtype=np.int64)
    for half, Y in enumerate((C, ci.invert_many(C))):
        for i in range(M.order):
            out[:, half * M.order + i] = ci.ranks_from_ref_images(Mc[i][Y[:, cols[i]]])
    return out


def eq_class_rel2(el, M=None):
    """Ranks of every corner configuration ≈-equivalent to ``el``."""
    el = np.asarray(el)
    if el.shape == (48,):
        el = el[NEDGE:] - NEDGE
    return set(orbit_ranks(el[None, :], M)[0].tolist())


# -- ledger -----------------------------------------------------------------

def _odd_lehmer():
    return ci.sigma_parity_many(np.arange(40320, dtype=np.int64) * 3 ** 7 + 1).astype(bool)


MAGIC_LEDGER = b"QTMV"
MAGIC_STORE = b"QTMP"
FORMAT_VERSION = 1


class CoverLedger:
    """One bit per corner rank, ``True`` while the rank is unchecked."""

    def __init__(self, bits=None):
        if bits is None:
            bits = np.ones(ci.NRANKS, dtype=bool)
        self.bits = bits

    @property
    def checked_count(self):
        return ci.NRANKS - int(np.count_nonzero(self.bits))

    @property
    def left(self):
        return ci.EVEN_RANKS - self.checked_count

    def unchecked(self, ranks):
        return self.bits[np.asarray(ranks, dtype=np.int64) - 1]

    def write_rcv(self, ranks):
        """Mark ``ranks`` as checked; idempotent."""
        r = np.asarray(list(ranks) if isinstance(ranks, (set, frozenset)) else ranks,
                       dtype=np.int64).ravel()
        if len(r) and (r.min() < 1 or r.max() > ci.NRANKS):
            raise InputError("rank outside 1..88179840")
        self.bits[r - 1] = False
        return self

    def odd_marked(self):
        """True if any rank with an odd cubie permutation is marked."""
        rows = self.bits.reshape(-1, 3 ** 7)
        return not rows[_odd_lehmer()].all()

    def progress_line(self):
        return f"Positions checked:{self.checked_count} Positions left:{self.left}"

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(MAGIC_LEDGER)
            fh.write(np.array([FORMAT_VERSION], dtype="<u4").tobytes())
            fh.write(np.packbits(self.bits, bitorder="little").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != MAGIC_LEDGER:
            raise InputError(f"{path} is not a ledger file")
        packed = np.frombuffer(data[8:], dtype=np.uint8)
        if len(packed) != ci.NRANKS // 8:
            raise InputError(f"{path} has {len(packed)} bytes of bits, expected {ci.NRANKS // 8}")
        return cls(np.unpackbits(packed, bitorder="little").astype(bool))


# -- positions store ----------------------------------------------------------

class PositionsStore(dict):
    """Class-representative rank (the class minimum) -> witness word."""

    def save(self, path):
        keys = np.array(sorted(self), dtype="<u4")
        lengths = np.array([len(self[k]) for k in keys.tolist()], dtype=np.uint8)
        width = int(lengths.max(initial=0)) + 1 & ~1
        W = np.zeros((len(keys), width), dtype=np.uint8)
        for row, k in enumerate(keys.tolist()):
            W[row, :lengths[row]] = self[k]
        rec = np.zeros((len(keys), 5 + width // 2), dtype=np.uint8)
        rec[:, :4] = keys.view(np.uint8).reshape(-1, 4)
        rec[:, 4] = lengths
        rec[:, 5:] = (W[:, 0::2] << 4) | W[:, 1::2]
        used = np.arange(rec.shape[1])[None, :] < (5 + (lengths.astype(np.intp) + 1) // 2)[:, None]
        with open(path, "wb") as fh:
            fh.write(MAGIC_STORE)
            fh.write(np.array([FORMAT_VERSION], dtype="<u4").tobytes())
            fh.write(np.array([len(keys)], dtype="<u8").tobytes())
            fh.write(rec[used].tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != MAGIC_STORE:
            raise InputError(f"{path} is not a positions store")
        if len(data) < 16:
            raise StoreIntegrityError(f"{path} is truncated")
        count = int(np.frombuffer(data[8:16], dtype="<u8")[0])
        offsets = []
        pos = 16
        for _ in range(count):
            if pos + 5 > len(data):
                raise StoreIntegrityError(f"{path} is truncated")
            offsets.append(pos)
            pos += 5 + (data[pos + 4] + 1) // 2
        if pos > len(data):
            raise StoreIntegrityError(f"{path} is truncated")
        if pos != len(data):
            raise StoreIntegrityError(f"{path} has trailing bytes")
        buf = np.frombuffer(data, dtype=np.uint8)
        off = np.array(offsets, dtype=np.intp)
        keys = np.zeros(len(off), dtype=np.int64)
        for b in range(4):
            keys |= buf[off + b].astype(np.int64) << (8 * b)
        lengths = buf[off + 4] if count else np.zeros(0, dtype=np.uint8)
        width = int(lengths.max(initial=0)) + 1 & ~1
        idx = np.minimum(off[:, None] + 5 + np.arange(width // 2)[None, :], len(buf) - 1)
        packed = buf[idx] if count else np.zeros((0, width // 2), dtype=np.uint8)
        W = np.empty((count, width), dtype=np.uint8)
        W[:, 0::2] = packed >> 4
        W[:, 1::2] = packed & 15
        store = cls()
        for k, n, row in zip(keys.tolist(), lengths.tolist(), W.tolist()):
            store[k] = tuple(row[:n])
        return store


# -- seeds --------------------------------------------------------------------

@dataclass
class SeedPlan:
    """Edge-element seeds, identity first, pairwise non-equivalent under ≈."""
    seeds: list = field(default_factory=list)
    lengths: list = field(default_factory=list)

    def __len__(self):
        return len(self.seeds)


def seed_representatives(bfs, length, M=None):
    """≈ representatives (class minima) of the edge elements of one length."""
    M = M or build_m()
    E = bfs.layers[length].elements[:, :NEDGE]
    canon = _edge_canonical_keys(E, M)
    return edge_perms(np.unique(canon))


def _edge_canonical_keys(E, M, chunk=1 << 19):
    from .search import _edge_ref_images, _edge_tables
    _, _, shifts = _edge_tables()
    Me = M.elements[:, :NEDGE]
    parts = []
    for lo in range(0, len(E), chunk):
        best = None
        for img in _edge_ref_images(np.asarray(E[lo:lo + chunk]), Me, M.inv):
            key = (img.astype(np.int64) << shifts).sum(axis=1)
            best = key if best is None else np.minimum(best, key)
        parts.append(best)
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def build_seed_plan(max_length=6, cache_dir=None, M=None):
    """Identity, then ≈ representatives of even edge lengths up to ``max_length``."""
    from .search import cached_setv
    if max_length % 2 or not 0 <= max_length <= 8:
        raise InputError("seed lengths must be even and at most 8 in a precomputed plan")
    M = M or build_m()
    plan = SeedPlan([identity()[:NEDGE]], [0])
    if max_length == 0:
        return plan
    bfs = cached_setv("edge", max_length, cache_dir)
    for d in range(2, max_length + 1, 2):
        reps = seed_representatives(bfs, d, M)
        plan.seeds.extend(reps)
        plan.lengths.extend([d] * len(reps))
    return plan


def extension_seeds(bfs, M=None):
    """Lazily yield ≈ representatives of edge elements of length ``bfs.depth + 2``.

    Each representative of the deepest layer is extended by every pair of
    moves on both sides (the left side reaches classes met through the
    inverse); an image is new if it lies in neither of the two deepest even
    layers (so its length is exactly ``depth + 2``) and its class was not
    produced before.  With the depth-8 layers this streams length-10 seeds.
    """
    from .permcore import build_generators
    M = M or build_m()
    top = bfs.depth
    s = build_generators().s[:, :NEDGE]
    known = [np.sort(edge_keys(bfs.layers[d].elements)) for d in (top - 2, top) if d >= 0]
    seen = set()
    for rep in seed_representatives(bfs, top, M):
        pairs = [s[b][s[a]] for a in range(12) for b in range(12)]
        ext = np.stack([p[rep] for p in pairs] + [rep[p] for p in pairs])
        keys = edge_keys(ext)
        fresh = np.ones(len(keys), dtype=bool)
        for K in known:
            pos = np.searchsorted(K, keys)
            pos[pos == len(K)] = 0
            fresh &= K[pos] != keys
        if not fresh.any():
            continue
        canon = _edge_canonical_keys(ext[fresh], M)
        for c in np.unique(canon):
            if int(c) not in seen:
                seen.add(int(c))
                yield edge_perms([c])[0]


def read_seed_file(path):
    """Seeds as 24-entry 1-based image lists, one per line, ``#`` comments."""
    seeds = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            vals = [int(x) for x in line.replace(",", " ").split()]
            if sorted(vals) != list(range(1, NEDGE + 1)):
                raise InputError(f"{path}:{lineno}: not a permutation of 1..24")
            seeds.append(np.array(vals, dtype=np.uint8) - 1)
    return SeedPlan(seeds, [None] * len(seeds))


def write_seed_file(plan, path):
    with open(path, "w") as fh:
        fh.write("# one edge permutation per line: images of points 1..24\n")
        for g in plan.seeds:
            fh.write(" ".join(str(int(x) + 1) for x in g) + "\n")


# -- covering ----------------------------------------------------------------

@dataclass
class StepStats:
    newly_checked: int
    words_stored: int


def _product_ranks(A, B, pair_chunk=1 << 22):
    """Corner ranks of ``A[i] * B[j]`` for all pairs, i-major order."""
    ref = ci.corner_layout()[:, 0]
    Ac = A.elements[:, NEDGE:].astype(np.int64) - NEDGE
    Bflat = (B.elements[:, NEDGE:].astype(np.int64) - NEDGE).ravel()
    nb = len(B)
    out = np.empty(len(A) * nb, dtype=np.int64)
    rows = max(1, pair_chunk // max(nb, 1))
    joff = (np.arange(nb, dtype=np.int64) * 24)[None, :, None]
    for lo in range(0, len(A), rows):
        a = Ac[lo:lo + rows][:, ref]                       # (r, 8)
        D = Bflat[joff + a[:, None, :]]                    # (r, nb, 8)
        out[lo * nb:(lo + len(a)) * nb] = ci.ranks_from_ref_images(D.reshape(-1, 8))
    return out


def _absorb(ledger, store, ranks, A, B, M, chunk=1 << 15):
    """Mark the ≈ orbit of each product not yet checked, storing one word per class."""
    nb = len(B)
    unchecked = np.flatnonzero(ledger.unchecked(ranks))
    if len(unchecked) == 0:
        return 0
    _, first = np.unique(ranks[unchecked], return_index=True)
    cand = unchecked[np.sort(first)]
    stored = 0
    for lo in range(0, len(cand), chunk):
        p = cand[lo:lo + chunk]
        p = p[ledger.unchecked(ranks[p])]
        if len(p) == 0:
            continue
        orbits = orbit_ranks(ci.unrank_many(ranks[p]), M)
        canon = orbits.min(axis=1)
        _, first = np.unique(canon, return_index=True)
        first = np.sort(first)
        words = []
        for k in first:
            i, j = divmod(int(p[k]), nb)
            words.append(tuple(A.word(i)) + tuple(B.word(j)))
        _check_words(words, ranks[p[first]])
        for k, w in zip(first, words):
            store[int(canon[k])] = w
        ledger.write_rcv(orbits[first].ravel())
        stored += len(first)
    return stored


def _check_words(words, ranks):
    els = mult_words([list(w) for w in words])
    if not (els[:, :NEDGE] == identity()[:NEDGE]).all():
        raise VerificationError("a product word does not fix the edges")
    if any(len(w) > MAX_WORD for w in words):
        raise VerificationError("a product word is longer than 22")
    if not np.array_equal(ci.rank_many(els[:, NEDGE:] - NEDGE), ranks):
        raise VerificationError("a product word does not evaluate to its element")


def cover_step(g, ledger, store, index=None, M=None):
    """Process ``S(10,g) S(12,g^-1)`` and ``S(10,g^-1) S(12,g)`` for one seed.

    Marking whole ≈ orbits covers the products of every seed in the ≈ class
    of ``g`` at once.
    """
    index = index or default_index()
    M = M or build_m()
    g = np.asarray(g, dtype=np.uint8)[:NEDGE]
    ginv = np.empty_like(g)
    ginv[g] = np.arange(NEDGE, dtype=np.uint8)
    before = ledger.checked_count
    stored = 0
    pairs = [(g, ginv)]
    if not np.array_equal(g, ginv):
        pairs.append((ginv, g))
    for a, b in pairs:
        A = make_set(10, a, index)
        B = make_set(12, b, index)
        if len(A) == 0 or len(B) == 0:
            continue
        stored += _absorb(ledger, store, _product_ranks(A, B), A, B, M)
    return StepStats(ledger.checked_count - before, stored)


def save_checkpoint(directory, ledger, store, cursor):
    os.makedirs(directory, exist_ok=True)
    ledger.save(os.path.join(directory, "ledger.qtmv.tmp"))
    store.save(os.path.join(directory, "positions.qtmp.tmp"))
    os.replace(os.path.join(directory, "ledger.qtmv.tmp"), os.path.join(directory, "ledger.qtmv"))
    os.replace(os.path.join(directory, "positions.qtmp.tmp"), os.path.join(directory, "positions.qtmp"))
    with open(os.path.join(directory, "cursor.json"), "w") as fh:
        json.dump({"seed_cursor": cursor, "checked": ledger.checked_count}, fh)


def load_checkpoint(directory):
    """``(ledger, store, cursor)`` or ``None`` when no checkpoint exists."""
    path = os.path.join(directory, "cursor.json")
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        cursor = json.load(fh)["seed_cursor"]
    return (CoverLedger.load(os.path.join(directory, "ledger.qtmv")),
            PositionsStore.load(os.path.join(directory, "positions.qtmp")), cursor)


def run_cover(seeds, ledger=None, store=None, checkpoint=None, progress=print,
              index=None, M=None, start=0, require_complete=True, checkpoint_every=60.0):
    """Sweep seeds in order until every E_f element is checked.

    ``seeds`` may be a ``SeedPlan`` or any iterable of edge permutations.
    Emits one progress line per seed.  With a checkpoint directory the state
    is saved at most every ``checkpoint_every`` seconds and once at the end.  Raises ``IncompleteCoverError`` if the seeds run out
    first and ``require_complete`` is set.
    """
    ledger = ledger if ledger is not None else CoverLedger()
    store = store if store is not None else PositionsStore()
    index = index or default_index()
    M = M or build_m()
    it = seeds.seeds if isinstance(seeds, SeedPlan) else seeds
    cursor = saved = start
    last_save = time.monotonic()
    for cursor, g in enumerate(it, 1):
        if cursor <= start:
            continue
        cover_step(g, ledger, store, index, M)
        if progress:
            progress(ledger.progress_line())
        if checkpoint and time.monotonic() - last_save >= checkpoint_every:
            save_checkpoint(checkpoint, ledger, store, cursor)
            saved, last_save = cursor, time.monotonic()
        if ledger.left == 0:
            break
    if checkpoint and cursor != saved:
        save_checkpoint(checkpoint, ledger, store, cursor)
    if ledger.left and require_complete:
        raise IncompleteCoverError(ledger.left)
    return ledger, store


# -- verification and solving -----------------------------------------------

def verify(store, M=None, chunk=1 << 14):
    """Independently re-check a positions store; returns the number of checked ranks."""
    M = M or build_m()
    ledger = CoverLedger()
    items = sorted(store.items())
    for lo in range(0, len(items), chunk):
        part = items[lo:lo + chunk]
        for key, w in part:
            if len(w) > MAX_WORD:
                raise VerificationError(f"word for class {key} has length {len(w)} > {MAX_WORD}")
        els = mult_words([list(w) for _, w in part])
        bad = np.flatnonzero((els[:, :NEDGE] != identity()[:NEDGE]).any(axis=1))
        if len(bad):
            raise VerificationError(f"word for class {part[bad[0]][0]} does not fix the edges")
        orbits = orbit_ranks(els[:, NEDGE:] - NEDGE, M)
        keys = np.array([k for k, _ in part], dtype=np.int64)
        miss = np.flatnonzero(orbits.min(axis=1) != keys)
        if len(miss):
            raise StoreIntegrityError(f"word stored under {keys[miss[0]]} evaluates to another class")
        ledger.write_rcv(orbits.ravel())
    if ledger.odd_marked():
        raise VerificationError("an odd corner permutation was marked")
    return ledger.checked_count


def corner_state_to_perm(sigma, ori):
    """E_f element (edges fixed) with corner state ``(sigma, ori)``, 0-based."""
    from .permcore import _perm_parity
    if _perm_parity(sigma):
        raise DomainError("odd corner permutation: not reachable with the edges fixed")
    ci.rank_ori(ori)
    p = identity()
    p[NEDGE:] = ci.assemble(sigma, ori) + NEDGE
    return p


def solve(state, store, M=None):
    """A word ``u`` of length <= 22 with ``state * u == identity``.

    ``state`` is a 48-point permutation in E_f.  The stored word of its ≈
    class is relabelled through the symmetry (and inverted if needed) that
    carries the stored element onto ``state``.
    """
    M = M or build_m()
    state = np.asarray(state, dtype=np.uint8)
    if not is_identity(state[:NEDGE]):
        moved = int((state[:NEDGE] != identity()[:NEDGE]).sum())
        raise DomainError(f"edges are not solved ({moved} edge facelets displaced): "
                          "the state is not in E_f")
    target = ci.rank_many(state[None, NEDGE:] - NEDGE)[0]
    if target == 1:
        return []
    key = int(orbit_ranks(state[None, NEDGE:] - NEDGE, M)[0].min())
    if key not in store:
        raise StoreIntegrityError(f"class {key} is missing from the positions store")
    w = list(store[key])
    x = mult_words([w])[0]
    orbit = orbit_ranks(x[None, NEDGE:] - NEDGE, M)[0]
    k = int(np.flatnonzero(orbit == target)[0])
    i = k % M.order
    base = w if k < M.order else invg(w)
    word_for_state = M.relabel(base, i)
    return invg(word_for_state)
