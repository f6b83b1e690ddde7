"""Layered breadth-first search, the edge-projection index and slice products.

Words are packed four bits per move, first move in the most significant
nibble, so for words of equal length integer order is lexicographic order.

``S(n, g)`` is the set of cube elements of length at most ``n`` whose edge
projection is ``g``.  It is assembled as the union over edge elements ``h``
of ``S(n - 6, h) * S(6, h^-1 g)``, both factors read from one depth-6 index.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import cornerindex
from .errors import InputError, ResourceError
from .permcore import NEDGE, NPOINTS, build_generators, cubie_groups, identity
from .symmetry import build_m, count_classes

log = logging.getLogger(__name__)

DEFAULT_MEMORY = 4 << 30
INDEX_DEPTH = 6


# -- edge keys ----------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _edge_tables():
    edges, _ = cubie_groups()
    refs = np.array([a for a, _ in edges], dtype=np.intp)
    partner = np.empty(NEDGE, dtype=np.uint8)
    for a, b in edges:
        partner[a], partner[b] = b, a
    shifts = np.array([5 * (11 - k) for k in range(12)], dtype=np.int64)
    return refs, partner, shifts


def edge_keys(E):
    """Pack ``(N, >=24)`` image rows into int64 keys ordered like the rows.

    Each edge cubie's lower facelet fixes where its partner goes, and the
    first point at which two edge permutations differ is always such a
    facelet, so comparing keys compares the permutations.
    """
    refs, _, shifts = _edge_tables()
    return (np.asarray(E)[:, refs].astype(np.int64) << shifts).sum(axis=1)


def edge_perms(keys):
    refs, partner, shifts = _edge_tables()
    keys = np.asarray(keys, dtype=np.int64)
    E = np.empty((len(keys), NEDGE), dtype=np.uint8)
    for k, r in enumerate(refs):
        v = ((keys >> shifts[k]) & 31).astype(np.uint8)
        E[:, r] = v
        E[:, partner[r]] = partner[v]
    return E


def as_void(A):
    A = np.ascontiguousarray(A)
    return A.view(np.dtype((np.void, A.shape[1]))).ravel()


# -- packed words -------------------------------------------------------------

def pack_word(w):
    v = 0
    for x in w:
        v = (v << 4) | int(x)
    return v


def unpack_word(v, length):
    v = int(v)
    return [(v >> (4 * (length - 1 - i))) & 15 for i in range(length)]


def unpack_words(V, length):
    """``(N, length)`` move table for packed words of one length."""
    V = np.asarray(V, dtype=np.int64)
    out = np.empty((len(V), length), dtype=np.uint8)
    for i in range(length):
        out[:, i] = (V >> (4 * (length - 1 - i))) & 15
    return out


def relabel_packed(V, lengths, table):
    """Apply a move relabelling table (13 slots, index 0 unused) nibble-wise."""
    V = np.asarray(V, dtype=np.int64)
    lengths = np.asarray(lengths)
    table = np.asarray(table, dtype=np.int64)
    out = np.zeros_like(V)
    for i in range(int(lengths.max(initial=0))):
        live = lengths > i
        nib = (V >> (4 * i)) & 15
        out[live] |= table[nib[live]] << (4 * i)
    return out


# -- layered BFS --------------------------------------------------------------

@dataclass
class Layer:
    elements: np.ndarray   # (N, npoints) uint8, natural order
    words: np.ndarray      # (N,) int64 packed, lexicographically first geodesic


@dataclass
class LayeredBFS:
    kind: str
    layers: list = field(default_factory=list)

    @property
    def depth(self):
        return len(self.layers) - 1

    @property
    def npoints(self):
        return NEDGE if self.kind == "edge" else NPOINTS

    def sizes(self):
        return [len(layer.elements) for layer in self.layers]


def _keys(kind, E):
    return edge_keys(E) if kind == "edge" else as_void(E)


def make_setv(kind, depth, memory=DEFAULT_MEMORY, gens=None):
    """Layers 0..depth of the Cayley graph of the edge group or the cube group.

    Layer ``d`` holds the elements of length exactly ``d``, each with its
    lexicographically first word of length ``d``.  Duplicates inside a layer
    and elements of layer ``d - 2`` are dropped; layer ``d - 1`` cannot
    recur because word length parity is an invariant.
    """
    if kind not in ("edge", "cube"):
        raise InputError(f"unknown group kind {kind!r}")
    if depth < 0 or depth > 15 or (kind == "edge" and depth > 8):
        raise InputError(f"depth {depth} unsupported for the {kind} group")
    s = (gens or build_generators()).s
    npts = NEDGE if kind == "edge" else NPOINTS
    s = s[:, :npts]
    bfs = LayeredBFS(kind)
    bfs.layers.append(Layer(identity()[None, :npts].copy(), np.zeros(1, dtype=np.int64)))
    for d in range(1, depth + 1):
        prev = bfs.layers[d - 1]
        n = len(prev.elements)
        need = n * 12 * (npts + 8 + 8 + 8) * 2
        if need > memory:
            raise ResourceError(f"expanding layer {d} of the {kind} group needs about "
                                f"{need >> 20} MiB, over the {memory >> 20} MiB budget")
        cand = np.concatenate([s[m][prev.elements] for m in range(12)])
        words = np.concatenate([(prev.words << 4) | (m + 1) for m in range(12)])
        keys = _keys(kind, cand)
        if d >= 2:
            back = _keys(kind, bfs.layers[d - 2].elements)
            pos = np.searchsorted(back, keys)
            pos[pos == len(back)] = 0
            keep = back[pos] != keys
            cand, words, keys = cand[keep], words[keep], keys[keep]
        if kind == "edge":
            order = np.lexsort((words, keys))
            ks = keys[order]
        else:
            _, inv = np.unique(keys, return_inverse=True)
            order = np.lexsort((words, inv))
            ks = inv[order]
        first = np.ones(len(ks), dtype=bool)
        first[1:] = ks[1:] != ks[:-1]
        sel = order[first]
        bfs.layers.append(Layer(np.ascontiguousarray(cand[sel]), words[sel]))
        del cand, words, keys
        log.info("%s layer %d: %d elements", kind, d, len(sel))
    return bfs


def make_setvc(bfs):
    """Per-layer ``(N, d)`` move tables aligned with the layer's elements."""
    return [unpack_words(layer.words, d) for d, layer in enumerate(bfs.layers)]


def edge_layer_classes(E, M=None, chunk=1 << 19):
    """Numbers of ~ and ≈ classes among the edge permutations in ``E``."""
    M = M or build_m()
    refs, _, shifts = _edge_tables()
    Me = M.elements[:, :NEDGE]
    sim_parts, approx_parts = [], []
    for lo in range(0, len(E), chunk):
        X = np.asarray(E[lo:lo + chunk])
        best = None
        for k, img in enumerate(_edge_ref_images(X, Me, M.inv)):
            key = (img.astype(np.int64) << shifts).sum(axis=1)
            if best is None:
                best = key
            else:
                np.minimum(best, key, out=best)
            if k == M.order - 1:
                sim_parts.append(best.copy())
        approx_parts.append(best)
    if not sim_parts:
        return 0, 0
    return (len(np.unique(np.concatenate(sim_parts))),
            len(np.unique(np.concatenate(approx_parts))))


def _edge_ref_images(X, Me, inv):
    refs, _, _ = _edge_tables()
    Xi = np.empty_like(X)
    np.put_along_axis(Xi, X.astype(np.intp), np.arange(NEDGE, dtype=X.dtype)[None, :], axis=1)
    for Y in (X, Xi):
        for i in range(len(Me)):
            # (h^-1 y h)[r] = h[y[h^-1[r]]]
            yield Me[i][Y[:, Me[inv[i]][refs]]]


def edge_table(bfs, M=None):
    """Rows ``(distance, positions, classes wrt ~, classes wrt ≈)``."""
    rows = []
    for d, layer in enumerate(bfs.layers):
        sim, approx = edge_layer_classes(layer.elements[:, :NEDGE], M)
        rows.append((d, len(layer.elements), sim, approx))
    return rows


# -- layer cache --------------------------------------------------------------

MAGIC_BFS = b"QTMB"
BFS_VERSION = 1


def _pack_word_bytes(words, d):
    nbytes = (d + 1) // 2
    W = np.asarray(words, dtype=np.int64) << (4 * (d & 1))
    out = np.empty((len(W), nbytes), dtype=np.uint8)
    for k in range(nbytes):
        out[:, k] = (W >> (8 * (nbytes - 1 - k))) & 0xFF
    return out


def _unpack_word_bytes(B, d):
    W = np.zeros(len(B), dtype=np.int64)
    for k in range(B.shape[1]):
        W = (W << 8) | B[:, k]
    return W >> (4 * (d & 1))


def save_bfs(bfs, path, gens=None):
    """Write a layer cache: header, then per layer count, 48-byte rows, words."""
    checksum = (gens or build_generators()).checksum.encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC_BFS)
        fh.write(np.array([BFS_VERSION], dtype="<u4").tobytes())
        fh.write(bytes([0 if bfs.kind == "edge" else 1, bfs.depth]))
        fh.write(checksum)
        for d, layer in enumerate(bfs.layers):
            E = layer.elements
            if E.shape[1] == NEDGE:
                E = np.hstack([E, np.broadcast_to(identity()[NEDGE:], (len(E), NPOINTS - NEDGE))])
            fh.write(np.array([len(E)], dtype="<u8").tobytes())
            fh.write(np.ascontiguousarray(E, dtype=np.uint8).tobytes())
            fh.write(_pack_word_bytes(layer.words, d).tobytes())


def load_bfs(path, gens=None):
    """Read a layer cache; returns ``None`` if it was built from other generators."""
    checksum = (gens or build_generators()).checksum.encode()
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC_BFS:
        raise InputError(f"{path} is not a layer cache")
    version = int(np.frombuffer(data[4:8], dtype="<u4")[0])
    if version != BFS_VERSION:
        raise InputError(f"unsupported layer cache version {version}")
    kind = "edge" if data[8] == 0 else "cube"
    depth = data[9]
    if data[10:26] != checksum:
        return None
    pos = 26
    bfs = LayeredBFS(kind)
    npts = NEDGE if kind == "edge" else NPOINTS
    for d in range(depth + 1):
        n = int(np.frombuffer(data[pos:pos + 8], dtype="<u8")[0])
        pos += 8
        E = np.frombuffer(data[pos:pos + n * NPOINTS], dtype=np.uint8).reshape(n, NPOINTS)
        pos += n * NPOINTS
        nb = (d + 1) // 2
        B = np.frombuffer(data[pos:pos + n * nb], dtype=np.uint8).reshape(n, nb)
        pos += n * nb
        bfs.layers.append(Layer(np.ascontiguousarray(E[:, :npts]), _unpack_word_bytes(B, d)))
    return bfs


def cached_setv(kind, depth, cache_dir=None, memory=DEFAULT_MEMORY):
    """``make_setv`` backed by an on-disk cache when ``cache_dir`` is given."""
    import os
    if cache_dir is None:
        return make_setv(kind, depth, memory)
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"{kind}-{depth}.qtmb")
    if os.path.exists(path):
        bfs = load_bfs(path)
        if bfs is not None and bfs.depth == depth:
            return bfs
    bfs = make_setv(kind, depth, memory)
    save_bfs(bfs, path)
    return bfs


# -- edge projection index ----------------------------------------------------

@dataclass
class EdgeProjIndex:
    """Cube elements of length <= depth grouped by their edge projection.

    ``elements[starts[k]:starts[k + 1]]`` is the block of elements whose edge
    projection has key ``keys[k]``; blocks are in key order.
    """
    depth: int
    elements: np.ndarray
    words: np.ndarray
    lengths: np.ndarray
    keys: np.ndarray
    starts: np.ndarray
    min_length: np.ndarray
    edge_inv: np.ndarray   # (K, 24) inverse of each block's edge permutation

    def block(self, key):
        k = np.searchsorted(self.keys, key)
        if k == len(self.keys) or self.keys[k] != key:
            return slice(0, 0)
        return slice(self.starts[k], self.starts[k + 1])

    def lookup(self, keys):
        """Block numbers for an array of edge keys, ``-1`` where absent."""
        k = np.searchsorted(self.keys, keys)
        k[k == len(self.keys)] = 0
        k[self.keys[k] != keys] = -1
        return k


def build_index(bfs):
    if bfs.kind != "cube":
        raise InputError("the edge projection index needs the cube-group layers")
    E = np.concatenate([layer.elements for layer in bfs.layers])
    W = np.concatenate([layer.words for layer in bfs.layers])
    L = np.concatenate([np.full(len(layer.elements), d, dtype=np.int8)
                        for d, layer in enumerate(bfs.layers)])
    order = np.argsort(as_void(E), kind="stable")
    E, W, L = np.ascontiguousarray(E[order]), W[order], L[order]
    ek = edge_keys(E)
    change = np.ones(len(ek), dtype=bool)
    change[1:] = ek[1:] != ek[:-1]
    first = np.flatnonzero(change)
    starts = np.append(first, len(ek)).astype(np.int64)
    keys = ek[first]
    min_length = np.minimum.reduceat(L, first)
    perms = E[first, :NEDGE]
    inv = np.empty_like(perms)
    np.put_along_axis(inv, perms.astype(np.intp), np.arange(NEDGE, dtype=np.uint8)[None, :], axis=1)
    return EdgeProjIndex(bfs.depth, E, W, L, keys, starts, min_length, inv)


@functools.lru_cache(maxsize=4)
def default_index(depth=INDEX_DEPTH, cache_dir=None):
    return build_index(cached_setv("cube", depth, cache_dir))


# -- slices -------------------------------------------------------------------

@dataclass
class SliceSet:
    """Members of ``S(n, g)`` with one witness word each (shortest, then lexicographic)."""
    n: int
    g: np.ndarray          # edge permutation, 24 images
    elements: np.ndarray   # (N, 48)
    words: np.ndarray      # (N,) int64 packed
    lengths: np.ndarray    # (N,) int8

    def __len__(self):
        return len(self.elements)

    def word(self, i):
        return unpack_word(self.words[i], int(self.lengths[i]))


def _expand_pairs(a_start, a_stop, b_start, b_stop):
    """All index pairs of the block products ``[a_start:a_stop) x [b_start:b_stop)``."""
    ca = a_stop - a_start
    cb = b_stop - b_start
    per = ca * cb
    total = int(per.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    pair = np.repeat(np.arange(len(per)), per)
    offset = np.arange(total) - np.repeat(np.cumsum(per) - per, per)
    cbr = cb[pair]
    ii = a_start[pair] + offset // cbr
    jj = b_start[pair] + offset % cbr
    return ii, jj


def _dedup(elements, words, lengths):
    if len(elements) == 0:
        return elements, words, lengths
    _, inv = np.unique(as_void(elements), return_inverse=True)
    order = np.lexsort((words, lengths, inv))
    ks = inv[order]
    first = np.ones(len(ks), dtype=bool)
    first[1:] = ks[1:] != ks[:-1]
    sel = order[first]
    return np.ascontiguousarray(elements[sel]), words[sel], lengths[sel]


def _as_edge_perm(g):
    g = np.asarray(g, dtype=np.uint8)
    if g.shape == (NPOINTS,):
        g = g[:NEDGE]
    if g.shape != (NEDGE,) or sorted(g.tolist()) != list(range(NEDGE)):
        raise InputError("seed must be a permutation of the 24 edge facelets")
    return g


def make_set(n, g, index=None):
    """``S(n, g)`` with witness words, via the ``(n - 6, 6)`` split."""
    index = index or default_index()
    g = _as_edge_perm(g)
    if n < 0 or n - index.depth > index.depth:
        raise InputError(f"S({n}, g) needs an index of depth >= {n - index.depth}")
    E, W, L = index.elements, index.words, index.lengths
    if n <= index.depth:
        blk = index.block(edge_keys(g[None, :])[0])
        keep = np.arange(blk.start, blk.stop)
        keep = keep[L[keep] <= n]
        el, wd, ln = _dedup(E[keep], W[keep], L[keep])
        return SliceSet(n, g, el, wd, ln)
    left = n - index.depth
    cand = np.flatnonzero(index.min_length <= left)
    # key of h^-1 g for every block h:  (h^-1 g)[p] = g[h^-1[p]]
    partner = index.lookup(edge_keys(g[index.edge_inv[cand]]))
    ok = partner >= 0
    a, b = cand[ok], partner[ok]
    ii, jj = _expand_pairs(index.starts[a], index.starts[a + 1],
                           index.starts[b], index.starts[b + 1])
    keep = L[ii] <= left
    ii, jj = ii[keep], jj[keep]
    prods = np.take_along_axis(E[jj], E[ii].astype(np.intp), axis=1)
    lb = L[jj].astype(np.int64)
    words = (W[ii] << (4 * lb)) | W[jj]
    el, wd, ln = _dedup(prods, words, (L[ii] + L[jj]).astype(np.int8))
    return SliceSet(n, g, el, wd, ln)


def conjugate_slice(S, i, M=None):
    """Image of ``S`` under conjugation by ``M.elements[i]``, words relabelled."""
    M = M or build_m()
    h = M.elements[i]
    hinv = M.elements[M.inv[i]]
    el = h[S.elements[:, hinv]]
    g = h[:NEDGE][S.g[hinv[:NEDGE]]]
    wd = relabel_packed(S.words, S.lengths, M.action[i])
    el, wd, ln = _dedup(el, wd, S.lengths.copy())
    return SliceSet(S.n, g, el, wd, ln)


def invert_slice(S):
    """``S(n, g)^-1`` as ``S(n, g^-1)`` (witness words inverted move by move)."""
    el = np.empty_like(S.elements)
    np.put_along_axis(el, S.elements.astype(np.intp), np.arange(NPOINTS, dtype=np.uint8)[None, :], axis=1)
    inv_table = np.array([0] + [(x + 5) % 12 + 1 for x in range(1, 13)], dtype=np.int64)
    V = np.zeros_like(S.words)
    for i in range(int(S.lengths.max(initial=0))):
        live = S.lengths > i
        nib = (S.words >> (4 * i)) & 15
        pos = S.lengths.astype(np.int64) - 1 - i
        V[live] |= inv_table[nib[live]] << (4 * pos[live])
    g = np.empty_like(S.g)
    g[S.g] = np.arange(NEDGE, dtype=np.uint8)
    el, wd, ln = _dedup(el, V, S.lengths.copy())
    return SliceSet(S.n, g, el, wd, ln)


# -- distance tables ----------------------------------------------------------

SUBGROUPS = ("fix-edges", "fix-cubies")


def _cubie_perm_rows(E):
    """Cubie permutation part of cube elements as byte rows (orientation dropped)."""
    edges, corners = cubie_groups()
    slot = np.zeros(NPOINTS, dtype=np.uint8)
    for k, grp in enumerate(edges + corners):
        slot[list(grp)] = k
    refs = [grp[0] for grp in edges + corners]
    return slot[np.asarray(E)[:, refs]]


def _fix_cubies_products(index, max_dist):
    E, W, L = index.elements, index.words, index.lengths
    Einv = np.empty_like(E)
    np.put_along_axis(Einv, E.astype(np.intp), np.arange(NPOINTS, dtype=np.uint8)[None, :], axis=1)
    right = as_void(_cubie_perm_rows(E))
    target = as_void(_cubie_perm_rows(Einv))
    order = np.argsort(right, kind="stable")
    rs = right[order]
    lo = np.searchsorted(rs, target, side="left")
    hi = np.searchsorted(rs, target, side="right")
    ii, pj = _expand_pairs(np.arange(len(E)), np.arange(len(E)) + 1, lo, hi)
    jj = order[pj]
    keep = (L[ii] + L[jj]) <= max_dist
    ii, jj = ii[keep], jj[keep]
    prods = np.take_along_axis(E[jj], E[ii].astype(np.intp), axis=1)
    lb = L[jj].astype(np.int64)
    return _dedup(prods, (W[ii] << (4 * lb)) | W[jj], (L[ii] + L[jj]).astype(np.int8))


def subgroup_elements(subgroup, max_dist=12, index=None):
    """Members of the subgroup with length <= max_dist, each with its exact length.

    Any element of length ``d <= 12`` has a word splitting into two halves of
    length <= 6, so the shortest product found is its exact length.
    """
    if subgroup not in SUBGROUPS:
        raise InputError(f"unknown subgroup {subgroup!r}; choose from {SUBGROUPS}")
    if max_dist > 12:
        raise InputError("distances beyond 12 need the full seed sweep (extended mode)")
    index = index or default_index()
    if max_dist > 2 * index.depth:
        raise InputError(f"index depth {index.depth} is too shallow for distance {max_dist}")
    if subgroup == "fix-edges":
        S = make_set(2 * index.depth, identity()[:NEDGE], index)
        keep = S.lengths <= max_dist
        return S.elements[keep], S.words[keep], S.lengths[keep]
    return _fix_cubies_products(index, max_dist)


def distance_distribution(subgroup, max_dist=12, index=None, M=None):
    """Rows ``(distance, positions, classes wrt ~, classes wrt ≈)`` for even distances."""
    E, _, L = subgroup_elements(subgroup, max_dist, index)
    rows = []
    for d in range(0, max_dist + 1, 2):
        X = E[L == d]
        rows.append((d, len(X), count_classes(X, M, with_inverse=False),
                     count_classes(X, M, with_inverse=True)))
    return rows


def corner_ranks(E):
    """Corner ranks of ``(N, 48)`` cube elements."""
    return cornerindex.rank_many(np.asarray(E)[:, NEDGE:] - NEDGE)
