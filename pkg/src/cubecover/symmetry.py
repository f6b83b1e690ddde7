"""The symmetry group M and the two length-preserving equivalence relations.

``x ~ y``  iff  ``x = h^-1 y h`` for some h in M.
``x ≈ y``  iff  ``x ~ y`` or ``x^-1 ~ y``.

M is the closure of ``K1`` and ``K2``.  Each element acts on the twelve
generators by conjugation; that action is stored as a relabelling table so a
word for ``x`` becomes a word for ``h^-1 x h`` move by move.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError, ResourceError
from .permcore import (
    MOVE_NAMES, build_generators, compose, from_cycles, identity, inverse,
)

K1_CYCLES = [
    (1, 24, 16, 22), (2, 19, 10, 15), (3, 21, 12, 17), (4, 11, 7, 23),
    (5, 14, 18, 8), (6, 13, 20, 9), (25, 48, 32, 45), (26, 41, 39, 36),
    (27, 44, 42, 37), (28, 43, 40, 38), (29, 31, 34, 47), (30, 35, 33, 46),
]
K2_CYCLES = [
    (1, 5, 7, 19), (2, 10, 14, 8), (3, 11, 13, 24), (4, 18, 16, 15),
    (6, 17, 21, 20), (9, 23, 12, 22), (25, 44, 34, 28), (26, 48, 41, 31),
    (27, 33, 43, 35), (29, 37, 32, 40), (30, 42, 46, 38), (36, 45, 39, 47),
]

# conjugation action x -> k^-1 x k on T, as cycles of move names
K1_ACTION = [("U", "B'", "D", "F'"), ("L", "R'"), ("F", "U'", "B", "D'"), ("R", "L'")]
K2_ACTION = [("U", "R", "D", "L"), ("U'", "R'", "D'", "L'")]

MAX_ORDER = 10_000


def k1():
    return from_cycles(K1_CYCLES)


def k2():
    return from_cycles(K2_CYCLES)


def action_on_generators(h, gens=None):
    """Relabelling table: ``t[n-1] = k`` with ``h^-1 s[n] h == s[k]``."""
    s = (gens or build_generators()).s
    lookup = {row.tobytes(): k + 1 for k, row in enumerate(s)}
    hinv = inverse(h)
    table = []
    for n in range(12):
        img = compose(compose(hinv, s[n]), h).tobytes()
        if img not in lookup:
            raise InvariantError(f"conjugate of {MOVE_NAMES[n]} is not a generator")
        table.append(lookup[img])
    return table


def _action_from_cycles(cycles):
    names = list(MOVE_NAMES)
    table = list(range(1, 13))
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            table[names.index(a)] = names.index(b) + 1
    return table


def check_printed_action(gens):
    """Raise unless K1 and K2 act on T exactly as the printed cycles say."""
    for name, h, cycles in (("k1", k1(), K1_ACTION), ("k2", k2(), K2_ACTION)):
        got = action_on_generators(h, gens)
        want = _action_from_cycles(cycles)
        if got != want:
            raise InvariantError(
                f"derived generators disagree with the {name} action: {got} != {want}")


@dataclass(frozen=True)
class SymmetryGroup:
    """Explicit element list of M, sorted in the natural permutation order.

    ``elements[0]`` is the identity; ``inv[i]`` indexes the inverse of element
    ``i``; ``action[i]`` is its relabelling table on moves 1..12 (1-based
    values, stored in a 13-slot array so ``action[i][move]`` works directly).
    """
    elements: np.ndarray
    inv: np.ndarray
    action: np.ndarray

    @property
    def order(self):
        return len(self.elements)

    def relabel(self, word, i):
        """Word for ``h^-1 x h`` given a word for ``x`` and ``h = elements[i]``."""
        return [int(self.action[i][x]) for x in word]


@functools.lru_cache(maxsize=None)
def build_m():
    gens = build_generators()
    found = {identity().tobytes(): identity()}
    frontier = [identity()]
    while frontier:
        nxt = []
        for p in frontier:
            for g in (k1(), k2()):
                q = compose(p, g)
                key = q.tobytes()
                if key not in found:
                    found[key] = q
                    nxt.append(q)
                    if len(found) > MAX_ORDER:
                        raise ResourceError("closure of k1, k2 is implausibly large")
        frontier = nxt
    elements = np.stack([found[k] for k in sorted(found)])
    index = {row.tobytes(): i for i, row in enumerate(elements)}
    inv = np.array([index[inverse(row).tobytes()] for row in elements], dtype=np.intp)
    action = np.zeros((len(elements), 13), dtype=np.int64)
    for i, row in enumerate(elements):
        action[i, 1:] = action_on_generators(row, gens)
    for arr in (elements, inv, action):
        arr.flags.writeable = False
    return SymmetryGroup(elements, inv, action)


def conjugates(x, M=None):
    """Stack of ``h^-1 x h`` for every h in M, shape ``(|M|, 48)``."""
    return conjugates_many(np.asarray(x)[None, :], M)[:, 0, :]


def _inverse_rows(X):
    Xi = np.empty_like(X)
    np.put_along_axis(Xi, X.astype(np.intp), np.arange(X.shape[1], dtype=X.dtype)[None, :], axis=1)
    return Xi


def iter_images(X, M=None, with_inverse=False):
    """Yield ``h^-1 x h`` for all rows x of ``X``, one h at a time.

    With ``with_inverse`` the conjugates of the inverses follow, so the
    ``k``-th image is conjugation by ``M.elements[k % |M|]`` of ``x`` when
    ``k < |M|`` and of ``x^-1`` otherwise.
    """
    M = M or build_m()
    X = np.asarray(X)
    npts = X.shape[1]
    mats = [X, _inverse_rows(X)] if with_inverse else [X]
    E = M.elements[:, :npts] if npts == 24 else M.elements
    for Y in mats:
        for i in range(M.order):
            yield E[i][Y[:, E[M.inv[i]]]]


def conjugates_many(X, M=None, with_inverse=False):
    """All images of ``iter_images`` stacked, shape ``(k, N, npts)``."""
    return np.stack(list(iter_images(X, M, with_inverse)))


def _unique_rows(A):
    A = np.ascontiguousarray(A)
    v = A.view(np.dtype((np.void, A.shape[1]))).ravel()
    _, idx = np.unique(v, return_index=True)
    return A[idx]


def class_sim(g, M=None):
    """The ~ class of ``g`` as sorted unique rows."""
    return _unique_rows(conjugates(g, M))


def class_approx(g, M=None):
    return _unique_rows(conjugates_many(np.asarray(g)[None, :], M, with_inverse=True)[:, 0, :])


def lex_less(a, b):
    """Row-wise natural-order comparison of two equally shaped 2-D arrays."""
    diff = a != b
    first = diff.argmax(axis=1)
    rows = np.arange(len(a))
    return diff.any(axis=1) & (a[rows, first] < b[rows, first])


def canonical(X, M=None, with_inverse=True):
    """Natural-order minimum of each row's class (≈ by default, ~ otherwise)."""
    best = None
    for img in iter_images(X, M, with_inverse):
        if best is None:
            best = img.copy()
            continue
        mask = lex_less(img, best)
        best[mask] = img[mask]
    return best


def count_classes(X, M=None, with_inverse=True):
    if len(X) == 0:
        return 0
    return len(_unique_rows(canonical(X, M, with_inverse)))


def redf(X, M=None):
    """One member per ≈ class meeting ``X``: the natural-order smallest input row.

    Deterministic and independent of the order of ``X``.
    """
    X = _unique_rows(np.asarray(X))
    if len(X) == 0:
        return X
    canon = np.ascontiguousarray(canonical(X, M))
    cv = canon.view(np.dtype((np.void, canon.shape[1]))).ravel()
    # X is sorted, so the first row of each canonical group is its minimum
    _, first = np.unique(cv, return_index=True)
    return X[np.sort(first)]
