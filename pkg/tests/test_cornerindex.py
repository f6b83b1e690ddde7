import itertools
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cubecover import cornerindex as ci
from cubecover.errors import DomainError, InputError, InvariantError
from cubecover.permcore import NEDGE, compose, mult_el, mult_words, project_corners

words = st.lists(st.integers(1, 12), max_size=25)
ranks = st.integers(1, ci.NRANKS)


def test_sizes():
    assert ci.NRANKS == 88_179_840
    assert ci.EVEN_RANKS == 44_089_920


def test_lehmer_worked_example():
    summands = 4 * factorial(7) + 4 * factorial(6) + 2 * factorial(5) + 2 * factorial(4) \
        + factorial(3) + 0 + factorial(1)
    assert ci.rank_s8((5, 6, 3, 4, 2, 1, 8, 7)) == summands == 23335


def test_lehmer_matches_lexicographic_enumeration():
    for k, p in enumerate(itertools.permutations(range(8))):
        assert ci.rank_s8(p) == k
        if k % 997 == 0:
            assert ci.unrank_s8(k) == p


def test_orientation_rank_matches_enumeration():
    valid = [t for t in itertools.product(range(3), repeat=8) if sum(t) % 3 == 0]
    assert [ci.rank_ori(t) for t in valid] == list(range(3 ** 7))
    assert ci.rank_ori((1, 0, 0, 0, 0, 0, 0, 2)) == 729
    assert ci.rank_ori((0, 0, 0, 0, 0, 0, 1, 2)) == 1


def test_orientation_domain():
    with pytest.raises(DomainError):
        ci.rank_ori((1, 0, 0, 0, 0, 0, 0, 0))
    with pytest.raises(InputError):
        ci.rank_ori((3, 0, 0, 0, 0, 0, 0, 0))


def test_identity_has_rank_one():
    assert ci.rank(np.arange(24)) == 1
    assert np.array_equal(ci.unrank(1), np.arange(24))


def test_rank_range_checked():
    for bad in (0, ci.NRANKS + 1):
        with pytest.raises(InputError):
            ci.unrank(bad)
    with pytest.raises(InputError):
        ci.unrank_many([0, 5])


def test_layout_is_validated():
    layout = ci.corner_layout()
    assert layout.shape == (8, 3)
    bad = [list(t) for t in ci._TRIPLE_SETS]
    bad[0][0], bad[1][0] = bad[1][0], bad[0][0]
    with pytest.raises(InvariantError):
        ci.corner_layout(tuple(map(tuple, bad)))


def test_up_and_down_turns_do_not_twist(gens):
    for n in (1, 6, 7, 12):
        _, ori = ci.decompose(project_corners(gens[n]))
        assert ori == (0,) * 8
    for n in (2, 3, 4, 5):
        _, ori = ci.decompose(project_corners(gens[n]))
        assert sum(ori) % 3 == 0 and any(ori)


def test_non_rigid_permutation_rejected():
    c = np.arange(24)
    c[[0, 1]] = c[[1, 0]]
    with pytest.raises(DomainError):
        ci.decompose(c)


@given(ranks)
def test_round_trip(r):
    c = ci.unrank(r)
    assert ci.rank(c) == r
    assert np.array_equal(ci.assemble(*ci.decompose(c)), c)


@given(words, words)
def test_state_law_matches_composition(a, b):
    p, q = project_corners(mult_el(a)), project_corners(mult_el(b))
    assert ci.compose_states(ci.decompose(p), ci.decompose(q)) == ci.decompose(compose(p, q))


def test_vectorised_forms_agree(rng):
    R = rng.integers(1, ci.NRANKS + 1, size=500)
    C = ci.unrank_many(R)
    for r, c in zip(R[:50], C[:50]):
        assert np.array_equal(c, ci.unrank(r))
    assert np.array_equal(ci.rank_many(C), R)
    inv = ci.invert_many(C)
    assert (np.take_along_axis(inv, C.astype(np.intp), axis=1) == np.arange(24)).all()


def test_sigma_parity_many(rng):
    from cubecover.permcore import _perm_parity
    R = rng.integers(1, ci.NRANKS + 1, size=300)
    want = [_perm_parity(ci.decompose(c)[0]) for c in ci.unrank_many(R)]
    assert ci.sigma_parity_many(R).tolist() == want


def test_injective_on_sampled_elements(rng):
    ws = [rng.integers(1, 13, size=rng.integers(0, 20)).tolist() for _ in range(5000)]
    C = mult_words(ws)[:, NEDGE:] - NEDGE
    C = np.unique(C, axis=0)
    assert len(np.unique(ci.rank_many(C))) == len(C)


def test_bijectivity_on_prefix():
    assert ci.bijectivity_selftest(1, 300_000, chunk=100_000)
    assert ci.bijectivity_selftest(ci.NRANKS - 50_000, ci.NRANKS)


def test_bijectivity_detects_corrupted_ranker():
    def broken(C):
        R = ci.rank_many(C)
        R[R == 4242] = 4243
        return R
    assert not ci.bijectivity_selftest(1, 10_000, rank_fn=broken)
