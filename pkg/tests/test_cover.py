import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubecover import cornerindex as ci
from cubecover.cover import (
    CoverLedger, PositionsStore, build_seed_plan, corner_state_to_perm, cover_step,
    eq_class_rel2, extension_seeds, load_checkpoint, orbit_ranks, read_seed_file, run_cover,
    seed_representatives, solve, verify, write_seed_file,
)
from cubecover.errors import (
    DomainError, IncompleteCoverError, InputError, StoreIntegrityError, VerificationError,
)
from cubecover.permcore import NEDGE, compose, identity, is_identity, mult_el, mult_words, parse_moves
from cubecover.search import edge_keys, make_setv
from cubecover.symmetry import canonical, conjugates_many

from test_permcore import ORIENTATION_24Q


@pytest.fixture(scope="session")
def identity_cover(index, M):
    ledger, store = CoverLedger(), PositionsStore()
    stats = cover_step(identity()[:NEDGE], ledger, store, index, M)
    return ledger, store, stats


@pytest.fixture(scope="session")
def small_plan():
    return build_seed_plan(2)


# -- orbits -------------------------------------------------------------------

def test_orbit_ranks_match_full_conjugation(M, rng):
    X = mult_words([rng.integers(1, 13, size=10).tolist() for _ in range(20)])
    got = orbit_ranks(X[:, NEDGE:] - NEDGE, M)
    imgs = conjugates_many(X, M, with_inverse=True)          # (96, N, 48)
    want = np.stack([ci.rank_many(img[:, NEDGE:] - NEDGE) for img in imgs], axis=1)
    assert np.array_equal(got, want)
    assert np.array_equal(got[:, 0], ci.rank_many(X[:, NEDGE:] - NEDGE))


@settings(max_examples=30)
@given(st.lists(st.integers(1, 12), max_size=20))
def test_orbit_size_divides_96(M, w):
    assert 96 % len(eq_class_rel2(mult_el(w), M)) == 0


# -- ledger and store ---------------------------------------------------------

@settings(max_examples=25)
@given(st.lists(st.integers(1, ci.NRANKS), max_size=50))
def test_write_rcv_is_idempotent(ranks):
    a = CoverLedger()
    a.write_rcv(ranks)
    before = a.checked_count
    a.write_rcv(ranks)
    assert a.checked_count == before == len(set(ranks))
    assert not a.unchecked(ranks).any() if ranks else True


def test_ledger_counts_and_line():
    led = CoverLedger()
    assert led.checked_count == 0 and led.left == 44_089_920
    led.write_rcv({1, 2, 3})
    assert led.progress_line() == "Positions checked:3 Positions left:44089917"
    with pytest.raises(InputError):
        led.write_rcv([0])


def test_ledger_odd_detection():
    led = CoverLedger().write_rcv([1])
    assert not led.odd_marked()
    odd = 2187 * 1 + 1          # Lehmer rank 1 is a transposition
    assert ci.sigma_parity_many([odd])[0] == 1
    assert led.write_rcv([odd]).odd_marked()


def test_ledger_file_round_trip(tmp_path):
    led = CoverLedger().write_rcv([1, 17, ci.NRANKS])
    led.save(tmp_path / "v.qtmv")
    back = CoverLedger.load(tmp_path / "v.qtmv")
    assert np.array_equal(back.bits, led.bits)
    (tmp_path / "bad").write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(InputError):
        CoverLedger.load(tmp_path / "bad")


def test_store_round_trip_and_truncation(tmp_path):
    store = PositionsStore({5: (1, 2, 3), 1: (), 99: tuple(range(1, 13)) * 2})
    path = tmp_path / "p.qtmp"
    store.save(path)
    assert PositionsStore.load(path) == store
    data = path.read_bytes()
    (tmp_path / "t.qtmp").write_bytes(data[:-2])
    with pytest.raises(StoreIntegrityError):
        PositionsStore.load(tmp_path / "t.qtmp")
    (tmp_path / "x.qtmp").write_bytes(data + b"\0")
    with pytest.raises(StoreIntegrityError):
        PositionsStore.load(tmp_path / "x.qtmp")


# -- seeds --------------------------------------------------------------------

def test_seed_plan(small_plan, M):
    assert small_plan.lengths == [0] + [2] * 5
    assert is_identity(small_plan.seeds[0])
    full = np.zeros((len(small_plan), 48), dtype=np.uint8)
    full[:, :NEDGE] = np.stack(small_plan.seeds)
    full[:, NEDGE:] = np.arange(NEDGE, 48)
    canon = canonical(full, M)
    assert len({row.tobytes() for row in canon}) == len(small_plan)
    with pytest.raises(InputError):
        build_seed_plan(5)


def test_seed_file_round_trip(tmp_path, small_plan):
    write_seed_file(small_plan, tmp_path / "seeds.txt")
    back = read_seed_file(tmp_path / "seeds.txt")
    assert all(np.array_equal(a, b) for a, b in zip(back.seeds, small_plan.seeds))
    (tmp_path / "bad.txt").write_text("1 2 3\n")
    with pytest.raises(InputError):
        read_seed_file(tmp_path / "bad.txt")


def test_extension_seeds_match_next_even_layer(M):
    lower = make_setv("edge", 4)
    got = {int(k) for k in edge_keys(np.stack(list(extension_seeds(lower, M))))}
    want = {int(k) for k in edge_keys(seed_representatives(make_setv("edge", 6), 6, M))}
    assert got == want and len(got) == 8652


# -- covering -----------------------------------------------------------------

def test_identity_step(identity_cover):
    ledger, store, stats = identity_cover
    assert stats.newly_checked == ledger.checked_count == 3_079_007
    assert stats.words_stored == len(store)
    assert not ledger.odd_marked()
    assert all(len(w) <= 22 for w in store.values())


def test_stored_words_reach_their_class(identity_cover, M):
    _, store, _ = identity_cover
    keys = sorted(store)[::500]
    els = mult_words([list(store[k]) for k in keys])
    assert (els[:, :NEDGE] == np.arange(NEDGE)).all()
    assert np.array_equal(orbit_ranks(els[:, NEDGE:] - NEDGE, M).min(axis=1), keys)


def test_verify_agrees_with_ledger(identity_cover, M):
    ledger, store, _ = identity_cover
    assert verify(store, M) == ledger.checked_count


def test_verify_rejects_long_word(identity_cover, M):
    _, store, _ = identity_cover
    bad = PositionsStore(list(store.items())[:200])
    key = next(iter(bad))
    w = list(bad[key])
    bad[key] = tuple(w + [1, 7] * ((23 - len(w)) // 2) + [1] * ((23 - len(w)) % 2))
    assert len(bad[key]) == 23
    with pytest.raises(VerificationError):
        verify(bad, M)


def test_verify_rejects_wrong_class_and_edge_moves(identity_cover, M):
    _, store, _ = identity_cover
    items = list(store.items())[:50]
    swapped = PositionsStore(items)
    (k1, w1), (k2, w2) = items[0], items[1]
    swapped[k1], swapped[k2] = w2, w1
    with pytest.raises(StoreIntegrityError):
        verify(swapped, M)
    moved = PositionsStore(items)
    moved[k1] = (1, 2)
    with pytest.raises(VerificationError):
        verify(moved, M)


def test_run_cover_reports_each_seed_and_resumes(tmp_path, small_plan, index, M):
    lines = []
    led, store = run_cover(small_plan, progress=lines.append, index=index, M=M,
                           require_complete=False)
    assert len(lines) == len(small_plan)
    checked = [int(line.split()[1].split(":")[1]) for line in lines]
    assert checked[0] == 3_079_007 and checked == sorted(checked)
    assert led.checked_count > 3_079_007

    ck = tmp_path / "ck"
    with pytest.raises(IncompleteCoverError):
        run_cover(small_plan.seeds[:3], checkpoint=str(ck), progress=None, index=index, M=M)
    led2, store2, cursor = load_checkpoint(str(ck))
    assert cursor == 3
    run_cover(small_plan, led2, store2, checkpoint=str(ck), progress=None, index=index, M=M,
              start=cursor, require_complete=False)
    assert np.array_equal(led2.bits, led.bits)
    assert store2.keys() == store.keys()


@pytest.mark.slow
def test_desk_run_beyond_identity(index, M):
    plan = build_seed_plan(4)
    assert len(plan) == 1 + 5 + 128
    led, store = run_cover(plan, progress=None, index=index, M=M, require_complete=False)
    assert led.checked_count > 3_079_007
    assert verify(store, M) == led.checked_count


# -- solving ------------------------------------------------------------------

def test_solve_recovers_states_in_store(identity_cover, M, rng):
    _, store, _ = identity_cover
    keys = sorted(store)
    for key in rng.choice(keys, size=40, replace=False):
        base = mult_el(list(store[int(key)]))
        k = int(rng.integers(0, 96))
        x = base if k < 48 else np.argsort(base).astype(np.uint8)
        h, hinv = M.elements[k % 48], M.elements[M.inv[k % 48]]
        state = compose(compose(hinv, x), h)
        u = solve(state, store, M)
        assert len(u) <= 22
        assert is_identity(compose(state, mult_el(u)))


def test_solve_identity_and_errors(identity_cover, M):
    ledger, store, _ = identity_cover
    assert solve(identity(), store, M) == []
    with pytest.raises(DomainError, match="edge"):
        solve(mult_el([1]), store, M)
    missing = next(r for r in range(1, 1000) if ledger.unchecked([r])[0]
                   and not ci.sigma_parity_many([r])[0])
    state = corner_state_to_perm(*ci.decompose(ci.unrank(missing)))
    with pytest.raises(StoreIntegrityError):
        solve(state, store, M)


def test_corner_state_domain():
    with pytest.raises(DomainError):
        corner_state_to_perm((1, 0, 2, 3, 4, 5, 6, 7), (0,) * 8)
    with pytest.raises(DomainError):
        corner_state_to_perm(tuple(range(8)), (1,) + (0,) * 7)


@pytest.mark.parametrize("text", ORIENTATION_24Q)
def test_printed_orientation_positions_rejected(identity_cover, M, text):
    _, store, _ = identity_cover
    with pytest.raises(DomainError, match="edge"):
        solve(mult_el(parse_moves(text)), store, M)
