import json

import pytest

from cubecover.cli import _memory, build_parser, main
from cubecover.cover import CoverLedger, PositionsStore, cover_step
from cubecover.permcore import NEDGE, format_moves, identity, mult_el, parse_moves


def test_tables_json(capsys):
    assert main(["tables", "--group", "edge", "--depth", "3", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["Positions"] for r in rows] == [1, 12, 114, 1068]
    assert [r["Unique wrt M+inv"] for r in rows] == [1, 1, 5, 17]


def test_tables_text_and_csv(capsys):
    main(["tables", "--depth", "2"])
    out = capsys.readouterr().out.splitlines()
    assert out[0].split()[0] == "Dist" and out[-1].split() == ["2", "114", "5", "5"]
    main(["tables", "--depth", "2", "--format", "csv"])
    assert capsys.readouterr().out.splitlines()[-1] == "2,114,5,5"


def test_tables_depth_limit(capsys):
    assert main(["tables", "--group", "cube", "--depth", "9"]) == 2
    assert "exceeds" in capsys.readouterr().err


def test_distdist_text_suffix(capsys):
    assert main(["distdist", "fix-edges", "--max", "8"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1].split() == ["8q", "240", "5", "3"]
    assert main(["distdist", "--max", "14"]) == 2


def test_cover_identity_only_is_incomplete(tmp_path, capsys):
    store = tmp_path / "p.qtmp"
    assert main(["cover", "--seeds", "identity-only", "--store", str(store)]) == 4
    out = capsys.readouterr()
    assert out.out.splitlines()[0] == "Positions checked:3079007 Positions left:41010913"
    assert "41010913" in out.err
    assert store.exists()
    assert main(["verify", "--store", str(store)]) == 5


def test_cover_bad_seed_spec(capsys):
    assert main(["cover", "--seeds", "no-such-file"]) == 2


@pytest.fixture(scope="module")
def store_path(tmp_path_factory, index, M):
    ledger, store = CoverLedger(), PositionsStore()
    cover_step(identity()[:NEDGE], ledger, store, index, M)
    path = tmp_path_factory.mktemp("store") / "p.qtmp"
    store.save(path)
    return path, store


def test_solve_moves(store_path, capsys):
    path, store = store_path
    key, w = next((k, w) for k, w in store.items() if len(w) == 8)
    assert main(["solve", "--store", str(path), "--moves", format_moves(w)]) == 0
    u = parse_moves(capsys.readouterr().out.strip())
    assert len(u) <= 22
    assert (mult_el(list(w) + u) == identity()).all()


def test_solve_rejects_edge_moves_and_bad_tokens(store_path, capsys):
    path, _ = store_path
    assert main(["solve", "--store", str(path), "--moves", "U"]) == 2
    assert "edge" in capsys.readouterr().err
    assert main(["solve", "--store", str(path), "--moves", "U Z"]) == 2
    assert "offset 2" in capsys.readouterr().err
    assert main(["solve", "--store", str(path), "--corners", "2 1 3 4 5 6 7 8/0 0 0 0 0 0 0 0"]) == 2


def test_solve_identity_rank(store_path, capsys):
    path, _ = store_path
    assert main(["solve", "--store", str(path), "--rank", "1"]) == 0
    assert capsys.readouterr().out.strip() == "(solved)"


def test_selftest(capsys):
    assert main(["selftest", "--rank-range", "20000", "--samples", "200"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_bfs_cache(tmp_path, capsys):
    assert main(["bfs-cache", "--group", "edge", "--depth", "2", "--cache-dir", str(tmp_path)]) == 0
    assert capsys.readouterr().out.split() == ["1", "12", "114"]
    assert (tmp_path / "edge-2.qtmb").exists()


def test_memory_argument():
    assert _memory("2G") == 2 << 30
    assert _memory("512M") == 512 << 20
    args = build_parser().parse_args(["tables", "--mem", "1G", "--threads", "4"])
    assert args.mem == 1 << 30 and args.threads == 4


def test_cover_continues_from_base(tmp_path, capsys):
    base = tmp_path / "base"
    assert main(["cover", "--seeds", "identity-only", "--checkpoint", str(base)]) == 4
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("# U U applied to the edges\n" + " ".join(
        str(int(x) + 1) for x in mult_el([1, 1])[:NEDGE]) + "\n")
    assert main(["cover", "--seeds", str(seeds), "--base", str(base),
                 "--checkpoint", str(tmp_path / "next")]) == 4
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("Positions checked:3079007")
    checked = int(lines[-1].split()[1].split(":")[1])
    assert checked > 3_079_007
    assert main(["cover", "--seeds", str(seeds), "--base", str(tmp_path / "missing")]) == 2
