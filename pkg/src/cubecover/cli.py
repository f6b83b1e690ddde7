"""Command line entry point: ``cubecover <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import cornerindex as ci
from .errors import CubeCoverError, InputError, VerificationError
from .permcore import NEDGE, format_moves, mult_el, parse_moves

EDGE_HEADER = ("Dist", "Positions", "Unique wrt M", "Unique wrt M+inv")
DIST_HEADER = ("Distance", "Nr of pos", "Unique wrt M", "Unique wrt M + inv")

log = logging.getLogger("cubecover")


def _cache_dir(args):
    return args.cache_dir or os.environ.get("QTM_CACHE_DIR")


def _memory(text):
    text = str(text).strip().upper()
    scale = {"K": 1 << 10, "M": 1 << 20, "G": 1 << 30}
    value = int(text[:-1]) * scale[text[-1]] if text[-1] in scale else int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("memory budget must be positive")
    return value


def emit_table(rows, header, fmt, out=None, suffix=""):
    out = out or sys.stdout
    if fmt == "json":
        json.dump([dict(zip(header, r)) for r in rows], out, indent=1)
        out.write("\n")
    elif fmt == "csv":
        w = csv.writer(out)
        w.writerow(header)
        w.writerows(rows)
    else:
        widths = [max(len(h), 12) for h in header]
        out.write("  ".join(h.rjust(w) for h, w in zip(header, widths)) + "\n")
        for r in rows:
            cells = [f"{r[0]}{suffix}"] + [str(x) for x in r[1:]]
            out.write("  ".join(c.rjust(w) for c, w in zip(cells, widths)) + "\n")


def cmd_tables(args):
    from .search import cached_setv, edge_table
    from .symmetry import count_classes
    limit = 8 if args.group == "edge" else 7
    if args.depth > limit:
        raise InputError(f"--depth {args.depth} exceeds {limit} for the {args.group} group")
    bfs = cached_setv(args.group, args.depth, _cache_dir(args), args.mem)
    if args.group == "edge":
        rows = edge_table(bfs)
    else:
        rows = [(d, len(L.elements), count_classes(L.elements, with_inverse=False),
                 count_classes(L.elements)) for d, L in enumerate(bfs.layers)]
    emit_table(rows, EDGE_HEADER, args.format)
    return 0


def cmd_distdist(args):
    from .search import default_index, distance_distribution
    index = default_index(cache_dir=_cache_dir(args))
    rows = distance_distribution(args.subgroup, args.max, index)
    emit_table(rows, DIST_HEADER, args.format, suffix="q" if args.format == "text" else "")
    return 0


def _seed_source(spec, cache_dir):
    from .cover import SeedPlan, build_seed_plan, extension_seeds, read_seed_file
    from .permcore import identity
    from .search import cached_setv
    if spec in ("identity", "identity-only"):
        return SeedPlan([identity()[:NEDGE]], [0])
    if spec.isdigit():
        return build_seed_plan(int(spec), cache_dir)
    if spec == "extended":
        # length-8 seeds streamed from the depth-6 layers; no depth-8 table needed
        plan = build_seed_plan(6, cache_dir)

        def stream():
            yield from plan.seeds
            yield from extension_seeds(cached_setv("edge", 6, cache_dir))
        return stream()
    if os.path.exists(spec):
        return read_seed_file(spec)
    raise InputError(f"--seeds: expected identity-only, a length, 'extended' or a file, got {spec!r}")


def cmd_cover(args):
    from .cover import CoverLedger, PositionsStore, load_checkpoint, run_cover
    from .search import default_index
    ledger, store, start = CoverLedger(), PositionsStore(), 0
    resumed = load_checkpoint(args.checkpoint) if args.checkpoint else None
    if resumed:
        ledger, store, start = resumed
        print(f"resuming after seed {start}: {ledger.progress_line()}", file=sys.stderr)
    elif args.base:
        base = load_checkpoint(args.base)
        if base is None:
            raise InputError(f"--base: no checkpoint in {args.base}")
        ledger, store, _ = base
        print(f"continuing from {args.base}: {ledger.progress_line()}", file=sys.stderr)
    seeds = _seed_source(args.seeds, _cache_dir(args))
    index = default_index(cache_dir=_cache_dir(args))
    try:
        run_cover(seeds, ledger, store, args.checkpoint,
                  progress=lambda line: print(line, flush=True), index=index, start=start)
    finally:
        if args.store:
            store.save(args.store)
    return 0


def cmd_verify(args):
    from .cover import PositionsStore, verify
    store = PositionsStore.load(args.store)
    count = verify(store)
    print(count)
    if count != ci.EVEN_RANKS:
        raise VerificationError(f"verification checked {count} of {ci.EVEN_RANKS} positions")
    return 0


def _parse_corners(text):
    try:
        perm_part, ori_part = text.split("/")
        sigma = [int(x) - 1 for x in perm_part.replace(",", " ").split()]
        ori = [int(x) for x in ori_part.replace(",", " ").split()]
    except ValueError:
        raise InputError("--corners expects 'p1 .. p8 / o1 .. o8' (1-based slots)") from None
    if sorted(sigma) != list(range(8)) or len(ori) != 8:
        raise InputError("--corners expects a permutation of 1..8 and eight twists")
    return sigma, ori


def cmd_solve(args):
    from .cover import PositionsStore, corner_state_to_perm, solve
    store = PositionsStore.load(args.store)
    if args.moves is not None:
        state = mult_el(parse_moves(args.moves))
    elif args.corners is not None:
        state = corner_state_to_perm(*_parse_corners(args.corners))
    else:
        state = corner_state_to_perm(*ci.decompose(ci.unrank(args.rank)))
    word = solve(state, store)
    print(format_moves(word) if word else "(solved)")
    print(f"{len(word)}q", file=sys.stderr)
    return 0


def cmd_selftest(args):
    from .permcore import build_generators, invg, mult_words, word_parity
    from .symmetry import build_m
    checks = []

    def check(name, fn):
        try:
            ok = bool(fn())
        except CubeCoverError as exc:
            ok = False
            name = f"{name}: {exc}"
        checks.append(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}")

    check("generators and k1/k2 action", lambda: build_generators() is not None)
    check("symmetry group closure", lambda: build_m().order > 0)
    check("cubie layout rigidity", lambda: ci.corner_layout() is not None)
    check(f"rank bijectivity on 1..{args.rank_range}",
          lambda: ci.bijectivity_selftest(1, min(args.rank_range, ci.NRANKS)))

    def parity():
        rng = np.random.default_rng(args.seed)
        words = [list(rng.integers(1, 13, size=rng.integers(0, 23))) for _ in range(args.samples)]
        return all(word_parity(mult_el(w)) == len(w) % 2 for w in words)
    check(f"parity law on {args.samples} random words", parity)

    def inverses():
        rng = np.random.default_rng(args.seed + 1)
        words = [list(rng.integers(1, 13, size=rng.integers(0, 23))) for _ in range(args.samples)]
        els = mult_words([w + invg(w) for w in words])
        return (els == np.arange(48)).all()
    check("w * invg(w) is the identity", inverses)
    return 0 if all(checks) else 5


def cmd_bfs_cache(args):
    from .search import cached_setv
    cache = _cache_dir(args)
    if not cache:
        raise InputError("bfs-cache needs --cache-dir or QTM_CACHE_DIR")
    bfs = cached_setv(args.group, args.depth, cache, args.mem)
    print(" ".join(map(str, bfs.sizes())))
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="cubecover",
        description="Cover the edge-solved cube positions with words of at most 22 quarter turns.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--cache-dir", default=None)
        sp.add_argument("--mem", type=_memory, default="4G", help="memory budget, e.g. 2G")
        sp.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; work runs on one thread")
        sp.add_argument("--format", choices=("text", "csv", "json"), default="text")
        return sp

    sp = common(sub.add_parser("tables", help="layer sizes and class counts"))
    sp.add_argument("--group", choices=("edge", "cube"), default="edge")
    sp.add_argument("--depth", type=int, default=5)
    sp.set_defaults(func=cmd_tables)

    sp = common(sub.add_parser("distdist", help="distance table of a subgroup"))
    sp.add_argument("subgroup", nargs="?", choices=("fix-edges", "fix-cubies"), default="fix-edges")
    sp.add_argument("--max", type=int, default=12)
    sp.set_defaults(func=cmd_distdist)

    sp = common(sub.add_parser("cover", help="run the covering sweep"))
    sp.add_argument("--seeds", default="6",
                    help="identity-only, a maximum even seed length, 'extended', or a seed file")
    sp.add_argument("--checkpoint", default=None, help="checkpoint directory (resumes if present)")
    sp.add_argument("--store", default=None, help="write the positions store here")
    sp.add_argument("--base", default=None,
                    help="start from the ledger and store of a finished checkpoint, new seed cursor")
    sp.set_defaults(func=cmd_cover)

    sp = common(sub.add_parser("verify", help="independently re-check a positions store"))
    sp.add_argument("--store", required=True)
    sp.set_defaults(func=cmd_verify)

    sp = common(sub.add_parser("solve", help="word of length <= 22 for an E_f state"))
    sp.add_argument("--store", required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--moves", help="scramble in face-turn notation")
    g.add_argument("--corners", help="corner state 'p1..p8/o1..o8'")
    g.add_argument("--rank", type=int, help="corner rank in 1..88179840")
    sp.set_defaults(func=cmd_solve)

    sp = common(sub.add_parser("selftest", help="construction and bijectivity checks"))
    sp.add_argument("--rank-range", type=int, default=1_000_000)
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_selftest)

    sp = common(sub.add_parser("bfs-cache", help="build and store a layer cache"))
    sp.add_argument("--group", choices=("edge", "cube"), default="cube")
    sp.add_argument("--depth", type=int, default=6)
    sp.set_defaults(func=cmd_bfs_cache)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CubeCoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
