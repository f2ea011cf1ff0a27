"""Command-line interface.  JSON reports go to stdout, tables to stderr.

Exit codes: 0 success, 1 mathematical violation or failed lemma, 2 bad input
or environment (including a corrupt lattice cache).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .gf2core import GF2Error, format_literal, parse_literal
from .lattice import (
    LatticeCacheError,
    LatticeError,
    check_lattice_n,
    default_cache_path,
    get_lattice,
)
from .proofcheck import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    find_non_alpha_point,
    run_theorem2_pipeline,
    thomas_check,
)
from .search import (
    CheckpointError,
    SearchConfig,
    SearchError,
    build_instance,
    solve,
)
from .spreads import (
    SpreadCandidate,
    candidate_from_subspaces,
    disjoint_tuples,
    enumerate_line_spreads,
    parse_spread_text,
    verify_spread,
)

log = logging.getLogger("spreadcheck")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
DEFAULT_NODES_723 = 10**8


class InputError(Exception):
    """Bad user input or environment; maps to exit code 2."""


def _count(text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v < 0 or v != int(v):
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return int(v)


def _lattice(args, n: int, strict: bool = True, primary: bool = True):
    """``--cache`` names the file for the command's main lattice; others use the default dir."""
    path = Path(args.cache) if args.cache and primary else default_cache_path(n)
    return get_lattice(n, path, strict=strict)


def _read_candidate(path: str, n: int, s: int, t: int, lat) -> SpreadCandidate:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    subs = parse_spread_text(text, n)
    c = candidate_from_subspaces(subs, s, lat)
    return SpreadCandidate(n, s, t, c.members)


def _table(rows) -> None:
    for row in rows:
        print("  ".join(str(x) for x in row), file=sys.stderr)


# -- subcommands ------------------------------------------------------------------

def cmd_lattice(args):
    n = check_lattice_n(args.n)
    lat = _lattice(args, n, strict=False)
    counts = {f"dim{k}": c for k, c in enumerate(lat.counts())}
    _table((f"{k}:", c) for k, c in counts.items())
    return EXIT_OK, {"n": n, "counts": counts}


def cmd_enum4(args):
    lat = _lattice(args, 4)
    spreads = enumerate_line_spreads(lattice=lat)
    pairs = disjoint_tuples(spreads, 2)
    triples = disjoint_tuples(spreads, 3)
    bad = sum(verify_spread(s, lat) is not None for s in spreads)
    print(f"spreads: {len(spreads)}  disjoint ordered pairs: {len(pairs)}  "
          f"triples: {len(triples)}", file=sys.stderr)
    return (EXIT_VIOLATION if bad else EXIT_OK), {
        "count": len(spreads),
        "disjointPairs": len(pairs),
        "disjointTriples": len(triples),
        "spreads": [s.to_literals(lat) for s in spreads],
    }


def cmd_verify(args):
    n = check_lattice_n(args.n)
    if not 1 <= args.s < args.t <= n:
        raise InputError(f"need 1 <= s < t <= n, got s={args.s}, t={args.t}, n={n}")
    lat = _lattice(args, n)
    c = _read_candidate(args.spread_file, n, args.s, args.t, lat)
    v = verify_spread(c, lat)
    print(f"members: {len(c)}  verdict: {'ok' if v is None else v.kind}", file=sys.stderr)
    return (EXIT_OK if v is None else EXIT_VIOLATION), {
        "ok": v is None,
        "size": len(c),
        "violation": None if v is None else v.to_dict(lat),
    }


def cmd_proofcheck(args):
    lat = _lattice(args, 7)
    reports = run_theorem2_pipeline(lat, samples=args.samples, seed=args.seed,
                                    workers=args.workers)
    _table((r.lemma, r.status, r.examined, f"{r.millis} ms") for r in reports)
    ok = all(r.passed for r in reports)
    return (EXIT_OK if ok else EXIT_VIOLATION), {
        "passed": ok,
        "lemmas": [r.to_dict(timing=not args.no_timing) for r in reports],
    }


def _certificate_payload(cert, lat, small=None):
    out = {"kind": cert.kind, "point": None, "violation": None, "witness": []}
    if cert.violation is not None:
        out["violation"] = cert.violation.to_dict(lat)
    if cert.point is not None:
        out["point"] = format(cert.point, f"0{lat.n}b")
        wl = small or lat
        out["witness"] = [format_literal(wl.subspace(w)) for w in cert.witness if w is not None]
    return out


def cmd_certify_theorem2(args):
    lat = _lattice(args, 7)
    c = _read_candidate(args.spread_file, 7, 2, 3, lat)
    try:
        u = lat.id_of(parse_literal(args.u, 7))
    except GF2Error as exc:
        raise InputError(str(exc)) from exc
    if u.dim != 6:
        raise InputError(f"--u must be 6-dimensional, got dimension {u.dim}")
    cert = find_non_alpha_point(u, c, lat, force=args.force)
    print(f"certificate: {cert.kind}", file=sys.stderr)
    return (EXIT_OK if cert.kind == "point" else EXIT_VIOLATION), _certificate_payload(cert, lat)


def cmd_certify_thomas(args):
    lat = _lattice(args, 7)
    c = _read_candidate(args.spread_file, 7, 2, 3, lat)
    cert = thomas_check(c, lat, force=args.force)
    print(f"certificate: {cert.kind}", file=sys.stderr)
    small = _lattice(args, 6, primary=False)
    return (EXIT_OK if cert.kind == "point" else EXIT_VIOLATION), _certificate_payload(cert, lat, small)


def cmd_search(args):
    n, s, t = args.n, args.s, args.t
    lat = _lattice(args, check_lattice_n(n))
    nodes = args.nodes
    if nodes is None and (n, s, t) == (7, 2, 3):
        nodes = DEFAULT_NODES_723
    off = set(args.no_prune or ())
    config = SearchConfig(
        nodes=nodes, depth=args.depth, limit=args.limit,
        point_degree="point-degree" not in off, hyperplane_45="hyperplane-45" not in off,
        fivespace_5="fivespace-5" not in off, symmetry=args.symmetry,
        checkpoint=args.checkpoint, workers=args.workers, seed=args.search_seed,
    )
    instance = build_instance(n, s, t, lat)
    sols, stats = solve(instance, config, resume=args.resume)
    spreads = [SpreadCandidate(n, s, t, sol) for sol in sols]
    bad = [i for i, c in enumerate(spreads) if verify_spread(c, lat) is not None]
    print(f"nodes: {stats.nodes}  max depth: {stats.max_depth}  solutions: {len(sols)}  "
          f"exhausted: {stats.exhausted}", file=sys.stderr)
    for rule, k in stats.prunes.items():
        print(f"  prune {rule}: {k}", file=sys.stderr)
    return (EXIT_VIOLATION if bad else EXIT_OK), {
        "params": [n, s, t],
        "exhausted": stats.exhausted,
        "stats": stats.to_dict(timing=not args.no_timing),
        "solutions": [c.to_literals(lat) for c in spreads],
    }, config.to_dict()


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cache", help="lattice cache file (default: $SPREADCHECK_CACHE_DIR"
                                        "/lattice-n<N>.gflt or ~/.cache/spreadcheck)")
    common.add_argument("--json", metavar="FILE", help="write the JSON report to FILE instead of stdout")
    common.add_argument("--no-timing", action="store_true",
                        help="zero all wall-time fields so reports are byte-reproducible")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="spreadcheck", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("lattice", parents=[common], help="build or load the subspace lattice")
    q.add_argument("n", type=int)
    q.set_defaults(func=cmd_lattice)

    q = sub.add_parser("spreads", help="spread enumeration")
    ssub = q.add_subparsers(dest="spreads_command", required=True)
    e = ssub.add_parser("enum4", parents=[common], help="all line spreads of V(4,2)")
    e.set_defaults(func=cmd_enum4)

    q = sub.add_parser("verify", parents=[common], help="check a spread literal file")
    q.add_argument("spread_file")
    q.add_argument("n", type=int)
    q.add_argument("s", type=int)
    q.add_argument("t", type=int)
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("proofcheck", parents=[common], help="run every proof-step check")
    q.add_argument("--samples", type=_count, default=DEFAULT_SAMPLES)
    q.add_argument("--seed", type=int, default=DEFAULT_SEED)
    q.add_argument("--workers", type=int, default=1)
    q.set_defaults(func=cmd_proofcheck)

    q = sub.add_parser("certify-theorem2", parents=[common],
                       help="find a non-alpha point of a (2,3) candidate inside a 6-space")
    q.add_argument("spread_file")
    q.add_argument("--u", required=True, help="6-space literal, e.g. 1000000;0100000;...")
    q.add_argument("--force", action="store_true", help="skip the spread check")
    q.set_defaults(func=cmd_certify_theorem2)

    q = sub.add_parser("certify-thomas", parents=[common],
                       help="find a point with non-geometric derived spread")
    q.add_argument("spread_file")
    q.add_argument("--force", action="store_true", help="skip the spread check")
    q.set_defaults(func=cmd_certify_thomas)

    q = sub.add_parser("search", parents=[common], help="exact-cover search for (s,t)-spreads")
    q.add_argument("n", type=int)
    q.add_argument("s", type=int)
    q.add_argument("t", type=int)
    q.add_argument("--nodes", type=_count, help="node budget (default 1e8 for 7 2 3, else none)")
    q.add_argument("--depth", type=_count)
    q.add_argument("--limit", type=_count, help="stop after this many solutions")
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--seed", dest="search_seed", type=int,
                   help="shuffle candidate order with this seed (default: canonical order)")
    q.add_argument("--symmetry", choices=["none", "fix-first"], default="none")
    q.add_argument("--no-prune", action="append",
                   choices=["point-degree", "hyperplane-45", "fivespace-5"])
    q.add_argument("--checkpoint", help="write a resumable checkpoint here on budget exhaustion")
    q.add_argument("--resume", help="continue from this checkpoint")
    q.set_defaults(func=cmd_search)
    return p


def _config_echo(args) -> dict:
    skip = {"func", "json", "verbose", "command", "spreads_command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    command = args.command if args.command != "spreads" else f"spreads {args.spreads_command}"
    t0 = time.perf_counter()
    config = _config_echo(args)
    try:
        out = args.func(args)
        code, result = out[0], out[1]
        if len(out) > 2:
            config["search"] = out[2]
        status = "ok" if code == EXIT_OK else "fail"
    except (InputError, GF2Error, LatticeError, SearchError, CheckpointError, ValueError) as exc:
        if isinstance(exc, LatticeCacheError):
            msg = f"{exc} (delete the file or run `spreadcheck lattice` to rebuild)"
        else:
            msg = str(exc)
        print(f"error: {msg}", file=sys.stderr)
        code, result, status = EXIT_INPUT, {"error": msg}, "error"
    report = {
        "schemaVersion": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "status": status,
        "exitCode": code,
        "millis": 0 if args.no_timing else round((time.perf_counter() - t0) * 1000),
        "result": result,
    }
    text = json.dumps(report, indent=1, sort_keys=False) + "\n"
    if args.json:
        Path(args.json).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
