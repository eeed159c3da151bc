"""Command-line driver over the core package.

Exit codes: 0 success / checks pass; 1 a checker failed (the report,
including replayable witnesses, is still written); 2 usage or document
error; 3 expansion budget exhausted.  Output is canonical JSON or DOT —
no timestamps, no floats — so identical invocations produce identical
bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .cover import CoverComplex, format_cell, parse_cell
from .documents import (
    ball_obj,
    deck_obj,
    dist_obj,
    document_for,
    dump_json,
    format_rational,
    geodesics_obj,
    graph_document,
    graph_dot,
    parse_rational,
    parse_spec_document,
)
from .errors import BudgetExceeded, ChamberComplexError
from .fixtures import FIXTURES
from .lemmas import (
    check_ball_sandwich,
    check_chain_shadow,
    check_convexity,
    check_double_crossing_gap,
    check_no_column_reentry,
    check_parallel_geodesics,
    check_wall_crossing_bound,
    estimate_wall_constants,
    replay_witness,
    run_suite,
    sample_pairs,
)
from .metric import (
    MetricParams,
    Window,
    all_geodesics,
    ball,
    displacement_growth,
    dist_prime,
    root_cell,
    validate_deck,
)
from .surface import validate_pattern
from .torusbundle import (
    GroupElement,
    MonodromyMatrix,
    geometric_series_order_bruteforce,
    geometric_series_order_constructive,
    loop_decomposition,
    power,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

PAIR_CHECKERS = {
    "wall-crossing": check_wall_crossing_bound,
    "column-interval": check_no_column_reentry,
    "chain-shadow": check_chain_shadow,
    "double-crossing": check_double_crossing_gap,
    "parallel-geodesics": check_parallel_geodesics,
}
LEMMA_IDS = tuple(PAIR_CHECKERS) + ("convexity", "ball-sandwich")


def window_extents(n: int):
    """--window n: column radius n, level radius 4n at the base chamber,
    both halved (floored) per chamber step while the column radius stays
    positive; at most three depths."""
    if n < 1:
        raise ValueError("--window must be >= 1")
    out = [(n, 4 * n)]
    if n // 2 >= 1:
        out.append((n // 2, 2 * n))
    if n // 4 >= 1:
        out.append((n // 4, n))
    return tuple(out)


def _emit(text: str, args):
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _context(args):
    """(complex, params) from --spec/--fixture plus metric overrides.

    --H without --J re-derives J = 11H so the standard regime survives
    a single-knob override."""
    if getattr(args, "spec", None):
        doc = parse_spec_document(Path(args.spec).read_bytes())
    else:
        doc = document_for(FIXTURES[getattr(args, "fixture", None) or "pants-swap"]())
    params = doc.metric
    eta = parse_rational(args.eta, "--eta") if getattr(args, "eta", None) else params.eta
    if getattr(args, "J", None):
        J = parse_rational(args.J, "--J")
    elif getattr(args, "H", None):
        J = None
    else:
        J = params.J
    H = parse_rational(args.H, "--H") if getattr(args, "H", None) else params.H
    budget = getattr(args, "budget", None) or params.budget
    return CoverComplex(doc.spec), MetricParams(eta=eta, H=H, J=J, budget=budget), doc


def _window(args, cx, base=None, default=None):
    n = getattr(args, "window", None)
    if n is None:
        n = default
    if n is None:
        return None
    return Window(cx, extents=window_extents(n), base=base)


def _parse_matrix_flag(text: str) -> MonodromyMatrix:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"--matrix wants 4 integers a,b,c,d, got {text!r}")
    a, b, c, d = (int(p) for p in parts)
    return MonodromyMatrix(((a, b), (c, d)))


def _parse_element_flag(text: str, context: MonodromyMatrix) -> GroupElement:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"--element wants 3 integers x,y,z, got {text!r}")
    x, y, z = (int(p) for p in parts)
    return GroupElement((x, y), z, context)


# ------------------------------------------------------------- subcommands

def cmd_validate(args):
    cx, params, doc = _context(args)
    radius = args.window if args.window is not None else 4
    patterns = []
    for p in doc.spec.chamber_types:
        rep = validate_pattern(p, window_radius=radius)
        patterns.append({"label": p.label, "ok": rep.ok, "checks": rep.checks})
    deck_failures = validate_deck(cx)
    ok = all(p["ok"] for p in patterns) and not deck_failures
    _emit(dump_json({
        "command": "validate",
        "ok": ok,
        "document": doc.to_obj(),
        "patterns": patterns,
        "deck": {"ok": not deck_failures, "failures": deck_failures},
    }), args)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_dist(args):
    cx, params, _ = _context(args)
    q1 = parse_cell(args.cell1, cx)
    q2 = parse_cell(args.cell2, cx)
    window = _window(args, cx, base=q1)
    value, res = dist_prime(cx, params, q1, q2, window=window)
    if args.json:
        _emit(dump_json({"command": "dist", **dist_obj(q1, q2, value, res)}), args)
    else:
        _emit(format_rational(value) + "\n", args)
    return EXIT_PASS


def cmd_geodesics(args):
    cx, params, _ = _context(args)
    q1 = parse_cell(args.cell1, cx)
    q2 = parse_cell(args.cell2, cx)
    window = _window(args, cx, base=q1)
    geos, truncated = all_geodesics(cx, params, q1, q2, window=window, limit=args.limit)
    _emit(dump_json({"command": "geodesics", **geodesics_obj(q1, q2, geos, truncated)}), args)
    return EXIT_PASS


def cmd_ball(args):
    cx, params, _ = _context(args)
    center = parse_cell(args.center, cx) if args.center else root_cell(cx)
    R = parse_rational(args.R, "--R")
    window = _window(args, cx, base=center)
    cells = ball(cx, params, center, R, variant=args.variant, window=window)
    _emit(dump_json({"command": "ball", **ball_obj(cells)}), args)
    return EXIT_PASS


def cmd_deck(args):
    cx, params, _ = _context(args)
    cell = parse_cell(args.cell, cx) if args.cell else root_cell(cx)
    window = _window(args, cx, base=cell)
    failures = validate_deck(cx)
    report = displacement_growth(cx, params, cell, n_max=args.n_max, window=window)
    _emit(dump_json({"command": "deck", **deck_obj(failures, report)}), args)
    return EXIT_PASS if not failures else EXIT_FAIL


def _verdict_exit(verdict: str) -> int:
    if verdict == "pass":
        return EXIT_PASS
    if verdict == "budget-exhausted":
        return EXIT_BUDGET
    return EXIT_FAIL


def cmd_verify(args):
    cx, params, _ = _context(args)
    window = Window(cx, extents=window_extents(args.window if args.window is not None else 2))
    if args.replay:
        payload = json.loads(Path(args.replay).read_text(encoding="utf-8"))
        witnesses = payload.get("witnesses", [payload] if "lemma" in payload else [])
        if not witnesses:
            raise ValueError(f"{args.replay} holds no witnesses")
        confirmed = sum(bool(replay_witness(cx, params, w, window)) for w in witnesses)
        _emit(dump_json({
            "command": "verify",
            "lemma": args.lemma,
            "replayed": len(witnesses),
            "confirmed": confirmed,
        }), args)
        return EXIT_FAIL if confirmed else EXIT_PASS
    if args.lemma in PAIR_CHECKERS:
        pairs, searches = sample_pairs(cx, params, window, n_sources=args.n_sources,
                                       per_source=args.per_source, seed=args.seed)
        report = PAIR_CHECKERS[args.lemma](cx, params, pairs, searches, window)
    else:
        center = parse_cell(args.center, cx) if args.center else root_cell(cx)
        R = parse_rational(args.R, "--R") if args.R else 2 * params.H
        if args.lemma == "convexity":
            report = check_convexity(cx, params, center, R, window)
        else:
            report = check_ball_sandwich(cx, params, center, R, window, shells=args.shells)
    _emit(dump_json(report.to_json()), args)
    return _verdict_exit(report.verdict)


def cmd_estimate_c0(args):
    cx, params, doc = _context(args)
    reach = args.window if args.window is not None else 12
    _emit(dump_json({
        "command": "estimate-c0",
        "window": reach,
        "gluings": [{"index": gi, **estimate_wall_constants(g.map, window=reach).to_json()}
                    for gi, g in enumerate(doc.spec.gluings)],
    }), args)
    return EXIT_PASS


def cmd_suite(args):
    cx, params, _ = _context(args)
    window = Window(cx, extents=window_extents(args.window if args.window is not None else 2))
    reports = run_suite(cx, params, window, seed=args.seed,
                        n_sources=args.n_sources, per_source=args.per_source)
    verdicts = [r.verdict for r in reports]
    _emit(dump_json({
        "command": "suite",
        "ok": all(v == "pass" for v in verdicts),
        "reports": [r.to_json() for r in reports],
    }), args)
    if "fail" in verdicts:
        return EXIT_FAIL
    if "budget-exhausted" in verdicts:
        return EXIT_BUDGET
    return EXIT_PASS


def cmd_export_graph(args):
    cx, params, _ = _context(args)
    window = Window(cx, extents=window_extents(args.window if args.window is not None else 1))
    if args.format == "dot":
        _emit(graph_dot(window, params), args)
    else:
        _emit(dump_json(graph_document(window, params)), args)
    return EXIT_PASS


def cmd_tb_order(args):
    A = _parse_matrix_flag(args.matrix)
    if args.method == "constructive":
        d = geometric_series_order_constructive(A, args.k)
    else:
        d = geometric_series_order_bruteforce(A, args.k)
    _emit(f"{d}\n", args)
    return EXIT_PASS


def cmd_tb_loops(args):
    A = _parse_matrix_flag(args.matrix)
    g = _parse_element_flag(args.element, A)
    dec = loop_decomposition(A, args.k, g)
    _emit(dump_json({
        "command": "tb-loops",
        "matrix": [list(r) for r in A.entries],
        "k": dec.k,
        "m": 3 ** dec.k,
        "element": {"v": list(g.v), "z": g.z},
        "count": dec.count,
        "max_degree": dec.degrees[-1],
        "degrees": list(dec.degrees),
    }), args)
    return EXIT_PASS


def cmd_tb_power(args):
    A = _parse_matrix_flag(args.matrix)
    g = _parse_element_flag(args.element, A)
    h = power(g, args.i)
    _emit(f"(({h.v[0]}, {h.v[1]}), {h.z})\n", args)
    return EXIT_PASS


# ------------------------------------------------------------- parser

def _add_common(sub, window_help="window scale (see window_extents)"):
    sub.add_argument("--spec", help="path to a manifold-spec JSON document")
    sub.add_argument("--fixture", choices=sorted(FIXTURES),
                     help="built-in spec (default: pants-swap)")
    sub.add_argument("--eta", help="vertical step weight, rational like 1/8")
    sub.add_argument("--H", help="wall crossing weight, rational")
    sub.add_argument("--J", help="chamber distance weight, rational")
    sub.add_argument("--window", type=int, help=window_help)
    sub.add_argument("--budget", type=int, help="max materialized cells per query")
    sub.add_argument("--out", help="write output to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chambercomplex",
        description="Chamber-complex metric queries, lemma checks and exports.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="parse a document and run structural checks")
    _add_common(p, window_help="column tree radius for the pattern checks (default 4)")
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("dist", help="dist' between two cell addresses")
    _add_common(p)
    p.add_argument("cell1")
    p.add_argument("cell2")
    p.add_argument("--json", action="store_true", help="full result object")
    p.set_defaults(func=cmd_dist)

    p = subs.add_parser("geodesics", help="enumerate geodesics between two cells")
    _add_common(p)
    p.add_argument("cell1")
    p.add_argument("cell2")
    p.add_argument("--limit", type=int, default=64)
    p.set_defaults(func=cmd_geodesics)

    p = subs.add_parser("ball", help="metric ball / sublevel set around a cell")
    _add_common(p)
    p.add_argument("--center", help="cell address (default: root)")
    p.add_argument("--R", required=True, help="radius, rational")
    p.add_argument("--variant", choices=("B", "Bprime", "P"), default="B")
    p.set_defaults(func=cmd_ball)

    p = subs.add_parser("deck", help="deck-map compatibility and displacement growth")
    _add_common(p)
    p.add_argument("--cell", help="base cell (default: root)")
    p.add_argument("--n-max", type=int, default=8)
    p.set_defaults(func=cmd_deck)

    p = subs.add_parser("verify", help="run one lemma checker (or replay witnesses)")
    _add_common(p, window_help="window scale for the check (default 2)")
    p.add_argument("lemma", choices=LEMMA_IDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-sources", type=int, default=4)
    p.add_argument("--per-source", type=int, default=4)
    p.add_argument("--center", help="center cell for convexity/ball-sandwich")
    p.add_argument("--R", help="radius for convexity/ball-sandwich (default 2H)")
    p.add_argument("--shells", action="store_true",
                   help="also check shell disjointness (ball-sandwich)")
    p.add_argument("--replay", help="witness or report JSON file to replay")
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("estimate-c0", help="wall-chart clause constants per gluing")
    _add_common(p, window_help="chart reach for the estimate (default 12)")
    p.set_defaults(func=cmd_estimate_c0)

    p = subs.add_parser("suite", help="the full checker suite on one window")
    _add_common(p, window_help="window scale (default 2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-sources", type=int, default=4)
    p.add_argument("--per-source", type=int, default=4)
    p.set_defaults(func=cmd_suite)

    p = subs.add_parser("tb", help="torus-bundle arithmetic")
    tbsubs = p.add_subparsers(dest="tb_command", required=True)

    q = tbsubs.add_parser("order", help="geometric-series order mod 3^k")
    q.add_argument("--matrix", required=True, help="a,b,c,d row-major, det 1")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--method", choices=("brute", "constructive"), default="brute")
    q.add_argument("--out")
    q.set_defaults(func=cmd_tb_order)

    q = tbsubs.add_parser("loops", help="loop decomposition at m = 3^k")
    q.add_argument("--matrix", required=True, help="a,b,c,d row-major, det 1")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--element", required=True, help="x,y,z")
    q.add_argument("--out")
    q.set_defaults(func=cmd_tb_loops)

    q = tbsubs.add_parser("power", help="closed-form power of a group element")
    q.add_argument("--matrix", required=True, help="a,b,c,d row-major, det 1")
    q.add_argument("--element", required=True, help="x,y,z")
    q.add_argument("--i", type=int, required=True)
    q.add_argument("--out")
    q.set_defaults(func=cmd_tb_power)

    p = subs.add_parser("export-graph", help="adjacency of one window, DOT or JSON")
    _add_common(p, window_help="window scale (default 1)")
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.set_defaults(func=cmd_export_graph)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage errors
        return 0 if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except BudgetExceeded as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except ChamberComplexError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
