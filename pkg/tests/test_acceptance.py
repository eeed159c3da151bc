"""Acceptance gate: one test per numbered criterion, desk scale.

Each test enforces its own wall-clock budget; `pytest -v` prints one
pass/fail line per criterion.  Oracles here are written from scratch
(BFS tree counts, heapq Dijkstra, trace arithmetic) so a shared bug in
the package cannot vouch for itself.
"""

import heapq
import itertools
import json
import random
import time
from collections import deque
from fractions import Fraction as F

import pytest

from chambercomplex.cli import main, window_extents
from chambercomplex.cover import CoverComplex, chamber_distance
from chambercomplex.fixtures import pants_swap_spec
from chambercomplex.lemmas import (
    check_ball_sandwich,
    check_chain_shadow,
    check_convexity,
    check_no_column_reentry,
    check_wall_crossing_bound,
    replay_witness,
    sample_pairs,
)
from chambercomplex.metric import (
    MetricParams,
    Window,
    displacement_growth,
    dist_prime,
    distance_map,
    root_cell,
)
from chambercomplex.surface import (
    column_neighbors,
    horizontal_distance,
    wall_lines_of_column,
)
from chambercomplex.words import EMPTY
import chambercomplex.torusbundle as tb


@pytest.fixture(scope="module")
def cx():
    return CoverComplex(pants_swap_spec())


@pytest.fixture(scope="module")
def params():
    return MetricParams()  # eta=1/8, H=16, J=11H


@pytest.fixture(scope="module")
def win2(cx):
    return Window(cx, extents=window_extents(2))


@pytest.fixture(scope="module")
def win3(cx):
    return Window(cx, extents=window_extents(3))


class Stopwatch:
    def __init__(self, budget_s):
        self.budget = budget_s
        self.t0 = time.monotonic()

    def check(self):
        elapsed = time.monotonic() - self.t0
        assert elapsed < self.budget, f"criterion overran budget: {elapsed:.1f}s"


def test_criterion_1_tree_properties(cx):
    clock = Stopwatch(10)
    pattern = cx.chamber(root_cell(cx).chamber).pattern
    rank = pattern.cut_rank
    radius = 6

    # column graph: free-group ball, explicit node count, tree, valency 2r
    cols = {EMPTY: 0}
    queue = deque([EMPTY])
    while queue:
        c = queue.popleft()
        if cols[c] == radius:
            continue
        for n in column_neighbors(pattern, c):
            if n not in cols:
                cols[n] = cols[c] + 1
                queue.append(n)
    expected = 1 + sum(2 * rank * (2 * rank - 1) ** (d - 1)
                       for d in range(1, radius + 1))
    assert len(cols) == expected
    edges = sum(1 for c in cols for n in column_neighbors(pattern, c)
                if n in cols and c < n)
    assert edges == len(cols) - 1  # connected by BFS, so this is tree-ness
    assert all(len(column_neighbors(pattern, c)) == 2 * rank for c in cols)

    # chamber graph: BFS over realized walls never finds a cross edge
    root = root_cell(cx).chamber
    depth = {root: 0}
    frontier = [root]
    for d in range(radius):
        nxt = []
        for addr in frontier:
            info = cx.chamber(addr)
            for line in wall_lines_of_column(info.pattern, EMPTY):
                wall = cx.wall_at(addr, line)
                if wall.boundary:
                    continue
                far = (wall.child_address if addr == wall.parent_address
                       else wall.parent_address)
                if far in depth:
                    assert abs(depth[far] - d) <= 1  # only back along the tree
                else:
                    depth[far] = d + 1
                    nxt.append(far)
        frontier = nxt
    assert all(len(addr) == dep for addr, dep in depth.items())

    # two distinct wall lines meet in a column set of diameter <= 1
    line_cols = {}
    for c in cols:
        for line in wall_lines_of_column(pattern, c):
            line_cols.setdefault(line.key(), set()).add(c)
    checked = 0
    for c in cols:
        keys = [l.key() for l in wall_lines_of_column(pattern, c)]
        for k1, k2 in itertools.combinations(keys, 2):
            shared = line_cols[k1] & line_cols[k2]
            checked += 1
            if len(shared) > 1:
                assert max(horizontal_distance(a, b)
                           for a in shared for b in shared) <= 1
    assert checked > 1000
    clock.check()


def test_criterion_2_lazy_equals_brute(cx, params, win2):
    clock = Stopwatch(60)
    weight = {"C": F(1), "S": params.eta, "T": params.H}
    adj = {c: [(weight[k], n) for k, n in win2.neighbors(c)] for c in win2.cells}

    def brute_from(src):
        dist = {src: F(0)}
        done = set()
        heap = [(F(0), src.key(), src)]
        while heap:
            d, _, c = heapq.heappop(heap)
            if c in done:
                continue
            done.add(c)
            for w, n in adj[c]:
                nd = d + w
                if n not in dist or nd < dist[n]:
                    dist[n] = nd
                    heapq.heappush(heap, (nd, n.key(), n))
        return dist

    rng = random.Random(20260814)
    sources = rng.sample(win2.cells, 10)
    pairs = []
    maps = {}
    for s in sources:
        maps[s] = brute_from(s)
        reach = sorted((c for c, v in maps[s].items()
                        if c != s and v <= 3 * params.H), key=lambda c: c.key())
        pairs.extend((s, t) for t in rng.sample(reach, min(25, len(reach))))
    assert len(pairs) >= 200

    for s, t in pairs:
        value, res = dist_prime(cx, params, s, t, window=win2)
        assert res.value == maps[s][t]
        assert value == maps[s][t] + params.J * chamber_distance(s.chamber, t.chamber)
    clock.check()


def test_criterion_3_single_chamber_formula(cx, params):
    clock = Stopwatch(300)
    win = Window(cx, extents=((2, 16), (1, 8)))
    base = [c for c in win.cells if c.chamber == root_cell(cx).chamber]
    checked = 0
    for i, q1 in enumerate(base):
        search = distance_map(cx, params, q1, window=win, settle_value=2 * params.H)
        for q2 in base[i + 1:]:
            formula = (horizontal_distance(q1.column, q2.column)
                       + params.eta * abs(q1.level - q2.level))
            if formula < 2 * params.H:
                assert q2 in search.settled
                assert search.dist[q2] == formula, (q1, q2)
                checked += 1
    assert checked > 100_000  # exhaustive over the truncation, not a sample
    clock.check()


def test_criterion_4_geodesic_structure(cx, params, win2):
    clock = Stopwatch(300)
    pairs, searches = sample_pairs(cx, params, win2, n_sources=12,
                                   per_source=10, seed=5, value_cap=3 * params.H)
    assert len(pairs) >= 100
    reports = [
        check_wall_crossing_bound(cx, params, pairs, searches, win2),
        check_no_column_reentry(cx, params, pairs, searches, win2),
        check_chain_shadow(cx, params, pairs, searches, win2),
    ]
    for report in reports:
        # a counterexample must fail the build *and* replay
        for witness in report.witnesses:
            assert replay_witness(cx, params, witness, win2)
        assert report.verdict == "pass", report.witnesses
        assert report.stats["geodesics"] > 0
    clock.check()


def test_criterion_5_convexity(cx, params, win3):
    clock = Stopwatch(300)
    for R in (params.H, 2 * params.H):
        report = check_convexity(cx, params, root_cell(cx), R, win3)
        assert report.verdict == "pass", report.witnesses
        assert report.witnesses == []  # covers both R+10H and in-chamber R+8H
        assert report.stats["cells_checked"] > 1000
    clock.check()


def test_criterion_6_ball_sandwich(cx, params, win2, win3):
    clock = Stopwatch(300)
    center = root_cell(cx)

    # standard weights: radii {H,2H,3H} saturate the chamber in-window,
    # so the shell clause is vacuous there; C2 must still be finite/stable
    for R in (params.H, 2 * params.H, 3 * params.H):
        c2 = {}
        for n, win in ((2, win2), (3, win3)):
            report = check_ball_sandwich(cx, params, center, R, win, shells=True)
            assert report.verdict == "pass", report.witnesses
            c2[n] = report.stats["c2"]
            assert c2[n] >= 0
        assert c2[2] == c2[3]

    # resolved weights: same radii relative to H, but the window now sees
    # the balls stop growing, so shell disjointness has actual content
    resolved = MetricParams(eta=F(1, 2), H=F(2))
    win4 = Window(cx, extents=window_extents(4))
    shell_seen = False
    for R in (resolved.H, 2 * resolved.H, 3 * resolved.H):
        c2 = {}
        for n, win in ((3, win3), (4, win4)):
            report = check_ball_sandwich(cx, resolved, center, R, win, shells=True)
            assert report.verdict == "pass", report.witnesses
            c2[n] = report.stats["c2"]
            if any(report.stats.get("shell_cells", [])):
                shell_seen = True
        assert c2[3] == c2[4]
    assert shell_seen  # at least one run had nonempty shells to separate
    clock.check()


def test_criterion_7_displacement_growth(cx, params, win2):
    clock = Stopwatch(120)
    report = displacement_growth(cx, params, n_max=8, window=win2)
    assert report.exact  # every row certified equal to the unwindowed value
    assert report.c_hat >= params.eta
    for n, value, exact in report.rows:
        assert exact
        assert value >= report.c_hat * n
    clock.check()


def sl2_entries(bound=3):
    rng = range(-bound, bound + 1)
    return [((a, b), (c, d))
            for a, b, c, d in itertools.product(rng, repeat=4)
            if a * d - b * c == 1]


def test_criterion_8_sl2_sweep(cx):
    clock = Stopwatch(60)
    mats = sl2_entries(3)
    assert len(mats) == 116
    trace_order = {0: 4, 1: 6, 2: 3}
    for entries in mats:
        A = tb.MonodromyMatrix(entries)
        for k in (1, 2, 3):
            d_brute = tb.geometric_series_order_bruteforce(A, k)
            d_cons = tb.geometric_series_order_constructive(A, k)
            assert d_brute <= d_cons <= 6 ** k
            assert d_cons % d_brute == 0  # both vanish, brute is minimal
            if k == 1:
                assert d_brute <= trace_order[A.trace() % 3]
        g = tb.GroupElement((1, 0), 0, A)
        for k in (1, 2, 3):
            dec = tb.loop_decomposition(A, k, g)  # self-checks sum/max/count
            assert sum(dec.degrees) == 9 ** k
            assert dec.degrees[-1] <= 6 ** k
            assert dec.count >= F(3, 2) ** k
    tb._validate_coset_bridge()  # m=3 bridge vs direct membership
    clock.check()


def test_criterion_9_suite_determinism(tmp_path):
    clock = Stopwatch(120)
    outs = []
    for name in ("one.json", "two.json"):
        path = tmp_path / name
        code = main(["suite", "--fixture", "pants-swap", "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["ok"] is True
    clock.check()
