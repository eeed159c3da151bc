import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chambercomplex import CellAddress, CoverComplex, MetricParams, Window, root_cell
from chambercomplex.cover import GluingMap
from chambercomplex.fixtures import pants_swap_spec, shear_spec, vertical_b_spec
from chambercomplex.words import parse_word
from chambercomplex.lemmas import (
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

F = Fraction

CHEAP = MetricParams(eta=F(1), H=F(2), J=F(1))


@pytest.fixture(scope="module")
def pants():
    return CoverComplex(pants_swap_spec())


@pytest.fixture(scope="module")
def window(pants):
    return Window(pants, extents=((2, 5), (1, 3)))


@pytest.fixture(scope="module")
def samples(pants, window):
    return sample_pairs(pants, CHEAP, window, n_sources=5, per_source=5,
                        value_cap=6, seed=3)


# ------------------------------------------------------- wall constants

def test_swap_clause_a_is_small():
    wc = estimate_wall_constants(GluingMap(((0, 1), (1, 0))), window=20)
    assert wc.condition == "C"
    assert wc.clauses["a"]["constant"] <= 3


def test_identity_gluing_satisfies_vertical_transfer():
    wc = estimate_wall_constants(GluingMap(((1, 0), (0, 1))), window=12)
    assert wc.condition == "B"
    assert wc.clauses["e"]["in_hypotheses"]
    assert wc.clauses["e"]["constant"] <= 2


def test_shear_growth_lands_in_offset_clauses():
    # widening the shear widens the overlap offsets, so the adjacency
    # clauses grow; the vertical-transfer clause saturates instead
    consts = [estimate_wall_constants(GluingMap(((1, s), (0, 1))), window=10).clauses
              for s in (1, 2, 3)]
    assert [c["a"]["constant"] for c in consts] == [3, 4, 5]
    assert [c["f"]["constant"] for c in consts] == [3, 4, 5]
    assert [c["b"]["constant"] for c in consts] == [3, 2, 2]
    assert all(c["b"]["in_hypotheses"] for c in consts)


def test_out_of_hypothesis_clause_grows_with_window():
    # without its condition a clause is only window-bounded, and the
    # report shows that by growing as the window does
    small = estimate_wall_constants(GluingMap(((1, 0), (0, 1))), window=5)
    large = estimate_wall_constants(GluingMap(((1, 0), (0, 1))), window=10)
    assert not small.clauses["b"]["in_hypotheses"]
    assert large.clauses["b"]["constant"] > small.clauses["b"]["constant"]


def test_constants_reported_for_every_clause():
    wc = estimate_wall_constants(GluingMap(((2, 1), (1, 1))), window=6)
    assert sorted(wc.clauses) == list("abcdefg")
    for clause in wc.clauses.values():
        assert clause["constant"] is None or clause["constant"] >= 1


def _wall_adjacency(cx, on_parent, reach):
    label = cx.chamber(()).pattern.label
    line = next(l for l in cx.lines_of_column((), ())
                if cx.spec.gluing_at(label, l.circle) is not None)
    wall = cx.wall_at((), line)
    near = {}
    for i in range(-reach, reach + 1):
        for z in range(-reach, reach + 1):
            near[(i, z)] = set(cx.across_wall(wall, on_parent, i, z))
    return near


def _recount_clause_a(near):
    shared = {}
    for u, fars in near.items():
        for f in fars:
            shared.setdefault(f, []).append(u)
    return 1 + max(max(abs(u1[0] - u2[0]), abs(u1[1] - u2[1]))
                   for us in shared.values() for u1 in us for u2 in us)


def _recount_clause_b(near):
    shared = {}
    for u, fars in near.items():
        for f in fars:
            shared.setdefault(f, []).append(u)
    best = 0
    for f1, us1 in shared.items():
        for f2, us2 in shared.items():
            if f1[0] != f2[0]:
                continue
            for u1 in us1:
                for u2 in us2:
                    num = max(abs(u1[1] - u2[1]), abs(f1[1] - f2[1]))
                    best = max(best, num // (abs(u1[0] - u2[0]) + 1) + 1)
    return best


def _recount_clause_c(near, reach):
    cols = {u: {f[0] for f in fars} for u, fars in near.items()}
    best = 0
    span = range(-reach, reach + 1)
    for z2 in span:
        if (0, z2) not in cols:
            continue
        for y in span:
            for z4 in span:
                if (y, z4) not in cols or not (cols[(0, 0)] & cols[(y, z4)]):
                    continue
                for z3 in span:
                    if (y, z3) in cols and cols[(0, z2)] & cols[(y, z3)]:
                        best = max(best, abs(abs(z2) - abs(z3 - z4)))
    return best + 1


def test_estimator_matches_adjacency_recount():
    # the closed forms must agree with configurations counted straight
    # off the complex, from either side of the wall
    for spec in (pants_swap_spec(), shear_spec(2)):
        cx = CoverComplex(spec)
        g = spec.gluings[0].map
        est = estimate_wall_constants(g, window=8).clauses
        sides = [_wall_adjacency(cx, True, 6), _wall_adjacency(cx, False, 6)]
        assert est["a"]["constant"] == max(_recount_clause_a(n) for n in sides)
        assert est["b"]["constant"] == max(_recount_clause_b(n) for n in sides)
        assert est["c"]["constant"] == max(_recount_clause_c(n, 5) for n in sides)


def test_tiny_window_rejected():
    with pytest.raises(ValueError):
        estimate_wall_constants(GluingMap(((0, 1), (1, 0))), window=2)


SL2 = [((a, b), (c, d))
       for a in range(-2, 3) for b in range(-2, 3)
       for c in range(-2, 3) for d in range(-2, 3)
       if a * d - b * c == 1]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SL2))
def test_window_growth_never_shrinks_constants(matrix):
    small = estimate_wall_constants(GluingMap(matrix), window=5)
    large = estimate_wall_constants(GluingMap(matrix), window=8)
    for key in "abcdefg":
        lo, hi = small.clauses[key]["constant"], large.clauses[key]["constant"]
        if lo is not None and hi is not None:
            assert hi >= lo


# ----------------------------------------------------- geodesic checkers

def test_sampling_is_deterministic_and_mixed(pants, window):
    pairs1, _ = sample_pairs(pants, CHEAP, window, n_sources=4, per_source=4,
                             value_cap=6, seed=7)
    pairs2, _ = sample_pairs(pants, CHEAP, window, n_sources=4, per_source=4,
                             value_cap=6, seed=7)
    assert pairs1 == pairs2
    assert any(a.chamber == b.chamber for a, b in pairs1)
    assert any(a.chamber != b.chamber for a, b in pairs1)


def test_sampling_single_chamber_window(pants):
    # no cross-chamber targets at all; near picks must still respect per_source
    tiny = Window(pants, extents=((1, 4),))
    pairs, _ = sample_pairs(pants, CHEAP, tiny, n_sources=4, per_source=4,
                            value_cap=6, seed=0)
    assert pairs
    per = {}
    for a, b in pairs:
        assert a.chamber == b.chamber
        per[a] = per.get(a, 0) + 1
    assert all(n <= 4 for n in per.values())


def test_wall_crossing_bound_holds(pants, window, samples):
    pairs, searches = samples
    report = check_wall_crossing_bound(pants, CHEAP, pairs, searches, window)
    assert report.verdict == "pass"
    assert report.stats["geodesics"] > 0
    assert report.stats["max_crossings"] <= 2


def test_no_column_reentry_holds(pants, window, samples):
    pairs, searches = samples
    report = check_no_column_reentry(pants, CHEAP, pairs, searches, window)
    assert report.verdict == "pass"


def test_chain_shadow_holds_and_counts_assignments(pants, window, samples):
    pairs, searches = samples
    report = check_chain_shadow(pants, CHEAP, pairs, searches, window)
    assert report.verdict == "pass"
    assert report.stats["pairs"] > 0
    assert report.stats["assignments"] > 0


def test_double_crossing_holds_in_cheap_regime(pants, window, samples):
    pairs, searches = samples
    report = check_double_crossing_gap(pants, CHEAP, pairs, searches, window)
    assert report.verdict == "pass"
    assert report.stats["uncrossed_instances"] > 0


def test_parallel_geodesics_holds(pants, window, samples):
    pairs, searches = samples
    report = check_parallel_geodesics(pants, CHEAP, pairs[:6], searches, window)
    assert report.verdict == "pass"
    assert report.stats["wall_cases"] + report.stats["interchange_cases"] > 0


def test_checkers_hold_in_standard_regime(pants):
    params = MetricParams()
    window = Window(pants, extents=((2, 8), (1, 4)))
    pairs, searches = sample_pairs(pants, params, window, n_sources=3,
                                   per_source=4, seed=0)
    for checker in (check_wall_crossing_bound, check_no_column_reentry,
                    check_chain_shadow, check_double_crossing_gap):
        assert checker(pants, params, pairs, searches, window).verdict == "pass"


# -------------------------------------------- forced failure and replay

def test_small_h_breaks_uncrossed_wall_gap_and_replays(pants):
    # at H = 1/2 the 3H bound is beaten by any straight run of length 2
    params = MetricParams(eta=F(4), H=F(1, 2), J=F(1))
    window = Window(pants, extents=((5, 3), (1, 1)))
    q1 = root_cell(pants)
    q2 = CellAddress((), parse_word("aaaa"), 0)
    report = check_double_crossing_gap(pants, params, [(q1, q2)], None, window)
    assert report.verdict == "fail"
    assert not params.standard_regime
    clauses = {w["clause"] for w in report.witnesses}
    assert "b3" in clauses
    # cheap crossings also tunnel out and back between adjacent columns
    assert clauses <= {"b3", "b2-gap", "b2-column", "b2-visited"}
    for witness in report.witnesses:
        assert replay_witness(pants, params, witness, window)


def test_replay_confirms_only_genuine_convexity_witnesses(pants, window):
    center = root_cell(pants)
    fake = {"lemma": "convexity", "center": "/e/0", "Qstar": "/a/1", "bound": "1000"}
    assert not replay_witness(pants, CHEAP, fake, window)
    certain = dict(fake, bound="0")
    assert replay_witness(pants, CHEAP, certain, window)


# -------------------------------------------------- convexity and balls

def test_convexity_within_bounds(pants, window):
    report = check_convexity(pants, CHEAP, root_cell(pants), F(4), window)
    assert report.verdict == "pass"
    assert report.stats["cells_checked"] >= report.stats["columns"]


def test_convexity_from_deeper_center(pants, window):
    center = sorted(window.cells, key=lambda c: c.key())[-1]
    report = check_convexity(pants, CHEAP, center, F(3), window)
    assert report.verdict == "pass"


def test_ball_sandwich_clauses(pants, window):
    report = check_ball_sandwich(pants, CHEAP, root_cell(pants), F(4), window,
                                 shells=True)
    assert report.verdict == "pass"
    assert report.stats["bprime_cells"] <= report.stats["p_cells"]
    assert report.stats["c2"] >= 0
    assert report.stats["chambers"] >= 1


def test_ball_sandwich_c2_stable_under_window_growth(pants):
    small = Window(pants, extents=((2, 5), (1, 3)))
    grown = Window(pants, extents=((3, 6), (2, 4), (1, 2)))
    r1 = check_ball_sandwich(pants, CHEAP, root_cell(pants), F(4), small)
    r2 = check_ball_sandwich(pants, CHEAP, root_cell(pants), F(4), grown)
    assert r1.verdict == r2.verdict == "pass"
    assert r2.stats["c2"] <= max(r1.stats["c2"], 1) + 1


# ---------------------------------------------------------------- suite

def test_suite_is_deterministic_and_green(pants):
    window = Window(pants, extents=((2, 5), (1, 3)))
    runs = [run_suite(pants, CHEAP, window=window, seed=1, n_sources=3,
                      per_source=3, convexity_R=F(4), sandwich_R=F(4))
            for _ in range(2)]
    as_json = [json.dumps([r.to_json() for r in reports], sort_keys=True)
               for reports in runs]
    assert as_json[0] == as_json[1]
    for report in runs[0]:
        assert report.verdict == "pass", (report.lemma, report.witnesses[:1])


def test_suite_covers_other_fixtures():
    for spec in (shear_spec(), vertical_b_spec()):
        cx = CoverComplex(spec)
        window = Window(cx, extents=((2, 4), (1, 2)))
        reports = run_suite(cx, CHEAP, window=window, seed=0, n_sources=2,
                            per_source=3, convexity_R=F(3), sandwich_R=F(3))
        names = [r.lemma for r in reports]
        assert names[0].startswith("wall-constants")
        for report in reports:
            assert report.verdict in ("pass", "fail", "budget-exhausted")
            for witness in report.witnesses:
                assert replay_witness(cx, CHEAP, witness, window)
