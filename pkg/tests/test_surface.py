"""Column-tree and wall-line behavior, checked against BFS/brute-force oracles."""

import itertools

import pytest
from hypothesis import given, strategies as st

from chambercomplex.errors import InvariantViolation
from chambercomplex.surface import (
    WallLine,
    canonicalize_line,
    column_neighbors,
    format_line,
    horizontal_distance,
    line_index_of,
    line_tile,
    line_tiles_in_ball,
    make_pattern,
    median_column,
    minimal_chain,
    parse_line,
    validate_pattern,
    wall_chain,
    wall_lines_of_column,
)
from chambercomplex.words import parse_word, reduce_word

PANTS = make_pattern(2, ["a", "b", "b^-1a^-1"], label="P")


def _bfs_oracle(pattern, start, radius):
    """Plain BFS over column_neighbors; independent of the word metric."""
    dist = {start: 0}
    parent = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for c in frontier:
            for n in column_neighbors(pattern, c):
                if n not in dist and len(n) <= radius:
                    dist[n] = dist[c] + 1
                    parent[n] = c
                    nxt.append(n)
        frontier = nxt
    return dist, parent


words3 = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=3).map(reduce_word)


def test_horizontal_distance_against_bfs():
    dist, _ = _bfs_oracle(PANTS, (), 4)
    for col, d in dist.items():
        assert horizontal_distance((), col) == d


def test_horizontal_distance_example():
    # aa^-1b reduces to b
    assert horizontal_distance((), reduce_word([1, -1, 2])) == 1


@given(words3, words3)
def test_distance_symmetric_triangle(u, v):
    assert horizontal_distance(u, v) == horizontal_distance(v, u)
    assert horizontal_distance(u, v) <= horizontal_distance(u, ()) + horizontal_distance((), v)


def test_minimal_chain_matches_bfs_path():
    start = parse_word("a^-1")
    dist, parent = _bfs_oracle(PANTS, start, 5)
    for target in [parse_word("b"), parse_word("ab"), parse_word("a^-1b^-1a")]:
        path = [target]
        while path[-1] != start:
            path.append(parent[path[-1]])
        path.reverse()
        assert minimal_chain(start, target) == path


def test_minimal_chain_example():
    chain = minimal_chain(parse_word("a^-1"), parse_word("b"))
    assert chain == [(-1,), (), (2,)]


def _median_oracle(c1, c2, c3):
    common = (set(minimal_chain(c1, c2)) & set(minimal_chain(c1, c3))
              & set(minimal_chain(c2, c3)))
    assert len(common) == 1
    return next(iter(common))


def test_median_examples():
    assert median_column((), (1,), (1, 2)) == (1,)
    # spec sketch was unsure here; the chain-intersection oracle settles it
    m = _median_oracle((1,), (2,), (1, -2))
    assert m == (1,)
    assert median_column((1,), (2,), (1, -2)) == m


@given(words3, words3, words3)
def test_median_oracle_agreement(u, v, w):
    assert median_column(u, v, w) == _median_oracle(u, v, w)
    assert median_column(u, v, w) == median_column(w, u, v)


@given(words3, words3)
def test_median_degenerate(u, v):
    assert median_column(u, u, v) == u


def test_column_neighbors_valency():
    for col in [(), (1,), (1, 2), (-2, -1)]:
        nbrs = column_neighbors(PANTS, col)
        assert len(nbrs) == len(set(nbrs)) == 4
        assert all(horizontal_distance(col, n) == 1 for n in nbrs)


# ------------------------------------------------------------- wall lines

def test_wall_lines_of_root_column():
    lines = wall_lines_of_column(PANTS, ())
    # circle 1 (word a): one line; circle 2 (word b): one; circle 3
    # (word b^-1 a^-1, primitive of period 2): two distinct tile sequences
    assert len(lines) == 4
    by_circle = {}
    for ln in lines:
        by_circle.setdefault(ln.circle, []).append(ln)
    assert len(by_circle[0]) == 1 and len(by_circle[1]) == 1 and len(by_circle[2]) == 2
    assert all(ln.canonical for ln in lines)


def test_wall_lines_shared_along_axis():
    # the a-axis line through e is the same canonical line as through a
    l_root = [ln for ln in wall_lines_of_column(PANTS, ()) if ln.circle == 0][0]
    l_a = [ln for ln in wall_lines_of_column(PANTS, (1,)) if ln.circle == 0][0]
    assert l_root == l_a


def test_wall_chain_example():
    line = canonicalize_line(PANTS, WallLine(2, (), 0))
    chain = wall_chain(PANTS, line, 0, 2)
    assert chain == [(0, ()), (1, (-2,)), (2, (-2, -1))]


def test_line_tile_both_directions():
    line = canonicalize_line(PANTS, WallLine(2, (), 0))
    assert line_tile(PANTS, line, -1) == (1,)
    assert line_tile(PANTS, line, -2) == (1, 2)


def test_canonicalization_slides_to_least_tile():
    # present the a-axis from a far tile; canonical form must come back to e
    line = WallLine(0, (1, 1, 1), 0)
    canon = canonicalize_line(PANTS, line)
    assert canon.anchor == ()
    assert canon.phase == 0


def test_canonicalization_identity_on_same_sequence():
    rng_presentations = []
    base = canonicalize_line(PANTS, WallLine(2, (), 0))
    for i in range(-3, 4):
        anchor = line_tile(PANTS, base, i)
        phase = (base.phase + i) % 2
        rng_presentations.append(WallLine(2, anchor, phase))
    canons = {canonicalize_line(PANTS, p) for p in rng_presentations}
    assert canons == {base}


def test_nonprimitive_word_merges_phases():
    pattern = make_pattern(2, ["abab", "b"], label="Q")
    lines = [ln for ln in wall_lines_of_column(pattern, ()) if ln.circle == 0]
    # abab has cyclic period 2: four arcs, two tile sequences
    assert len(lines) == 2
    assert {ln.phase for ln in lines} == {0, 1}


def test_line_index_of_roundtrip():
    line = canonicalize_line(PANTS, WallLine(2, (), 1))
    for i in range(-4, 5):
        assert line_index_of(PANTS, line, line_tile(PANTS, line, i)) == i
    with pytest.raises(ValueError):
        line_index_of(PANTS, line, (1, 1, 1))


def test_line_tiles_in_ball_lengths():
    line = canonicalize_line(PANTS, WallLine(2, (), 0))
    tiles = line_tiles_in_ball(PANTS, line, 2)
    assert all(len(t) <= 2 for _, t in tiles)
    # |tile(i)| = |i| on a line anchored at the root
    assert sorted(i for i, _ in tiles) == [-2, -1, 0, 1, 2]


def test_format_parse_line_roundtrip():
    for ln in wall_lines_of_column(PANTS, (1, -2)):
        assert parse_line(format_line(ln), PANTS) == ln


# ------------------------------------------------------------- validation

def test_validate_pattern_passes():
    report = validate_pattern(PANTS, window_radius=4)
    assert report.ok
    assert all(c["status"] == "pass" for c in report.checks)


def test_validate_pattern_counts_columns():
    report = validate_pattern(PANTS, window_radius=3)
    tree = [c for c in report.checks if c["name"] == "column-tree"][0]
    # 1 + 4 + 4*3 + 4*9 columns within radius 3
    assert tree["columns"] == 53


def test_pattern_invariants():
    with pytest.raises(InvariantViolation):
        make_pattern(1, ["a"])
    with pytest.raises(InvariantViolation):
        make_pattern(2, [])
    with pytest.raises(InvariantViolation):
        make_pattern(2, ["ab^-1a^-1"])  # not cyclically reduced
    with pytest.raises(InvariantViolation):
        make_pattern(2, [(1, 3)])  # letter outside rank


def test_one_holed_torus_pattern_validates():
    # genus-1 surface with two boundary circles, cut along three arcs
    report = validate_pattern(make_pattern(3, ["aba^-1b^-1c", "c^-1"], label="T"),
                              window_radius=3)
    assert report.ok


def test_unrealizable_pattern_caught_with_witness():
    # each signed letter occurs once, but no cut surface induces these words:
    # two wall lines run together along a length-2 segment and the window
    # validator must report it
    report = validate_pattern(make_pattern(3, ["ab", "c", "c^-1b^-1a^-1"], label="R"),
                              window_radius=3)
    assert not report.ok
    seg = [c for c in report.checks if c["name"] == "wall-pair-segments"][0]
    assert seg["status"] == "fail"
    assert any(len(w["shared"]) > 2 for w in seg["witnesses"])
