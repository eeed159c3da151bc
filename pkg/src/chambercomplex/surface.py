"""Cut-open surface pieces and their universal-cover combinatorics.

A chamber pattern is a compact surface with boundary, cut along s >= 2
disjoint arcs into a disk.  Columns (lifted polygon tiles) form the
Cayley tree of the free group on the cut letters; each boundary circle
is recorded by the cyclic word of cut letters it crosses, and its lifts
are bi-infinite geodesic tile lines ("wall lines").
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvariantViolation
from .words import (
    EMPTY,
    Word,
    concat,
    cyclic_period,
    format_word,
    inverse,
    is_cyclically_reduced,
    parse_word,
    reduce_word,
    word_key,
)


@dataclass(frozen=True)
class BoundaryCircle:
    """One boundary circle: the cyclic cut-crossing word, never empty."""

    word: Word

    @property
    def arc_count(self) -> int:
        return len(self.word)

    @property
    def period(self) -> int:
        return cyclic_period(self.word)


@dataclass(frozen=True)
class ChamberPattern:
    """Combinatorics of one chamber type.

    cut_rank s >= 2 gives columns valency 2s; circles hold the boundary
    words, each cyclically reduced over letters 1..s.
    """

    cut_rank: int
    circles: tuple
    label: str = "K"

    def __post_init__(self):
        if self.cut_rank < 2:
            raise InvariantViolation("cut-rank", f"cut_rank must be >= 2, got {self.cut_rank}")
        if not self.circles:
            raise InvariantViolation("circles-nonempty", "pattern needs at least one boundary circle")
        for idx, circ in enumerate(self.circles):
            w = circ.word
            if not w:
                raise InvariantViolation("word-nonempty", f"circle {idx} has empty word")
            if any(abs(a) > self.cut_rank or a == 0 for a in w):
                raise InvariantViolation(
                    "word-letters", f"circle {idx} word {format_word(w)} uses letters outside rank {self.cut_rank}")
            if not is_cyclically_reduced(w):
                raise InvariantViolation(
                    "word-cyclically-reduced", f"circle {idx} word {format_word(w)} is not cyclically reduced")

    @property
    def valency(self) -> int:
        return 2 * self.cut_rank

    def generators(self):
        s = self.cut_rank
        return [g for k in range(1, s + 1) for g in (k, -k)]


def make_pattern(cut_rank, circle_words, label="K") -> ChamberPattern:
    """Convenience constructor from word strings or letter tuples."""
    circles = []
    for w in circle_words:
        if isinstance(w, str):
            w = parse_word(w, rank=cut_rank)
        circles.append(BoundaryCircle(tuple(w)))
    return ChamberPattern(cut_rank, tuple(circles), label)


# ---------------------------------------------------------------- columns

def column_neighbors(pattern: ChamberPattern, column: Word):
    """The 2s columns one cut-crossing away, in deterministic letter order."""
    return [concat(column, (g,)) for g in pattern.generators()]


def horizontal_distance(c1: Word, c2: Word) -> int:
    """Word metric on the column tree."""
    return len(concat(inverse(c1), c2))


def minimal_chain(c1: Word, c2: Word):
    """The unique tree geodesic from c1 to c2, inclusive of both ends."""
    diff = concat(inverse(c1), c2)
    chain = [tuple(c1)]
    cur = tuple(c1)
    for a in diff:
        cur = concat(cur, (a,))
        chain.append(cur)
    return chain


def median_column(c1: Word, c2: Word, c3: Word) -> Word:
    """The unique column on all three pairwise minimal chains."""
    # Median in a tree: deepest common point of the three root-paths works
    # only from a fixed basepoint; instead intersect chains pairwise.
    ab = set(minimal_chain(c1, c2))
    ac = set(minimal_chain(c1, c3))
    bc = set(minimal_chain(c2, c3))
    common = ab & ac & bc
    if len(common) != 1:
        raise InvariantViolation("median-unique", f"median candidates {sorted(common)}")
    return next(iter(common))


# ---------------------------------------------------------------- wall lines

@dataclass(frozen=True, order=True)
class WallLine:
    """A lift of boundary circle `circle` as a bi-infinite tile line.

    tile(i+1) = tile(i) . word[(phase+i) mod r].  Identity is by tile
    sequence: equal sequences canonicalize to the same (anchor, phase).
    """

    sort_index: tuple = field(init=False, repr=False)
    circle: int
    anchor: Word
    phase: int
    canonical: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sort_index", (self.circle, word_key(self.anchor), self.phase))

    def key(self):
        return (self.circle, word_key(self.anchor), self.phase)


def line_tile(pattern: ChamberPattern, line: WallLine, i: int) -> Word:
    """Tile at position i relative to the line's anchor (position 0)."""
    w = pattern.circles[line.circle].word
    r = len(w)
    t = line.anchor
    if i >= 0:
        for j in range(i):
            t = concat(t, (w[(line.phase + j) % r],))
    else:
        for j in range(-1, i - 1, -1):
            t = concat(t, (-w[(line.phase + j) % r],))
    return t


def _line_tiles_window(pattern, line, lo, hi):
    """Tiles lo..hi inclusive, computed incrementally."""
    w = pattern.circles[line.circle].word
    r = len(w)
    tiles = {0: line.anchor}
    t = line.anchor
    for j in range(0, hi):
        t = concat(t, (w[(line.phase + j) % r],))
        tiles[j + 1] = t
    t = line.anchor
    for j in range(-1, lo - 1, -1):
        t = concat(t, (-w[(line.phase + j) % r],))
        tiles[j] = t
    return [tiles[i] for i in range(lo, hi + 1)]


def canonicalize_line(pattern: ChamberPattern, line: WallLine) -> WallLine:
    """Slide the anchor to the tile sequence's least element.

    The minimal-length tile is unique (tile length along a tree geodesic
    is |i - i0| + d0), so the (length, lex) minimum pins the anchor; the
    phase is then reduced modulo the word's primitive cyclic period,
    since shifting by a period re-presents the same tile sequence.
    """
    if line.canonical:
        return line
    circ = pattern.circles[line.circle]
    r = circ.arc_count
    span = len(line.anchor) + r
    tiles = _line_tiles_window(pattern, line, -span, span)
    best_i = min(range(len(tiles)), key=lambda k: word_key(tiles[k]))
    i0 = best_i - span
    phase = (line.phase + i0) % circ.period
    return WallLine(line.circle, tiles[best_i], phase, canonical=True)


def wall_lines_of_column(pattern: ChamberPattern, column: Word):
    """All canonical wall lines through `column`, one per arc, deduplicated.

    Sorted by (circle, anchor, phase); circle b with an arc count of r
    contributes r arcs but only r/period distinct tile sequences.
    """
    seen = {}
    for b, circ in enumerate(pattern.circles):
        for p in range(circ.arc_count):
            line = canonicalize_line(pattern, WallLine(b, tuple(column), p))
            seen[line.key()] = line
    return [seen[k] for k in sorted(seen)]


def line_index_of(pattern: ChamberPattern, line: WallLine, column: Word) -> int:
    """Position of `column` on the line; ValueError if not on it."""
    col = tuple(column)
    bound = len(line.anchor) + len(col) + pattern.circles[line.circle].arc_count
    tiles = _line_tiles_window(pattern, line, -bound, bound)
    for k, t in enumerate(tiles):
        if t == col:
            return k - bound
    raise ValueError(f"column {format_word(col)} is not on line {line}")


def wall_chain(pattern: ChamberPattern, line: WallLine, lo: int, hi: int):
    """Consecutive tiles lo..hi of the line, as (index, column) pairs."""
    if lo > hi:
        raise ValueError("empty chain window")
    return list(zip(range(lo, hi + 1), _line_tiles_window(pattern, line, lo, hi)))


def line_tiles_in_ball(pattern: ChamberPattern, line: WallLine, radius: int):
    """(index, tile) pairs of the line with |tile| <= radius.

    Tile length along the line is |i - i0| + d0 with the canonical anchor
    at i0 = 0, so the span is bounded by radius + |anchor|.
    """
    span = radius + len(line.anchor) + 1
    out = []
    for i, t in zip(range(-span, span + 1), _line_tiles_window(pattern, line, -span, span)):
        if len(t) <= radius:
            out.append((i, t))
    return out


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    ok: bool
    checks: list

    def to_json(self):
        return {"ok": self.ok, "checks": self.checks}


def validate_pattern(pattern: ChamberPattern, window_radius: int = 4) -> ValidationReport:
    """Window-bounded structural checks on the column tree and wall lines.

    Checks valency, tree acyclicity (BFS cross-edge scan), wall-line
    injectivity, and that any two distinct walls share at most a length-1
    segment of columns.
    """
    checks = []

    cols = [EMPTY]
    seen = {EMPTY: None}
    order = [EMPTY]
    cross = []
    while cols:
        nxt = []
        for c in cols:
            nbrs = column_neighbors(pattern, c)
            if len(set(nbrs)) != pattern.valency:
                cross.append({"check": "valency", "column": format_word(c)})
            for n in nbrs:
                if len(n) > window_radius:
                    continue
                if n in seen:
                    # in a tree the only repeated sighting is the BFS parent
                    if n != seen[c] and seen.get(n) != c:
                        cross.append({"check": "acyclic", "column": format_word(c),
                                      "neighbor": format_word(n)})
                else:
                    seen[n] = c
                    order.append(n)
                    nxt.append(n)
        cols = nxt
    checks.append({"name": "column-tree", "status": "fail" if cross else "pass",
                   "columns": len(order), "witnesses": cross})

    inj = []
    lines = {}
    for c in order:
        for line in wall_lines_of_column(pattern, c):
            lines.setdefault(line.key(), line)
    for key, line in sorted(lines.items()):
        tiles = [t for _, t in line_tiles_in_ball(pattern, line, window_radius)]
        if len(set(tiles)) != len(tiles):
            inj.append({"check": "line-injective", "line": format_line(line)})
    checks.append({"name": "wall-line-injectivity", "status": "fail" if inj else "pass",
                   "lines": len(lines), "witnesses": inj})

    # two walls can run together along at most one edge of the tree
    by_tile = {}
    tile_sets = {}
    for key, line in sorted(lines.items()):
        tiles = [t for _, t in line_tiles_in_ball(pattern, line, window_radius)]
        tile_sets[key] = set(tiles)
        for t in tiles:
            by_tile.setdefault(t, []).append(key)
    bad_pairs = []
    checked = set()
    for t, keys in sorted(by_tile.items(), key=lambda kv: word_key(kv[0])):
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                pair = (keys[i], keys[j])
                if pair in checked:
                    continue
                checked.add(pair)
                shared = tile_sets[keys[i]] & tile_sets[keys[j]]
                if len(shared) > 2 or (len(shared) == 2 and horizontal_distance(*sorted(shared, key=word_key)) != 1):
                    bad_pairs.append({
                        "check": "shared-segment",
                        "lines": [format_line(lines[keys[i]]), format_line(lines[keys[j]])],
                        "shared": sorted(format_word(w) for w in shared),
                    })
    checks.append({"name": "wall-pair-segments", "status": "fail" if bad_pairs else "pass",
                   "pairs_checked": len(checked), "witnesses": bad_pairs})

    ok = all(ch["status"] == "pass" for ch in checks)
    return ValidationReport(ok, checks)


def format_line(line: WallLine) -> str:
    """Address-syntax form W<circle+1>[@anchor].<phase> (anchor e omitted)."""
    mid = "" if not line.anchor else "@" + format_word(line.anchor)
    return f"W{line.circle + 1}{mid}.{line.phase}"


def parse_line(text: str, pattern: ChamberPattern) -> WallLine:
    """Parse the format_line syntax back into a canonical WallLine."""
    from .errors import SpecSyntaxError

    body = text.strip()
    if not body.startswith("W"):
        raise SpecSyntaxError(f"wall step must start with W: {text!r}")
    body = body[1:]
    if "." not in body:
        raise SpecSyntaxError(f"wall step needs .phase: {text!r}")
    head, _, phase_s = body.rpartition(".")
    if "@" in head:
        circ_s, _, anchor_s = head.partition("@")
        anchor = parse_word(anchor_s, rank=pattern.cut_rank)
    else:
        circ_s, anchor = head, EMPTY
    try:
        circle = int(circ_s) - 1
        phase = int(phase_s)
    except ValueError:
        raise SpecSyntaxError(f"bad wall step {text!r}") from None
    if not (0 <= circle < len(pattern.circles)):
        raise SpecSyntaxError(f"circle W{circ_s} out of range in {text!r}")
    r = pattern.circles[circle].arc_count
    if not (0 <= phase < r):
        raise SpecSyntaxError(f"phase {phase} out of range for circle with {r} arcs in {text!r}")
    return canonicalize_line(pattern, WallLine(circle, anchor, phase))
