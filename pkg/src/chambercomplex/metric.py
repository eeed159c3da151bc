"""The weighted combinatorial metric on cover-complex cells.

A path's length is 1 per cut crossing (C), eta per level crossing (S)
and H per wall crossing (T); dist is the infimum over cell paths and
dist' adds J times the chamber-tree distance.  Searches run either
lazily on the infinite complex (exact, budget-guarded) or restricted to
a finite Window; windowed results carry an `exact` flag that is True
whenever no escape through the window boundary could have been cheaper
than the reported value.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import charts
from .cover import (
    Address,
    CellAddress,
    CoverComplex,
    ROOT,
    chamber_distance,
    format_cell,
)
from .errors import BudgetExceeded, DeckIncompatible, InvariantViolation
from .surface import (
    WallLine,
    canonicalize_line,
    format_line,
    horizontal_distance,
    line_index_of,
    line_tile,
)
from .words import EMPTY, concat, cyclic_period, inverse, word_key

DEFAULT_BUDGET = 200_000


@dataclass(frozen=True)
class MetricParams:
    """Crossing weights.  The standard regime has 0 < eta < 1 < H and
    J = 11*H; inverted regimes are accepted so checkers can probe them,
    `standard_regime` records which side of the contract we are on."""

    eta: Fraction = Fraction(1, 8)
    H: Fraction = Fraction(16)
    J: Fraction = None
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "eta", Fraction(self.eta))
        object.__setattr__(self, "H", Fraction(self.H))
        object.__setattr__(self, "J", Fraction(self.J) if self.J is not None else 11 * self.H)
        if self.eta <= 0 or self.H <= 0 or self.J < 0:
            raise InvariantViolation("params-positive", f"weights must be positive: {self}")

    @property
    def standard_regime(self) -> bool:
        return self.eta < 1 < self.H and self.J >= self.H

    def weight(self, kind: str) -> Fraction:
        if kind == "C":
            return Fraction(1)
        if kind == "S":
            return self.eta
        return self.H


@dataclass(frozen=True)
class PathLength:
    c_steps: int
    s_steps: int
    t_steps: int
    value: Fraction

    @staticmethod
    def of(params: MetricParams, kinds) -> "PathLength":
        c = sum(1 for k in kinds if k == "C")
        s = sum(1 for k in kinds if k == "S")
        t = sum(1 for k in kinds if k == "T")
        return PathLength(c, s, t, c + params.eta * s + params.H * t)


@dataclass(frozen=True)
class Geodesic:
    cells: tuple
    kinds: tuple
    length: PathLength


@dataclass
class DistanceResult:
    value: Fraction
    length: PathLength
    exact: bool
    cells_seen: int


# ----------------------------------------------------------------- windows

def root_cell(cx: CoverComplex) -> CellAddress:
    return CellAddress(ROOT, EMPTY, 0)


class Window:
    """A finite deterministic truncation of the complex.

    extents[d] = (column radius, level radius) for chambers at tree
    distance d from the base chamber; chambers are reached by crossing
    wall lines whose canonical anchor fits the column window.
    """

    def __init__(self, cx: CoverComplex, extents=((4, 16), (2, 8)), base: CellAddress = None):
        self.cx = cx
        self.base = base if base is not None else root_cell(cx)
        self.extents = tuple((int(a), int(b)) for a, b in extents)
        if not self.extents:
            raise InvariantViolation("window-extents", "window needs at least depth-0 extents")
        self._depth = {}
        self._enumerate_chambers()
        self._cells = None
        self._adj = None
        self._clipped = None

    def _enumerate_chambers(self):
        base_addr = self.base.chamber
        self._depth[base_addr] = 0
        frontier = [base_addr]
        for d in range(len(self.extents) - 1):
            kh = self.extents[d][0]
            nxt = []
            for addr in frontier:
                info = self.cx.chamber(addr)
                cols = _columns_within(info.pattern, kh)
                lines = {}
                for col in cols:
                    for line in self.cx.lines_of_column(addr, col):
                        if len(line.anchor) <= kh:
                            lines[line.key()] = line
                for key in sorted(lines):
                    line = lines[key]
                    if self.cx.spec.gluing_at(info.pattern.label, line.circle) is None:
                        continue
                    if info.back_line is not None and line == info.back_line:
                        far = addr[:-1]
                    else:
                        far = addr + (line,)
                        self.cx.chamber(far)
                    if far not in self._depth:
                        self._depth[far] = d + 1
                        nxt.append(far)
            frontier = nxt

    def chamber_depth(self, addr: Address):
        return self._depth.get(addr)

    def __contains__(self, cell: CellAddress) -> bool:
        d = self._depth.get(cell.chamber)
        if d is None:
            return False
        kh, kv = self.extents[d]
        center = self.base.level if cell.chamber == self.base.chamber else 0
        return len(cell.column) <= kh and abs(cell.level - center) <= kv

    @property
    def cells(self):
        if self._cells is None:
            out = []
            for addr in sorted(self._depth, key=lambda a: (len(a), tuple(s.key() for s in a))):
                d = self._depth[addr]
                kh, kv = self.extents[d]
                center = self.base.level if addr == self.base.chamber else 0
                info = self.cx.chamber(addr)
                for col in sorted(_columns_within(info.pattern, kh), key=word_key):
                    for z in range(center - kv, center + kv + 1):
                        out.append(CellAddress(addr, col, z))
            self._cells = out
        return self._cells

    def neighbors(self, cell: CellAddress):
        """In-window neighbors plus the kinds of clipped (out-of-window) edges."""
        self._build_adjacency()
        return self._adj[cell]

    def clipped_kinds(self, cell: CellAddress):
        self._build_adjacency()
        return self._clipped[cell]

    def _build_adjacency(self):
        if self._adj is not None:
            return
        adj = {}
        clipped = {}
        for cell in self.cells:
            ins, outs = [], set()
            for kind, n in self.cx.cell_neighbors(cell):
                if n in self:
                    ins.append((kind, n))
                else:
                    outs.add(kind)
            adj[cell] = ins
            clipped[cell] = outs
        self._adj = adj
        self._clipped = clipped

    def sample_cells(self, count: int, seed: int):
        rng = random.Random(seed)
        pool = self.cells
        count = min(count, len(pool))
        return rng.sample(pool, count)

    def describe(self):
        return {"extents": [list(e) for e in self.extents],
                "base": format_cell(self.base),
                "chambers": len(self._depth),
                "cells": len(self.cells)}


def _columns_within(pattern, radius):
    cols = [EMPTY]
    frontier = [EMPTY]
    for _ in range(radius):
        nxt = []
        for c in frontier:
            for g in pattern.generators():
                n = concat(c, (g,))
                if len(n) == len(c) + 1:
                    nxt.append(n)
        cols.extend(nxt)
        frontier = nxt
    return cols


# ----------------------------------------------------------------- search

class _Search:
    """Dijkstra with deterministic tie-breaking over the lazy complex or a window."""

    def __init__(self, cx, params, source, window=None, upper=None, budget=None):
        self.cx = cx
        self.params = params
        self.source = source
        self.window = window
        self.upper = upper
        self.budget = budget if budget is not None else params.budget
        self.dist = {}      # cell -> Fraction
        self.counts = {}    # cell -> (t, c, s) step counts, tie-broken
        self.pred = {}
        self.settled = set()
        self.min_escape = None  # cheapest possible exit through the window boundary
        self.heap = []
        self._push(source, Fraction(0), (0, 0, 0), None)

    def _push(self, cell, value, counts, pred):
        old = self.dist.get(cell)
        if old is not None:
            if value > old:
                return
            if value == old and (counts, _cell_key(pred)) >= (self.counts[cell], _cell_key(self.pred[cell])):
                return
        elif len(self.dist) >= self.budget:
            raise BudgetExceeded(self.budget, len(self.dist), self.upper)
        self.dist[cell] = value
        self.counts[cell] = counts
        self.pred[cell] = pred
        heapq.heappush(self.heap, (value, _cell_key(cell), cell))

    def run(self, targets=None, settle_value=None):
        """Pop until targets are settled / heap min exceeds settle_value / done."""
        want = set(targets) - self.settled if targets is not None else None
        if want is not None and not want:
            return
        while self.heap:
            value, _, cell = heapq.heappop(self.heap)
            if cell in self.settled:
                continue
            if value > self.dist[cell]:
                continue
            if settle_value is not None and want is None and value > settle_value:
                heapq.heappush(self.heap, (value, _cell_key(cell), cell))
                break
            self.settled.add(cell)
            if self.window is not None:
                for kind in self.window.clipped_kinds(cell):
                    esc = value + self.params.weight(kind)
                    if self.min_escape is None or esc < self.min_escape:
                        self.min_escape = esc
            if want is not None:
                want.discard(cell)
                if not want:
                    return
            nbrs = (self.window.neighbors(cell) if self.window is not None
                    else self.cx.cell_neighbors(cell))
            for kind, n in nbrs:
                w = self.params.weight(kind)
                nv = value + w
                if self.upper is not None and nv > self.upper:
                    continue
                t, c, s = self.counts[cell]
                nc = (t + (kind == "T"), c + (kind == "C"), s + (kind == "S"))
                self._push(n, nv, nc, cell)

    def exact_below(self, value) -> bool:
        if self.window is None:
            return True
        return self.min_escape is None or self.min_escape >= value

    def path_to(self, cell):
        cells = [cell]
        while self.pred[cells[-1]] is not None:
            cells.append(self.pred[cells[-1]])
        cells.reverse()
        return cells


def _cell_key(cell):
    return cell.key() if cell is not None else ()


def canonical_upper_bound(cx: CoverComplex, params: MetricParams, q1: CellAddress, q2: CellAddress):
    """Cost of the explicit chamber-path route; a true path, hence an upper bound."""
    k = 0
    a1, a2 = q1.chamber, q2.chamber
    while k < len(a1) and k < len(a2) and a1[k] == a2[k]:
        k += 1
    crossings = []
    for j in range(len(a1), k, -1):  # walk down to the common chamber
        crossings.append((a1[:j], "back"))
    for j in range(k, len(a2)):      # then up toward q2
        crossings.append((a2[:j], a2[j]))
    cost = Fraction(0)
    col, z = q1.column, q1.level
    for cur_addr, step in crossings:
        info = cx.chamber(cur_addr)
        line = info.back_line if step == "back" else step
        i = _project_onto_line(info.pattern, line, col)
        cost += horizontal_distance(col, line_tile(info.pattern, line, i))
        wall = cx.wall_at(cur_addr, line)
        on_parent = cur_addr == wall.parent_address
        far = cx.across_wall(wall, on_parent, i, z)[0]
        far_addr = wall.child_address if on_parent else wall.parent_address
        far_line = wall.child_line if on_parent else wall.parent_line
        far_info = cx.chamber(far_addr)
        col = line_tile(far_info.pattern, far_line, far[0])
        z = far[1]
        cost += params.H
    cost += horizontal_distance(col, q2.column) + params.eta * abs(z - q2.level)
    return cost


def _project_onto_line(pattern, line, col) -> int:
    """Index of the tile of `line` nearest to `col` (tree projection)."""
    def d(i):
        return horizontal_distance(col, line_tile(pattern, line, i))
    i, cur = 0, d(0)
    step = 1 if d(1) < cur else -1
    while True:
        nxt = d(i + step)
        if nxt >= cur:
            return i
        i, cur = i + step, nxt


def distance(cx, params: MetricParams, q1: CellAddress, q2: CellAddress,
             window: Window = None, budget=None) -> DistanceResult:
    """Least path weight; exact on the infinite complex when window is None."""
    if q1 == q2:
        return DistanceResult(Fraction(0), PathLength(0, 0, 0, Fraction(0)), True, 1)
    upper = None
    if window is None:
        upper = canonical_upper_bound(cx, params, q1, q2)
    search = _Search(cx, params, q1, window=window, upper=upper, budget=budget)
    search.run(targets=[q2])
    if q2 not in search.settled:
        raise _unreachable(q1, q2)
    value = search.dist[q2]
    t, c, s = search.counts[q2]
    return DistanceResult(value, PathLength(c, s, t, value), search.exact_below(value),
                          len(search.dist))


def _unreachable(q1, q2):
    return InvariantViolation("window-disconnected",
                              f"{format_cell(q2)} not reachable from {format_cell(q1)} inside the window")


def distance_map(cx, params, source, *, window=None, settle_value=None, budget=None,
                 targets=None, upper=None):
    """Dijkstra sublevel exploration; returns the raw search object."""
    search = _Search(cx, params, source, window=window, upper=upper, budget=budget)
    search.run(targets=targets, settle_value=settle_value)
    return search


def dist_prime(cx, params: MetricParams, q1, q2, window=None, budget=None):
    """dist + J * chamber tree distance (a sum, not itself a path metric)."""
    res = distance(cx, params, q1, q2, window=window, budget=budget)
    return res.value + params.J * chamber_distance(q1.chamber, q2.chamber), res


def all_geodesics(cx, params, q1, q2, window=None, limit=64, budget=None, fwd=None):
    """Every geodesic from q1 to q2 in lexicographic cell order.

    Returns (geodesics, truncated).  A forward search from q1 may be
    passed in and is reused (and extended) across targets.
    """
    if q1 == q2:
        return [Geodesic((q1,), (), PathLength(0, 0, 0, Fraction(0)))], False
    if fwd is None:
        upper = None if window is not None else canonical_upper_bound(cx, params, q1, q2)
        fwd = distance_map(cx, params, q1, window=window, targets=[q2], budget=budget,
                           upper=upper)
    else:
        if fwd.source != q1:
            raise ValueError("forward search does not start at q1")
        fwd.run(targets=[q2])
    if q2 not in fwd.settled:
        raise _unreachable(q1, q2)
    D = fwd.dist[q2]
    fwd.run(settle_value=D)

    def nbrs(cell):
        return window.neighbors(cell) if window is not None else cx.cell_neighbors(cell)

    # tight edges only: every maximal backward walk from q2 ends at q1,
    # so the set reachable backward is exactly the union of all geodesics
    on_path = {q2}
    frontier = [q2]
    while frontier:
        m = frontier.pop()
        for kind, n in nbrs(m):
            if n in fwd.settled and n not in on_path \
                    and fwd.dist[n] + params.weight(kind) == fwd.dist[m]:
                on_path.add(n)
                frontier.append(n)
    geos = []
    truncated = False
    stack = [(q1, (q1,), ())]
    while stack:
        cell, cells, kinds = stack.pop()
        if cell == q2:
            geos.append(Geodesic(cells, kinds, PathLength.of(params, kinds)))
            if len(geos) >= limit:
                truncated = bool(stack)
                break
            continue
        steps = []
        for kind, n in nbrs(cell):
            if n in on_path and fwd.dist[n] == fwd.dist[cell] + params.weight(kind):
                steps.append((kind, n))
        steps.sort(key=lambda kn: _cell_key(kn[1]), reverse=True)  # stack pops smallest first
        for kind, n in steps:
            stack.append((n, cells + (n,), kinds + (kind,)))
    return geos, truncated


# ----------------------------------------------------------------- balls

@dataclass
class CellSet:
    """A finite set of cells with their metric values and provenance."""

    variant: str
    center: CellAddress
    radius: Fraction
    values: dict
    exact: bool
    window: 'Window | None' = None
    hull_of: 'CellSet | None' = field(default=None, repr=False)

    def __contains__(self, cell):
        return cell in self.values

    def __len__(self):
        return len(self.values)

    def cells(self):
        return sorted(self.values, key=_cell_key)

    def boundary_cells(self, cx):
        """Members with at least one neighbor outside the set."""
        out = []
        for cell in self.cells():
            nbrs = self.window.neighbors(cell) if self.window is not None else cx.cell_neighbors(cell)
            if any(n not in self.values for _, n in nbrs) or \
               (self.window is not None and self.window.clipped_kinds(cell)):
                out.append(cell)
        return out


def ball(cx, params: MetricParams, center: CellAddress, R, variant="B",
         window: Window = None, budget=None) -> CellSet:
    """Strict sublevel sets: B (dist < R), Bprime (dist' < R), P (vertical hull)."""
    R = Fraction(R)
    if variant not in ("B", "Bprime", "P"):
        raise ValueError(f"unknown ball variant {variant!r}")
    search = distance_map(cx, params, center, window=window, settle_value=R, budget=budget)
    sub = {c: v for c, v in search.dist.items() if c in search.settled and v < R}
    exact = search.exact_below(R)
    if variant == "B":
        return CellSet("B", center, R, sub, exact, window)
    J = params.J
    prime = {c: v + J * chamber_distance(center.chamber, c.chamber) for c, v in sub.items()}
    bprime = {c: v for c, v in prime.items() if v < R}
    if variant == "Bprime":
        return CellSet("Bprime", center, R, bprime, exact, window)
    # P: chamber-wise vertical convex hull of Bprime
    by_column = {}
    for c in bprime:
        by_column.setdefault((c.chamber, c.column), []).append(c.level)
    filled = {}
    need = []
    for (addr, col), levels in by_column.items():
        for z in range(min(levels), max(levels) + 1):
            cell = CellAddress(addr, col, z)
            filled[cell] = None
            need.append(cell)
    search.run(targets=need)
    raw_max = Fraction(0)
    for cell in filled:
        v = search.dist.get(cell)
        if v is None or cell not in search.settled:
            raise _unreachable(center, cell)
        raw_max = max(raw_max, v)
        filled[cell] = v + J * chamber_distance(center.chamber, cell.chamber)
    base = CellSet("Bprime", center, R, bprime, exact, window)
    return CellSet("P", center, R, filled, exact and search.exact_below(raw_max), window,
                   hull_of=base)


# ----------------------------------------------------------------- deck maps

def validate_deck(cx: CoverComplex):
    """Quotient-level lattice compatibility of every gluing.

    The wall lattice on a side with an r-arc circle is Z.(r,0) + Z.(0,1);
    the gluing matrix must carry one side's lattice onto the other's.
    """
    failures = []
    for gi, g in enumerate(cx.spec.gluings):
        r1 = cx.spec.pattern(g.end1[0]).circles[g.end1[1]].arc_count
        r2 = cx.spec.pattern(g.end2[0]).circles[g.end2[1]].arc_count
        A = g.map.matrix
        Ainv = g.map.inverse_matrix
        ok = (charts.mat_vec(A, (r1, 0))[0] % r2 == 0 and charts.mat_vec(A, (0, 1))[0] % r2 == 0
              and charts.mat_vec(Ainv, (r2, 0))[0] % r1 == 0 and charts.mat_vec(Ainv, (0, 1))[0] % r1 == 0)
        if not ok:
            failures.append({"gluing": gi, "arc_counts": [r1, r2], "matrix": [list(r) for r in A]})
    return failures


def apply_fiber_deck(cx: CoverComplex, n: int, cell: CellAddress) -> CellAddress:
    """Image of `cell` under the n-th power of the root chamber's fiber shift.

    Acts as level -> level + n on the root chamber and propagates across
    each crossed wall by the chart image of the current translation.
    """
    bad = validate_deck(cx)
    if bad:
        raise DeckIncompatible(f"gluing lattices incompatible: {bad}", wall=bad[0])
    g = EMPTY          # column translation in the current chamber
    dz = n
    image: Address = ROOT
    addr: Address = ROOT
    for step in cell.chamber:
        info = cx.chamber(addr)
        pattern = info.pattern
        img_line = canonicalize_line(pattern, WallLine(step.circle, concat(g, step.anchor), step.phase))
        delta = line_index_of(pattern, img_line, concat(g, step.anchor))
        word = pattern.circles[step.circle].word
        if (img_line.phase + delta) % cyclic_period(word) != step.phase % cyclic_period(word):
            raise DeckIncompatible(f"phase drift while mapping {format_line(step)}")
        wall = cx.wall_at(addr, step)
        A = wall.gluing.map.matrix
        v = (delta, dz)
        far = charts.mat_vec(wall.gluing.map.inverse_matrix if wall.parent_is_grid else A, v)
        child = cx.chamber(addr + (step,))
        back_word = child.pattern.circles[child.back_line.circle].word
        r = len(back_word)
        if far[0] % r != 0:
            raise DeckIncompatible(
                f"translation {far} along {wall.describe()} is not a multiple of the arc count {r}",
                wall=wall.describe())
        g = _word_power(back_word, far[0] // r)
        dz = far[1]
        image = image + (img_line,)
        cx.chamber(image)
        addr = addr + (step,)
    return CellAddress(image, concat(g, cell.column), cell.level + dz)


def _word_power(word, k: int):
    if k < 0:
        word, k = inverse(word), -k
    out = EMPTY
    for _ in range(k):
        out = concat(out, word)
    return out


@dataclass
class DisplacementReport:
    cell: CellAddress
    rows: list
    c_hat: Fraction
    exact: bool

    def to_json(self):
        return {"cell": format_cell(self.cell),
                "rows": [{"n": n, "dist_prime": str(v), "exact": e} for n, v, e in self.rows],
                "c_hat": str(self.c_hat),
                "exact": self.exact}


def displacement_growth(cx, params: MetricParams, cell: CellAddress = None,
                        n_max: int = 8, window: Window = None) -> DisplacementReport:
    """dist'(Q, phi^n Q) for n = 1..n_max and the empirical growth rate."""
    if cell is None:
        cell = root_cell(cx)
    rows = []
    c_hat = None
    exact = True
    for n in range(1, n_max + 1):
        img = apply_fiber_deck(cx, n, cell)
        val, res = dist_prime(cx, params, cell, img, window=window)
        rows.append((n, val, res.exact))
        exact = exact and res.exact
        rate = val / n
        if c_hat is None or rate < c_hat:
            c_hat = rate
    return DisplacementReport(cell, rows, c_hat, exact)
