"""The universal-cover cell complex of a glued-chamber manifold spec.

Chambers form a tree: the root is an instance of the first chamber
type, and every canonical wall line of a chamber whose circle is glued
leads to one neighbor chamber.  Addresses are the reduced step words of
crossed lines.  Cells are (chamber, column, level) unit boxes; the
complex grows lazily and caches adjacency behind a lock so one arena
can serve concurrent read queries.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

from . import charts
from .errors import InvariantViolation
from .surface import (
    ChamberPattern,
    WallLine,
    canonicalize_line,
    column_neighbors,
    format_line,
    format_word,
    horizontal_distance,
    line_index_of,
    line_tile,
    wall_lines_of_column,
)
from .words import EMPTY, Word, word_key


@dataclass(frozen=True)
class GluingMap:
    """Affine identification between the two lattice charts of a wall."""

    matrix: tuple
    offset: tuple = (Fraction(1, 2), Fraction(1, 2))

    def __post_init__(self):
        A = self.matrix
        if charts.mat_det(A) not in (1, -1):
            raise InvariantViolation("gluing-det", f"gluing matrix {A} must have determinant +-1")
        object.__setattr__(self, "offset", (Fraction(self.offset[0]), Fraction(self.offset[1])))

    @property
    def inverse_matrix(self):
        return charts.mat_inv(self.matrix)

    def satisfies_condition(self, condition: str) -> bool:
        A = self.matrix
        if condition == "C":
            return A[0][1] != 0
        if condition == "B":
            return A[0][1] == 0 and A[1][1] == 1 and A[0][0] in (1, -1)
        raise ValueError(f"unknown condition {condition!r}")


@dataclass(frozen=True)
class Gluing:
    """One quotient gluing: end1=(label, circle) meets end2 via map.

    The end1 side of every instance is the unit-grid side of the chart;
    the end2 side occupies the affine (A, t) image.
    """

    end1: tuple
    end2: tuple
    map: GluingMap


@dataclass(frozen=True)
class ManifoldSpec:
    chamber_types: tuple
    gluings: tuple
    condition: str = "C"

    def __post_init__(self):
        labels = [p.label for p in self.chamber_types]
        if len(set(labels)) != len(labels):
            raise InvariantViolation("labels-unique", f"duplicate chamber labels in {labels}")
        by_label = {p.label: p for p in self.chamber_types}
        used = set()
        for gi, g in enumerate(self.gluings):
            for end in (g.end1, g.end2):
                label, circle = end
                if label not in by_label:
                    raise InvariantViolation("gluing-label", f"unknown chamber label {label!r}", f"gluings[{gi}]")
                if not (0 <= circle < len(by_label[label].circles)):
                    raise InvariantViolation("gluing-circle", f"circle {circle} out of range for {label!r}",
                                             f"gluings[{gi}]")
                if end in used:
                    raise InvariantViolation("gluing-once", f"circle {end} glued twice", f"gluings[{gi}]")
                used.add(end)
            if not g.map.satisfies_condition(self.condition):
                raise InvariantViolation(
                    "gluing-condition",
                    f"matrix {g.map.matrix} violates condition ({self.condition})", f"gluings[{gi}]")
        if self.condition == "B":
            if len(self.chamber_types) != 1 or len(self.gluings) != 1:
                raise InvariantViolation("condition-b-shape",
                                         "condition (B) needs exactly one chamber type and one gluing")
            g = self.gluings[0]
            if g.end1[0] != g.end2[0] or g.end1[1] == g.end2[1]:
                raise InvariantViolation("condition-b-shape",
                                         "condition (B) glues two distinct circles of the single type")

    def pattern(self, label: str) -> ChamberPattern:
        for p in self.chamber_types:
            if p.label == label:
                return p
        raise KeyError(label)

    def gluing_at(self, label: str, circle: int):
        """(gluing, endpoint index 1|2) for a glued circle, else None."""
        for g in self.gluings:
            if g.end1 == (label, circle):
                return g, 1
            if g.end2 == (label, circle):
                return g, 2
        return None


Address = tuple  # tuple[WallLine, ...]

ROOT: Address = ()


@dataclass(frozen=True)
class CellAddress:
    chamber: Address
    column: Word
    level: int

    def key(self):
        return (len(self.chamber), tuple(s.key() for s in self.chamber),
                word_key(self.column), self.level)

    def __lt__(self, other):
        return self.key() < other.key()


def address_key(addr: Address):
    return (len(addr), tuple(s.key() for s in addr))


@dataclass
class ChamberInfo:
    address: Address
    pattern: ChamberPattern
    back_line: 'WallLine | None'
    wall_in: 'WallInstance | None'


@dataclass
class WallInstance:
    """A realized wall between parent and child chamber (or a boundary wall).

    Lattice coords on each side are (index along that side's canonical
    line, chamber level).  grid side = the side realizing gluing end1.
    """

    parent_address: Address
    parent_line: WallLine
    child_address: 'Address | None'
    child_line: 'WallLine | None'
    gluing: 'Gluing | None'
    parent_is_grid: bool = True

    @property
    def boundary(self) -> bool:
        return self.gluing is None

    def key(self):
        return (address_key(self.parent_address), self.parent_line.key())

    def describe(self) -> str:
        steps = ":".join(format_line(s) for s in self.parent_address)
        return f"[{steps}]{format_line(self.parent_line)}"


class CoverComplex:
    """Lazily grown arena over a ManifoldSpec."""

    def __init__(self, spec: ManifoldSpec):
        self.spec = spec
        self._lock = threading.RLock()
        root_pattern = spec.chamber_types[0]
        self._chambers = {ROOT: ChamberInfo(ROOT, root_pattern, None, None)}
        self._offsets = {}
        self._lines = {}
        self._neighbors = {}

    # -------------------------------------------------------- chambers

    def chamber(self, address: Address) -> ChamberInfo:
        info = self._chambers.get(address)
        if info is not None:
            return info
        parent = self.chamber(address[:-1])
        with self._lock:
            return self._extend(parent, address[-1])

    def _extend(self, parent: ChamberInfo, line: WallLine) -> ChamberInfo:
        line = canonicalize_line(parent.pattern, line)
        address = parent.address + (line,)
        info = self._chambers.get(address)
        if info is not None:
            return info
        if parent.back_line is not None and line == parent.back_line:
            raise InvariantViolation("address-reduced",
                                     f"address recrosses {format_line(line)} at {address_key(address)}")
        hit = self.spec.gluing_at(parent.pattern.label, line.circle)
        if hit is None:
            raise InvariantViolation("boundary-crossed",
                                     f"circle {line.circle + 1} of {parent.pattern.label!r} is a boundary circle")
        gluing, end_idx = hit
        far_end = gluing.end2 if end_idx == 1 else gluing.end1
        child_pattern = self.spec.pattern(far_end[0])
        back_line = canonicalize_line(child_pattern, WallLine(far_end[1], EMPTY, 0))
        wall = WallInstance(
            parent_address=parent.address,
            parent_line=line,
            child_address=address,
            child_line=back_line,
            gluing=gluing,
            parent_is_grid=(end_idx == 1),
        )
        info = ChamberInfo(address, child_pattern, back_line, wall)
        self._chambers[address] = info
        return info

    def lines_of_column(self, address: Address, column: Word):
        info = self.chamber(address)
        key = (info.pattern.label, column)
        lines = self._lines.get(key)
        if lines is None:
            with self._lock:
                lines = wall_lines_of_column(info.pattern, column)
                self._lines[key] = lines
        return lines

    def wall_at(self, address: Address, line: WallLine) -> WallInstance:
        """The wall instance met when standing in `address` on `line`."""
        info = self.chamber(address)
        line = canonicalize_line(info.pattern, line)
        if info.back_line is not None and line == info.back_line:
            return info.wall_in
        hit = self.spec.gluing_at(info.pattern.label, line.circle)
        if hit is None:
            return WallInstance(address, line, None, None, None)
        with self._lock:
            child = self._extend(info, line)
        return child.wall_in

    # -------------------------------------------------------- charts

    def _offset_set(self, gluing: Gluing):
        omega = self._offsets.get(gluing)
        if omega is None:
            with self._lock:
                omega = charts.overlap_offsets(gluing.map.matrix, gluing.map.offset)
                self._offsets[gluing] = omega
        return omega

    def across_wall(self, wall: WallInstance, on_parent_side: bool, i: int, z: int):
        """Far-side lattice points (i', z') whose cells interiorly overlap (i, z)."""
        if wall.boundary:
            return []
        A = wall.gluing.map.matrix
        Ainv = wall.gluing.map.inverse_matrix
        omega = self._offset_set(wall.gluing)
        my_side_is_grid = wall.parent_is_grid == on_parent_side
        out = []
        if my_side_is_grid:
            for w in omega:
                out.append(charts.mat_vec(Ainv, (i + w[0], z + w[1])))
        else:
            base = charts.mat_vec(A, (i, z))
            for w in omega:
                out.append((base[0] - w[0], base[1] - w[1]))
        return sorted(set(out))

    # -------------------------------------------------------- cells

    def cell_neighbors(self, cell: CellAddress):
        """[(kind, neighbor)] with kind in {"S","C","T"}, deterministic order."""
        cached = self._neighbors.get(cell)
        if cached is not None:
            return cached
        info = self.chamber(cell.chamber)
        out = [("S", CellAddress(cell.chamber, cell.column, cell.level - 1)),
               ("S", CellAddress(cell.chamber, cell.column, cell.level + 1))]
        for col in column_neighbors(info.pattern, cell.column):
            out.append(("C", CellAddress(cell.chamber, col, cell.level)))
        tns = []
        for line in self.lines_of_column(cell.chamber, cell.column):
            wall = self.wall_at(cell.chamber, line)
            if wall.boundary:
                continue
            on_parent = cell.chamber == wall.parent_address
            my_line = wall.parent_line if on_parent else wall.child_line
            far_addr = wall.child_address if on_parent else wall.parent_address
            far_line = wall.child_line if on_parent else wall.parent_line
            far_pattern = self.chamber(far_addr).pattern
            i = line_index_of(info.pattern, my_line, cell.column)
            for (fi, fz) in self.across_wall(wall, on_parent, i, cell.level):
                far_col = line_tile(far_pattern, far_line, fi)
                tns.append(("T", CellAddress(far_addr, far_col, fz)))
        tns.sort(key=lambda kn: kn[1].key())
        out.extend(tns)
        with self._lock:
            self._neighbors[cell] = out
        return out

    def wall_chart_region(self, wall: WallInstance, cell: CellAddress):
        """The cell's rational polygon in the wall's chart plane."""
        if cell.chamber == wall.parent_address:
            on_parent = True
        elif not wall.boundary and cell.chamber == wall.child_address:
            on_parent = False
        else:
            raise ValueError(f"cell {format_cell(cell)} is not in a chamber of wall {wall.describe()}")
        info = self.chamber(cell.chamber)
        my_line = wall.parent_line if on_parent else wall.child_line
        i = line_index_of(info.pattern, my_line, cell.column)  # raises if off the wall
        square = charts.unit_square(i, cell.level)
        if wall.boundary or wall.parent_is_grid == on_parent:
            return square
        return charts.affine_image(wall.gluing.map.matrix, wall.gluing.map.offset, square)


def neighbor_chamber(complex_: CoverComplex, address: Address, line: WallLine):
    """Address across `line`, or None for a boundary wall."""
    info = complex_.chamber(address)
    line = canonicalize_line(info.pattern, line)
    if complex_.spec.gluing_at(info.pattern.label, line.circle) is None:
        return None
    if info.back_line is not None and line == info.back_line:
        return address[:-1]
    complex_.chamber(address + (line,))
    return address + (line,)


def chamber_distance(a1: Address, a2: Address) -> int:
    """Tree distance between two reduced addresses."""
    k = 0
    while k < len(a1) and k < len(a2) and a1[k] == a2[k]:
        k += 1
    return (len(a1) - k) + (len(a2) - k)


def vertically_aligned(q1: CellAddress, q2: CellAddress) -> bool:
    _require_same_chamber(q1, q2)
    return q1.column == q2.column


def horizontally_aligned(q1: CellAddress, q2: CellAddress) -> bool:
    _require_same_chamber(q1, q2)
    return q1.level == q2.level


def dist_h(q1: CellAddress, q2: CellAddress) -> int:
    _require_same_chamber(q1, q2)
    return horizontal_distance(q1.column, q2.column)


def dist_v(q1: CellAddress, q2: CellAddress) -> int:
    _require_same_chamber(q1, q2)
    return abs(q1.level - q2.level)


def _require_same_chamber(q1, q2):
    if q1.chamber != q2.chamber:
        raise ValueError("cells lie in different chambers; horizontal/vertical "
                         "alignment is only defined chamber-wise")


def format_cell(cell: CellAddress) -> str:
    steps = ":".join(format_line(s) for s in cell.chamber)
    return f"{steps}/{format_word(cell.column)}/{cell.level}"


def parse_cell(text: str, complex_: CoverComplex) -> CellAddress:
    """Parse 'steps/word/level' (root chamber = empty steps)."""
    from .errors import SpecSyntaxError
    from .surface import parse_line
    from .words import parse_word

    parts = text.strip().split("/")
    if len(parts) != 3:
        raise SpecSyntaxError(f"cell address needs steps/word/level: {text!r}")
    steps_s, word_s, level_s = parts
    address: Address = ROOT
    if steps_s:
        for tok in steps_s.split(":"):
            info = complex_.chamber(address)
            line = parse_line(tok, info.pattern)
            nxt = neighbor_chamber(complex_, address, line)
            if nxt is None:
                raise SpecSyntaxError(f"step {tok} crosses a boundary circle in {text!r}")
            if len(nxt) < len(address):
                raise SpecSyntaxError(f"step {tok} backtracks (addresses are reduced) in {text!r}")
            address = nxt
    info = complex_.chamber(address)
    column = parse_word(word_s, rank=info.pattern.cut_rank)
    try:
        level = int(level_s)
    except ValueError:
        raise SpecSyntaxError(f"bad level {level_s!r} in {text!r}") from None
    return CellAddress(address, column, level)
