"""Manifold-spec documents and deterministic window exports.

The interchange format is UTF-8 JSON with a fixed field order on
output and rationals as "p/q" strings, so a canonicalized document is
diff-stable and round-trips byte-identically.  Parse failures carry a
JSON-path location ($.gluings[0].matrix) or a line/column for raw
JSON errors; semantic failures reuse the rule names of the core
validators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .cover import Gluing, GluingMap, ManifoldSpec, format_cell
from .errors import InvariantViolation, SpecSyntaxError
from .metric import MetricParams, Window
from .surface import make_pattern
from .words import format_word, parse_word

SCHEMA = "graph-manifold-complex/1"
GRAPH_SCHEMA = "graph-manifold-complex/graph/1"


def dump_json(obj) -> str:
    """The one JSON writer: insertion order preserved, two-space indent,
    one trailing newline.  Every artifact goes through here so identical
    inputs yield identical bytes."""
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def format_rational(value) -> str:
    return str(Fraction(value))


def parse_rational(value, location: str) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise SpecSyntaxError(f'rationals are strings like "5/8", got {value!r}', location)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise SpecSyntaxError(f"bad rational {value!r}", location) from None
    raise SpecSyntaxError(f'rationals are strings like "5/8", got {type(value).__name__}', location)


def _need(obj, key, kind, location, required=True, default=None):
    if key not in obj:
        if required:
            raise SpecSyntaxError(f"missing field {key!r}", location)
        return default
    value = obj[key]
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool)):
        raise SpecSyntaxError(
            f"field {key!r} must be {kind.__name__}, got {type(value).__name__}",
            f"{location}.{key}")
    return value


def _no_extras(obj, allowed, location):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise SpecSyntaxError(f"unknown fields {extra} (allowed: {sorted(allowed)})", location)


def _relocate(err: InvariantViolation, location: str):
    return InvariantViolation(err.rule, err.message, err.location or location)


@dataclass(frozen=True)
class SpecDocument:
    """A parsed document: the validated spec plus its metric defaults."""

    spec: ManifoldSpec
    metric: MetricParams

    def to_obj(self) -> dict:
        spec, m = self.spec, self.metric
        return {
            "schema": SCHEMA,
            "condition": spec.condition,
            "chamber_types": [
                {"label": p.label,
                 "cut_rank": p.cut_rank,
                 "circles": [format_word(c.word) for c in p.circles]}
                for p in spec.chamber_types],
            "gluings": [
                {"end1": [g.end1[0], g.end1[1]],
                 "end2": [g.end2[0], g.end2[1]],
                 "matrix": [list(g.map.matrix[0]), list(g.map.matrix[1])],
                 "offset": [format_rational(g.map.offset[0]), format_rational(g.map.offset[1])]}
                for g in spec.gluings],
            "metric": {"eta": format_rational(m.eta), "H": format_rational(m.H),
                       "J": format_rational(m.J), "budget": m.budget},
        }

    def canonical(self) -> str:
        return dump_json(self.to_obj())


def _parse_pattern(entry, location):
    if not isinstance(entry, dict):
        raise SpecSyntaxError(f"chamber type must be an object, got {type(entry).__name__}", location)
    _no_extras(entry, ("label", "cut_rank", "circles"), location)
    label = _need(entry, "label", str, location)
    rank = _need(entry, "cut_rank", int, location)
    circles = _need(entry, "circles", list, location)
    words = []
    for ci, text in enumerate(circles):
        if not isinstance(text, str):
            raise SpecSyntaxError("circle words are strings", f"{location}.circles[{ci}]")
        try:
            words.append(parse_word(text, rank=rank if rank >= 1 else None))
        except SpecSyntaxError as err:
            raise SpecSyntaxError(err.message, f"{location}.circles[{ci}]") from None
    try:
        return make_pattern(rank, words, label=label)
    except InvariantViolation as err:
        raise _relocate(err, location) from None


def _parse_end(value, location):
    if (not isinstance(value, list) or len(value) != 2
            or not isinstance(value[0], str) or not isinstance(value[1], int)
            or isinstance(value[1], bool)):
        raise SpecSyntaxError('gluing ends are ["label", circle]', location)
    return (value[0], value[1])


def _parse_matrix(value, location):
    rows = []
    if not isinstance(value, list) or len(value) != 2:
        raise SpecSyntaxError("matrix needs two rows", location)
    for ri, row in enumerate(value):
        if (not isinstance(row, list) or len(row) != 2
                or any(isinstance(x, bool) or not isinstance(x, int) for x in row)):
            raise SpecSyntaxError("matrix rows are two integers", f"{location}[{ri}]")
        rows.append((row[0], row[1]))
    return (rows[0], rows[1])


def _parse_gluing(entry, location):
    if not isinstance(entry, dict):
        raise SpecSyntaxError(f"gluing must be an object, got {type(entry).__name__}", location)
    _no_extras(entry, ("end1", "end2", "matrix", "offset"), location)
    end1 = _parse_end(_need(entry, "end1", list, location), f"{location}.end1")
    end2 = _parse_end(_need(entry, "end2", list, location), f"{location}.end2")
    matrix = _parse_matrix(_need(entry, "matrix", list, location), f"{location}.matrix")
    offset_val = _need(entry, "offset", list, location, required=False)
    if offset_val is None:
        offset = (Fraction(1, 2), Fraction(1, 2))
    else:
        if len(offset_val) != 2:
            raise SpecSyntaxError("offset needs two rationals", f"{location}.offset")
        offset = tuple(parse_rational(v, f"{location}.offset[{i}]")
                       for i, v in enumerate(offset_val))
    try:
        gmap = GluingMap(matrix, offset)
    except InvariantViolation as err:
        raise _relocate(err, f"{location}.matrix") from None
    return Gluing(end1, end2, gmap)


def _parse_metric(entry, location):
    if entry is None:
        return MetricParams()
    if not isinstance(entry, dict):
        raise SpecSyntaxError("metric must be an object", location)
    _no_extras(entry, ("eta", "H", "J", "budget"), location)
    kwargs = {}
    for key in ("eta", "H", "J"):
        if key in entry:
            kwargs[key] = parse_rational(entry[key], f"{location}.{key}")
    if "budget" in entry:
        budget = entry["budget"]
        if isinstance(budget, bool) or not isinstance(budget, int) or budget <= 0:
            raise SpecSyntaxError("budget must be a positive integer", f"{location}.budget")
        kwargs["budget"] = budget
    try:
        return MetricParams(**kwargs)
    except InvariantViolation as err:
        raise _relocate(err, location) from None


def parse_spec_document(text) -> SpecDocument:
    """Parse and validate a UTF-8 JSON spec document.

    All structural problems raise SpecSyntaxError with a JSON-path (or
    line/column) location; semantic ones surface the core validators'
    InvariantViolation untouched apart from the location.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as err:
            raise SpecSyntaxError(f"document is not UTF-8: {err}", "$") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecSyntaxError(f"invalid JSON: {err.msg}",
                              f"line {err.lineno} column {err.colno}") from None
    if not isinstance(obj, dict):
        raise SpecSyntaxError("document must be a JSON object", "$")
    _no_extras(obj, ("schema", "condition", "chamber_types", "gluings", "metric"), "$")
    schema = _need(obj, "schema", str, "$")
    if schema != SCHEMA:
        raise SpecSyntaxError(f"unsupported schema {schema!r} (expected {SCHEMA!r})", "$.schema")
    condition = _need(obj, "condition", str, "$")
    if condition not in ("B", "C"):
        raise SpecSyntaxError(f'condition must be "B" or "C", got {condition!r}', "$.condition")
    types_val = _need(obj, "chamber_types", list, "$")
    if not types_val:
        raise SpecSyntaxError("need at least one chamber type", "$.chamber_types")
    patterns = tuple(_parse_pattern(e, f"$.chamber_types[{i}]") for i, e in enumerate(types_val))
    gluings_val = _need(obj, "gluings", list, "$", required=False, default=[])
    gluings = tuple(_parse_gluing(e, f"$.gluings[{i}]") for i, e in enumerate(gluings_val))
    metric = _parse_metric(obj.get("metric"), "$.metric")
    try:
        spec = ManifoldSpec(patterns, gluings, condition=condition)
    except InvariantViolation as err:
        loc = "$." + err.location if err.location and not err.location.startswith("$") else (err.location or "$")
        raise InvariantViolation(err.rule, err.message, loc) from None
    return SpecDocument(spec, metric)


def document_for(spec: ManifoldSpec, metric: MetricParams = None) -> SpecDocument:
    return SpecDocument(spec, metric if metric is not None else MetricParams())


# ----------------------------------------------------- query result objects
#
# Shared by the CLI and the HTTP service so both speak the same shapes.

def dist_obj(q1, q2, value, res) -> dict:
    return {
        "pair": [format_cell(q1), format_cell(q2)],
        "dist": format_rational(res.value),
        "dist_prime": format_rational(value),
        "length": {"c": res.length.c_steps, "s": res.length.s_steps,
                   "t": res.length.t_steps},
        "exact": res.exact,
        "cells_seen": res.cells_seen,
    }


def geodesics_obj(q1, q2, geos, truncated) -> dict:
    return {
        "pair": [format_cell(q1), format_cell(q2)],
        "count": len(geos),
        "truncated": truncated,
        "geodesics": [{"value": format_rational(g.length.value),
                       "kinds": "".join(g.kinds),
                       "cells": [format_cell(c) for c in g.cells]}
                      for g in geos],
    }


def ball_obj(cells) -> dict:
    return {
        "variant": cells.variant,
        "center": format_cell(cells.center),
        "R": format_rational(cells.radius),
        "exact": cells.exact,
        "count": len(cells),
        "cells": [{"cell": format_cell(c), "value": format_rational(cells.values[c])}
                  for c in cells.cells()],
    }


def deck_obj(failures, report) -> dict:
    return {
        "lattice": {"ok": not failures, "failures": failures},
        "displacement": report.to_json(),
    }


# ------------------------------------------------------------- graph export

def _window_edges(window: Window):
    """In-window edges, each unordered pair once (adjacency is symmetric,
    so the smaller endpoint emits it), deterministically ordered."""
    edges = []
    for cell in window.cells:
        a = format_cell(cell)
        for kind, n in window.neighbors(cell):
            if cell.key() < n.key():
                edges.append((a, format_cell(n), kind))
    return edges


def graph_document(window: Window, params: MetricParams) -> dict:
    """Structured adjacency export of one window."""
    edges = [{"a": a, "b": b, "kind": kind, "weight": format_rational(params.weight(kind))}
             for a, b, kind in _window_edges(window)]
    return {
        "schema": GRAPH_SCHEMA,
        "window": window.describe(),
        "weights": {k: format_rational(params.weight(k)) for k in ("C", "S", "T")},
        "nodes": [format_cell(c) for c in window.cells],
        "edges": edges,
    }


def graph_dot(window: Window, params: MetricParams) -> str:
    """The same adjacency as graph_document, in DOT."""
    lines = ["graph cells {"]
    for cell in window.cells:
        lines.append(f'  "{format_cell(cell)}";')
    for a, b, kind in _window_edges(window):
        w = format_rational(params.weight(kind))
        lines.append(f'  "{a}" -- "{b}" [label="{kind}" w="{w}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
