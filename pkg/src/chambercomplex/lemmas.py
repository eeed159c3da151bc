"""Finite-window checkers for the combinatorial lemmas of the metric.

Each checker enumerates configurations inside a window, tests a
displayed inequality, and returns a LemmaReport whose witnesses replay
against the metric module alone.  Small-H or large-eta regimes run the
same machinery; reports flag whether the weights satisfy the standard
regime, and failures found outside it are expected rather than fatal.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .charts import mat_inv, mat_vec, overlap_offsets
from .cover import (
    CellAddress,
    CoverComplex,
    GluingMap,
    chamber_distance,
    format_cell,
)
from .errors import BudgetExceeded
from .metric import (
    MetricParams,
    Window,
    all_geodesics,
    ball,
    distance_map,
)
from .surface import format_line, horizontal_distance, line_index_of, minimal_chain
from .words import word_key

GEODESIC_CAP = 48


@dataclass
class LemmaReport:
    lemma: str
    verdict: str                    # pass | fail | budget-exhausted
    params: dict
    stats: dict
    witnesses: list = field(default_factory=list)

    def to_json(self):
        return {
            "lemma": self.lemma,
            "verdict": self.verdict,
            "params": self.params,
            "stats": {k: self.stats[k] for k in sorted(self.stats)},
            "witnesses": self.witnesses,
        }


def _params_json(params: MetricParams, window: Window = None, **extra):
    out = {
        "eta": str(params.eta),
        "H": str(params.H),
        "J": str(params.J),
        "budget": params.budget,
        "standard_regime": params.standard_regime,
    }
    if window is not None:
        out["window"] = window.describe()
    out.update(extra)
    return {k: out[k] for k in sorted(out)}


def _finish(report: LemmaReport) -> LemmaReport:
    if report.verdict != "budget-exhausted":
        report.verdict = "fail" if report.witnesses else "pass"
    return report


# ------------------------------------------------------------- sampling

def sample_pairs(cx, params, window, n_sources=6, per_source=6, value_cap=None, seed=0):
    """Deterministic cell pairs with windowed distance at most value_cap.

    One sublevel search per source; the searches are returned alongside
    the pairs so geodesic checkers can reuse them.
    """
    if value_cap is None:
        value_cap = 3 * params.H
    rng = random.Random(seed)
    cells = window.cells
    sources = sorted(rng.sample(cells, min(n_sources, len(cells))), key=lambda c: c.key())
    pairs, searches = [], {}
    for s in sources:
        search = distance_map(cx, params, s, window=window, settle_value=value_cap)
        searches[s] = search
        reach = sorted((c for c in search.settled
                        if c != s and search.dist[c] <= value_cap),
                       key=lambda c: c.key())
        # same-chamber pairs feed the chain clauses; keep both kinds in play
        near = [c for c in reach if c.chamber == s.chamber]
        far = [c for c in reach if c.chamber != s.chamber]
        take_near = min(len(near), per_source,
                        (per_source + 1) // 2 + max(0, (per_source - len(far))))
        chosen = rng.sample(near, take_near)
        chosen += rng.sample(far, min(len(far), per_source - take_near))
        for t in sorted(chosen, key=lambda c: c.key()):
            pairs.append((s, t))
    return pairs, searches


def _pair_geodesics(cx, params, pairs, searches, window, cap):
    """Yield (pair, geodesics, truncated) with forward-search reuse."""
    for q1, q2 in pairs:
        geos, truncated = all_geodesics(cx, params, q1, q2, window=window,
                                        limit=cap, fwd=searches.get(q1))
        yield (q1, q2), geos, truncated


# --------------------------------------------------- geodesic structure

def _wall_of_step(cx, c1: CellAddress, c2: CellAddress):
    child = c1.chamber if len(c1.chamber) > len(c2.chamber) else c2.chamber
    return cx.wall_at(child[:-1], child[-1])


def _crossing_events(cx, geo):
    """(step index, wall) for every T-step of the geodesic."""
    events = []
    for i, kind in enumerate(geo.kinds):
        if kind == "T":
            events.append((i, _wall_of_step(cx, geo.cells[i], geo.cells[i + 1])))
    return events


def _column_runs(geo, chamber=None):
    """Maximal runs of consecutive cells sharing (chamber, column).

    With a chamber filter, runs outside it are dropped (cells of other
    chambers still separate runs).
    """
    runs = []
    for i, cell in enumerate(geo.cells):
        key = (cell.chamber, cell.column)
        if runs and runs[-1][0] == key and runs[-1][2] == i - 1:
            runs[-1][2] = i
        else:
            runs.append([key, i, i])
    if chamber is not None:
        runs = [r for r in runs if r[0][0] == chamber]
    return [(key, first, last) for key, first, last in runs]


def _geo_json(geo, cap=40):
    cells = [format_cell(c) for c in geo.cells[:cap]]
    if len(geo.cells) > cap:
        cells.append(f"... {len(geo.cells) - cap} more")
    return cells


def check_wall_crossing_bound(cx, params, pairs, searches=None, window=None,
                              cap=GEODESIC_CAP) -> LemmaReport:
    """No geodesic crosses any one wall three or more times."""
    report = LemmaReport("wall-crossing", "pass",
                         _params_json(params, window, geodesic_cap=cap),
                         {"pairs": len(pairs), "geodesics": 0, "truncated": 0,
                          "max_crossings": 0})
    try:
        for pair, geos, truncated in _pair_geodesics(cx, params, pairs, searches or {},
                                                     window, cap):
            report.stats["geodesics"] += len(geos)
            report.stats["truncated"] += bool(truncated)
            for geo in geos:
                counts = {}
                for _, wall in _crossing_events(cx, geo):
                    counts[wall.key()] = counts.get(wall.key(), 0) + 1
                if counts:
                    worst = max(counts.values())
                    report.stats["max_crossings"] = max(report.stats["max_crossings"], worst)
                for (i, wall) in _crossing_events(cx, geo):
                    if counts[wall.key()] >= 3:
                        report.witnesses.append({
                            "lemma": "wall-crossing",
                            "pair": [format_cell(pair[0]), format_cell(pair[1])],
                            "wall": wall.describe(),
                            "crossings": counts[wall.key()],
                            "geodesic": _geo_json(geo),
                        })
                        break
    except BudgetExceeded as e:
        report.verdict = "budget-exhausted"
        report.stats["budget"] = str(e)
    return _finish(report)


def check_no_column_reentry(cx, params, pairs, searches=None, window=None,
                            cap=GEODESIC_CAP) -> LemmaReport:
    """Each column's cells form one contiguous block of every geodesic."""
    report = LemmaReport("column-interval", "pass",
                         _params_json(params, window, geodesic_cap=cap),
                         {"pairs": len(pairs), "geodesics": 0, "truncated": 0})
    try:
        for pair, geos, truncated in _pair_geodesics(cx, params, pairs, searches or {},
                                                     window, cap):
            report.stats["geodesics"] += len(geos)
            report.stats["truncated"] += bool(truncated)
            for geo in geos:
                seen = set()
                prev = None
                for key, first, last in _column_runs(geo):
                    if key in seen:
                        report.witnesses.append({
                            "lemma": "column-interval",
                            "pair": [format_cell(pair[0]), format_cell(pair[1])],
                            "column": format_cell(CellAddress(key[0], key[1], 0)),
                            "reentry_at": first,
                            "geodesic": _geo_json(geo),
                        })
                        break
                    if prev is not None:
                        seen.add(prev)
                    prev = key
    except BudgetExceeded as e:
        report.verdict = "budget-exhausted"
        report.stats["budget"] = str(e)
    return _finish(report)


def _segment_walls(cx, geo, last, first):
    """Walls of the first and last T-step strictly between two runs."""
    walls = [(i, wall) for i, wall in _crossing_events(cx, geo) if last <= i < first]
    if not walls:
        return None, None
    return walls[0][1], walls[-1][1]


def _line_in_chamber(cx, wall, addr):
    if wall.parent_address == addr:
        return wall.parent_line
    return cx.chamber(wall.child_address).back_line


def _chain_indices(cx, addr, line, columns):
    """Index of each column on the line's tile chain, or None."""
    pattern = cx.chamber(addr).pattern
    out = []
    for col in columns:
        try:
            out.append(line_index_of(pattern, line, col))
        except ValueError:
            out.append(None)
    return out


def _shadow_assignment(chain, cols):
    """Strictly increasing chain positions with dist^H <= 1 per visited column.

    Endpoints are pinned; among feasible assignments one maximizing the
    number of fixed points E*_i == E_i is returned, so later clauses are
    not tripped by an avoidable shift.
    """
    n, span = len(cols), len(chain)
    allowed = []
    for i, col in enumerate(cols):
        if i == 0:
            allowed.append([0])
        elif i == n - 1:
            allowed.append([span - 1] if span - 1 > 0 else [])
        else:
            allowed.append([j for j in range(1, span - 1)
                            if horizontal_distance(chain[j], col) <= 1])
    score = [[None] * (span + 1) for _ in range(n + 1)]
    choice = [[None] * (span + 1) for _ in range(n + 1)]
    score[n] = [0] * (span + 1)
    for i in range(n - 1, -1, -1):
        for j in range(span, -1, -1):
            best = pick = None
            for jp in allowed[i]:
                if jp < j or score[i + 1][jp + 1] is None:
                    continue
                val = (chain[jp] == cols[i]) + score[i + 1][jp + 1]
                if best is None or val > best:
                    best, pick = val, jp
            score[i][j], choice[i][j] = best, pick
    if score[0][0] is None:
        return None
    js, j = [], 0
    for i in range(n):
        js.append(choice[i][j])
        j = js[-1] + 1
    return [chain[j] for j in js]


def check_chain_shadow(cx, params, pairs, searches=None, window=None,
                       cap=GEODESIC_CAP) -> LemmaReport:
    """Visited columns of a chamber shadow its minimal chain.

    For the visited columns E_1..E_n of a chamber: a strictly increasing
    assignment E*_i on the minimal chain from E_1 to E_n exists with
    E*_1 = E_1, E*_n = E_n and dist^H(E*_i, E_i) <= 1; mismatched E_i
    arise only between double crossings of two walls; consecutive runs
    either touch, or detour through exactly one wall along which the
    four columns E_i, E*_i, E*_{i+1}, E_{i+1} line up; and two visited
    columns on a common wall bound a straight run unless consecutive
    with a double crossing between them.
    """
    report = LemmaReport("chain-shadow", "pass",
                         _params_json(params, window, geodesic_cap=cap),
                         {"pairs": 0, "geodesics": 0, "truncated": 0, "vacuous": 0,
                          "assignments": 0, "shifted": 0})
    same = [(a, b) for a, b in pairs if a.chamber == b.chamber]
    report.stats["pairs"] = len(same)
    try:
        for pair, geos, truncated in _pair_geodesics(cx, params, same, searches or {},
                                                     window, cap):
            K = pair[0].chamber
            report.stats["geodesics"] += len(geos)
            report.stats["truncated"] += bool(truncated)
            for geo in geos:
                bad = _check_one_shadow(cx, params, K, geo, report.stats)
                if bad is not None:
                    bad["pair"] = [format_cell(pair[0]), format_cell(pair[1])]
                    bad["geodesic"] = _geo_json(geo)
                    bad["lemma"] = "chain-shadow"
                    report.witnesses.append(bad)
    except BudgetExceeded as e:
        report.verdict = "budget-exhausted"
        report.stats["budget"] = str(e)
    return _finish(report)


def _check_one_shadow(cx, params, K, geo, stats):
    runs = _column_runs(geo, chamber=K)
    cols = [key[1] for key, _, _ in runs]
    if len(cols) <= 1:
        stats["vacuous"] += 1
        return None
    chain = minimal_chain(cols[0], cols[-1])
    star = _shadow_assignment(chain, cols)
    if star is None:
        return {"clause": "c1-c3", "columns": [format_cell(CellAddress(K, c, 0)) for c in cols]}
    stats["assignments"] += 1
    stats["shifted"] += sum(1 for a, b in zip(star, cols) if a != b)
    on_chain = set(chain)
    for i in range(len(cols)):
        # (c4): a shifted column comes from double crossings of two walls
        if star[i] != cols[i]:
            if i == 0 or i == len(cols) - 1:
                return {"clause": "c4", "index": i, "detail": "endpoint shifted"}
            w_in = _segment_walls(cx, geo, runs[i - 1][2], runs[i][1])
            w_out = _segment_walls(cx, geo, runs[i][2], runs[i + 1][1])
            if w_in[0] is None or w_out[0] is None \
                    or w_in[0].key() != w_in[1].key() or w_out[0].key() != w_out[1].key():
                return {"clause": "c4", "index": i, "detail": "no flanking double crossings"}
            if cols[i] in on_chain \
                    or horizontal_distance(cols[i], cols[i - 1]) == 1 \
                    or horizontal_distance(cols[i], cols[i + 1]) == 1:
                return {"clause": "c4", "index": i, "detail": "shifted column adjacent or on chain"}
    for i in range(len(cols) - 1):
        d = horizontal_distance(cols[i], cols[i + 1])
        gap = geo.cells[runs[i][2] + 1: runs[i + 1][1]]
        if d == 1:
            # (c5): adjacent columns are visited back-to-back
            if gap:
                return {"clause": "c5", "index": i,
                        "detail": "geodesic leaves the chamber between adjacent columns"}
        elif d >= 2:
            # (c6): one wall is crossed out and back, and the four columns
            # line up on its chain
            w1, w2 = _segment_walls(cx, geo, runs[i][2], runs[i + 1][1])
            if w1 is None or w1.key() != w2.key():
                return {"clause": "c6", "index": i, "detail": "detour walls differ"}
            line = _line_in_chamber(cx, w1, K)
            idx = _chain_indices(cx, K, line, [cols[i], star[i], star[i + 1], cols[i + 1]])
            if None in idx:
                return {"clause": "c6", "index": i, "wall": w1.describe(),
                        "detail": "column not on the wall chain"}
            if not (idx[0] <= idx[1] <= idx[2] <= idx[3]
                    or idx[0] >= idx[1] >= idx[2] >= idx[3]):
                return {"clause": "c6", "index": i, "wall": w1.describe(),
                        "detail": f"columns out of order on the wall chain: {idx}"}
    lines_of = {i: {l.key(): l for l in cx.lines_of_column(K, cols[i])}
                for i in range(len(cols))}
    for i1 in range(len(cols)):
        for i2 in range(i1 + 1, len(cols)):
            shared = set(lines_of[i1]) & set(lines_of[i2])
            if not shared:
                continue
            # (c7): common-wall columns bound a straight run, or are
            # consecutive with a double crossing between them
            straight = horizontal_distance(cols[i1], cols[i2]) == i2 - i1 and all(
                horizontal_distance(cols[j], cols[j + 1]) == 1 for j in range(i1, i2))
            if straight:
                continue
            if i2 != i1 + 1:
                return {"clause": "c7", "indices": [i1, i2],
                        "detail": "non-consecutive columns share a wall without a straight run"}
            w1, w2 = _segment_walls(cx, geo, runs[i1][2], runs[i2][1])
            if w1 is None:
                return {"clause": "c7", "indices": [i1, i2],
                        "detail": "no crossing between common-wall columns"}
            shared_instances = set()
            for key in shared:
                wall = cx.wall_at(K, lines_of[i1][key])
                if not wall.boundary:
                    shared_instances.add(wall.key())
            if not (w1.key() == w2.key() and w1.key() in shared_instances):
                return {"clause": "c7", "indices": [i1, i2],
                        "detail": "detour does not double-cross the shared wall"}
    return None


def check_double_crossing_gap(cx, params, pairs, searches=None, window=None,
                              cap=GEODESIC_CAP) -> LemmaReport:
    """Double crossings flank far-apart columns; uncrossed walls keep
    their visited columns within 3H."""
    report = LemmaReport("double-crossing", "pass",
                         _params_json(params, window, geodesic_cap=cap),
                         {"pairs": len(pairs), "geodesics": 0, "truncated": 0,
                          "double_crossings": 0, "uncrossed_instances": 0})
    try:
        for pair, geos, truncated in _pair_geodesics(cx, params, pairs, searches or {},
                                                     window, cap):
            report.stats["geodesics"] += len(geos)
            report.stats["truncated"] += bool(truncated)
            for geo in geos:
                witness = _check_one_double(cx, params, geo, report.stats)
                if witness is not None:
                    witness["pair"] = [format_cell(pair[0]), format_cell(pair[1])]
                    witness["geodesic"] = _geo_json(geo)
                    witness["lemma"] = "double-crossing"
                    report.witnesses.append(witness)
    except BudgetExceeded as e:
        report.verdict = "budget-exhausted"
        report.stats["budget"] = str(e)
    return _finish(report)


def _check_one_double(cx, params, geo, stats):
    events = _crossing_events(cx, geo)
    by_wall = {}
    for i, wall in events:
        by_wall.setdefault(wall.key(), []).append((i, wall))
    per_chamber = {}
    for key, _, _ in _column_runs(geo):
        per_chamber.setdefault(key[0], set()).add(key[1])
    for key, evs in by_wall.items():
        if len(evs) == 2:
            stats["double_crossings"] += 1
            (s1, wall), (s2, _) = evs
            K = geo.cells[s1].chamber
            if geo.cells[s2 + 1].chamber != K:
                continue  # same-direction crossings cannot recur in a tree
            between = geo.cells[s1 + 1: s2 + 1]
            far = {(c.chamber, c.column) for c in between}
            if len(far) != 1:
                return {"clause": "b2-column", "wall": wall.describe(),
                        "detail": "between the crossings the curve leaves one far column"}
            e1, e2 = geo.cells[s1].column, geo.cells[s2 + 1].column
            gap = horizontal_distance(e1, e2)
            if not gap > params.H:
                return {"clause": "b2-gap", "wall": wall.describe(),
                        "gap": gap, "H": str(params.H)}
            line_key = _line_in_chamber(cx, wall, K).key()
            adjacent = {c for c in per_chamber.get(K, ())
                        if line_key in {l.key() for l in cx.lines_of_column(K, c)}}
            if adjacent != {e1, e2}:
                return {"clause": "b2-visited", "wall": wall.describe(),
                        "detail": f"{len(adjacent)} wall-adjacent columns visited"}
    # (b3): columns adjacent to an uncrossed wall stay within 3H
    crossed = set(by_wall)
    for K, colset in per_chamber.items():
        cols = sorted(colset, key=word_key)
        lines = {c: {l.key(): l for l in cx.lines_of_column(K, c)} for c in cols}
        for a in range(len(cols)):
            for b in range(a + 1, len(cols)):
                for lkey in set(lines[cols[a]]) & set(lines[cols[b]]):
                    wall = cx.wall_at(K, lines[cols[a]][lkey])
                    if wall is None or wall.boundary or wall.key() in crossed:
                        continue
                    stats["uncrossed_instances"] += 1
                    gap = horizontal_distance(cols[a], cols[b])
                    if not gap < 3 * params.H:
                        return {"clause": "b3", "wall": wall.describe(),
                                "gap": gap, "H": str(params.H)}
    return None


# ------------------------------------------------- parallel geodesics

def _first_geodesic(cx, params, q1, q2, window, searches):
    geos, _ = all_geodesics(cx, params, q1, q2, window=window, limit=1,
                            fwd=(searches or {}).get(q1))
    return geos[0]


def _cheap_dist_upper(params, a: CellAddress, b: CellAddress):
    if a.chamber != b.chamber:
        return None
    return horizontal_distance(a.column, b.column) + params.eta * abs(a.level - b.level)


def check_parallel_geodesics(cx, params, pairs, searches=None, window=None,
                             cap=8) -> LemmaReport:
    """Two geodesics crossing one wall from aligned data stay 4 / 4+H
    close at the wall; opposite vertical order forces a near meeting."""
    report = LemmaReport("parallel-geodesics", "pass",
                         _params_json(params, window, geodesic_cap=cap),
                         {"pairs": len(pairs), "wall_cases": 0, "interchange_cases": 0,
                          "skipped_hypotheses": 0})
    try:
        for q1, q2 in pairs:
            _check_one_parallel(cx, params, q1, q2, window, searches, cap, report)
            _check_one_interchange(cx, params, q1, q2, window, searches, report)
    except BudgetExceeded as e:
        report.verdict = "budget-exhausted"
        report.stats["budget"] = str(e)
    return _finish(report)


def _check_one_parallel(cx, params, q1, q2, window, searches, cap, report):
    shift = CellAddress(q1.chamber, q1.column, q1.level + 1)
    shift2 = CellAddress(q2.chamber, q2.column, q2.level + 1)
    if window is not None and (shift not in window or shift2 not in window):
        report.stats["skipped_hypotheses"] += 1
        return
    geos1, _ = all_geodesics(cx, params, q1, q2, window=window, limit=cap,
                             fwd=(searches or {}).get(q1))
    geos2, _ = all_geodesics(cx, params, shift, shift2, window=window, limit=cap)
    for g1 in geos1:
        ev1 = _crossing_events(cx, g1)
        if len(ev1) != 1:
            continue
        wall = ev1[0][1]
        for g2 in geos2:
            ev2 = _crossing_events(cx, g2)
            if len(ev2) != 1 or ev2[0][1].key() != wall.key():
                continue
            report.stats["wall_cases"] += 1
            s1, s2 = ev1[0][0], ev2[0][0]
            near = {"Q1": g1.cells[s1], "Q2": g2.cells[s2],
                    "Q1'": g1.cells[s1 + 1], "Q2'": g2.cells[s2 + 1]}
            names = sorted(near)
            for i, n1 in enumerate(names):
                for n2 in names[i + 1:]:
                    a, b = near[n1], near[n2]
                    same_side = ("'" in n1) == ("'" in n2)
                    bound = 4 if same_side else 4 + params.H
                    d = _windowed_distance(cx, params, a, b, window)
                    if d is None:
                        report.stats["skipped_hypotheses"] += 1
                        continue
                    if not d <= bound:
                        report.witnesses.append({
                            "lemma": "parallel-geodesics", "clause": "wall",
                            "pair": [format_cell(q1), format_cell(q2)],
                            "cells": [n1, format_cell(a), n2, format_cell(b)],
                            "dist": str(d), "bound": str(bound),
                            "wall": wall.describe(),
                        })
                        return


def _windowed_distance(cx, params, a, b, window):
    """Windowed distance, or the straight in-chamber bound if b only
    becomes reachable outside the window; None if neither applies."""
    cheap = _cheap_dist_upper(params, a, b)
    search = distance_map(cx, params, a, window=window, targets=[b], upper=cheap)
    if b in search.settled:
        return search.dist[b]
    return cheap


def _check_one_interchange(cx, params, q1, q2, window, searches, report):
    up1 = CellAddress(q1.chamber, q1.column, q1.level + 1)
    up2 = CellAddress(q2.chamber, q2.column, q2.level + 1)
    if window is not None and (up1 not in window or up2 not in window):
        report.stats["skipped_hypotheses"] += 1
        return
    # gamma: up1 -> q2, gammabar: q1 -> up2 have opposite vertical order at both ends
    g = _first_geodesic(cx, params, up1, q2, window, searches)
    gbar = _first_geodesic(cx, params, q1, up2, window, searches)
    report.stats["interchange_cases"] += 1
    best = None
    for a in g.cells:
        for b in gbar.cells:
            ub = _cheap_dist_upper(params, a, b)
            if ub is not None and ub < 4 * params.H:
                return
            if ub is not None and (best is None or ub < best[0]):
                best = (ub, a, b)
    candidates = []
    for a in g.cells:
        for b in gbar.cells:
            candidates.append((chamber_distance(a.chamber, b.chamber), a.key(), b.key(), a, b))
    for _, _, _, a, b in sorted(candidates)[:12]:
        d = _windowed_distance(cx, params, a, b, window)
        if d is not None and d < 4 * params.H:
            return
    report.witnesses.append({
        "lemma": "parallel-geodesics", "clause": "interchange",
        "pair": [format_cell(q1), format_cell(q2)],
        "detail": "no cell pair of the two geodesics is closer than 4H",
        "best_upper": str(best[0]) if best else None,
    })


# ------------------------------------------------------------ convexity

def check_convexity(cx, params, center: CellAddress, R, window: Window,
                    budget=None) -> LemmaReport:
    """Vertical segments between R-near aligned cells stay R+10H-near
    (R+8H within the center's own chamber)."""
    R = Fraction(R)
    report = LemmaReport("convexity", "pass",
                         _params_json(params, window, center=format_cell(center), R=str(R)),
                         {"columns": 0, "cells_checked": 0, "max_excess": "0",
                          "exact": True})
    try:
        search = distance_map(cx, params, center, window=window, settle_value=R,
                              budget=budget)
        near = {c: v for c, v in search.dist.items() if c in search.settled and v <= R}
        by_col = {}
        for c in near:
            by_col.setdefault((c.chamber, c.column), []).append(c.level)
        targets = []
        for (addr, col), levels in by_col.items():
            for z in range(min(levels), max(levels) + 1):
                targets.append(CellAddress(addr, col, z))
        search.run(targets=targets)
        max_excess = Fraction(0)
        max_val = Fraction(0)
        for (addr, col), levels in sorted(by_col.items(),
                                          key=lambda kv: (len(kv[0][0]), word_key(kv[0][1]))):
            report.stats["columns"] += 1
            z1, z2 = min(levels), max(levels)
            in_chamber = addr == center.chamber
            bound = R + (8 if in_chamber else 10) * params.H
            for z in range(z1, z2 + 1):
                q = CellAddress(addr, col, z)
                v = search.dist.get(q)
                report.stats["cells_checked"] += 1
                if v is None or q not in search.settled:
                    continue
                max_val = max(max_val, v)
                max_excess = max(max_excess, v - R)
                if not v < bound:
                    report.witnesses.append({
                        "lemma": "convexity",
                        "clause": "in-chamber" if in_chamber else "global",
                        "center": format_cell(center),
                        "Q1": format_cell(CellAddress(addr, col, z1)),
                        "Q2": format_cell(CellAddress(addr, col, z2)),
                        "Qstar": format_cell(q),
                        "dist": str(v), "bound": str(bound),
                    })
        report.stats["max_excess"] = str(max_excess)
        report.stats["exact"] = search.exact_below(max_val)
    except BudgetExceeded as e:
        report.verdict = "budget-exhausted"
        report.stats["budget"] = str(e)
    return _finish(report)


# --------------------------------------------------------- ball sandwich

def _slice_components(cells):
    """Connected components of a set of same-chamber cells under C/S steps."""
    cells = set(cells)
    comps = 0
    seen = set()
    for start in sorted(cells, key=lambda c: c.key()):
        if start in seen:
            continue
        comps += 1
        frontier = [start]
        seen.add(start)
        while frontier:
            cur = frontier.pop()
            for n in _in_chamber_neighbors(cur, cells):
                if n not in seen:
                    seen.add(n)
                    frontier.append(n)
    return comps


def _in_chamber_neighbors(cell, universe):
    out = []
    for dz in (-1, 1):
        n = CellAddress(cell.chamber, cell.column, cell.level + dz)
        if n in universe:
            out.append(n)
    for other in universe:
        if other.level == cell.level and \
                horizontal_distance(other.column, cell.column) == 1:
            out.append(other)
    return out


def _grid_components(points):
    points = set(points)
    comps = 0
    seen = set()
    for start in sorted(points):
        if start in seen:
            continue
        comps += 1
        frontier = [start]
        seen.add(start)
        while frontier:
            x, y = frontier.pop()
            for n in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                if n in points and n not in seen:
                    seen.add(n)
                    frontier.append(n)
    return comps


def check_ball_sandwich(cx, params, center: CellAddress, R, window: Window,
                        shells=False, budget=None) -> LemmaReport:
    """B' sits inside its vertical hull P, P inside B' fattened by an
    integer C2, and the per-chamber slices are disk-like."""
    R = Fraction(R)
    report = LemmaReport("ball-sandwich", "pass",
                         _params_json(params, window, center=format_cell(center),
                                      R=str(R), shells=shells),
                         {"bprime_cells": 0, "p_cells": 0, "chambers": 0,
                          "c2_sandwich": 0, "c2_aligned": 0, "c2": 0, "exact": True})
    try:
        P = ball(cx, params, center, R, "P", window=window, budget=budget)
        Bp = P.hull_of
        report.stats["bprime_cells"] = len(Bp.values)
        report.stats["p_cells"] = len(P.values)
        report.stats["exact"] = P.exact
        missing = [c for c in Bp.values if c not in P.values]
        if missing:
            report.witnesses.append({
                "lemma": "ball-sandwich", "clause": "inclusion",
                "center": format_cell(center), "R": str(R),
                "cells": [format_cell(c) for c in missing[:8]],
            })
        # least integer C with dist' < R + C on all of P
        excess = [v - R for v in P.values.values()]
        c2_sandwich = int(max(excess)) + 1 if excess and max(excess) >= 0 else 0
        # least integer C with dist^H, dist^V < C*R in the center's chamber
        c2_aligned = 0
        if R > 0:
            worst = 0
            for c in Bp.values:
                if c.chamber == center.chamber:
                    worst = max(worst,
                                horizontal_distance(c.column, center.column),
                                abs(c.level - center.level))
            while c2_aligned * R <= worst:
                c2_aligned += 1
        c2 = max(c2_sandwich, c2_aligned)
        report.stats["c2_sandwich"] = c2_sandwich
        report.stats["c2_aligned"] = c2_aligned
        report.stats["c2"] = c2
        by_chamber = {}
        for c in P.values:
            by_chamber.setdefault(c.chamber, []).append(c)
        report.stats["chambers"] = len(by_chamber)
        for addr in sorted(by_chamber, key=lambda a: (len(a), tuple(s.key() for s in a))):
            cells = by_chamber[addr]
            if _slice_components(cells) != 1:
                report.witnesses.append({
                    "lemma": "ball-sandwich", "clause": "slice-connected",
                    "center": format_cell(center), "R": str(R),
                    "chamber": format_cell(CellAddress(addr, (), 0)),
                    "cells": len(cells),
                })
            by_col = {}
            for c in cells:
                by_col.setdefault(c.column, []).append(c.level)
            for col, levels in by_col.items():
                levels.sort()
                if levels != list(range(levels[0], levels[-1] + 1)):
                    report.witnesses.append({
                        "lemma": "ball-sandwich", "clause": "vertical-convex",
                        "center": format_cell(center), "R": str(R),
                        "column": format_cell(CellAddress(addr, col, 0)),
                    })
            _check_wall_slices(cx, addr, cells, report, center, R)
        if shells and c2 > 0:
            boundaries = []
            for k in range(3):
                Pk = ball(cx, params, center, R + k * c2, "P", window=window, budget=budget)
                boundaries.append(_visible_boundary(Pk))
            report.stats["shell_cells"] = [len(b) for b in boundaries]
            for i in range(3):
                for j in range(i + 1, 3):
                    meet = boundaries[i] & boundaries[j]
                    if meet:
                        report.witnesses.append({
                            "lemma": "ball-sandwich", "clause": "shells",
                            "center": format_cell(center), "R": str(R),
                            "radii": [str(R + i * c2), str(R + j * c2)],
                            "cells": [format_cell(c) for c in sorted(meet, key=lambda c: c.key())[:8]],
                        })
    except BudgetExceeded as e:
        report.verdict = "budget-exhausted"
        report.stats["budget"] = str(e)
    return _finish(report)


def _visible_boundary(P):
    """Cells where a chamber slice of P visibly stops growing.

    Only same-chamber steps count: with J large every modest ball is
    single-chamber, so a wall-adjacent cell would otherwise sit on every
    shell at once.  Rim cells are excluded too; the window cannot see
    where a clipped slice would stop."""
    out = set()
    for cell in P.values:
        if P.window.clipped_kinds(cell):
            continue
        if any(n not in P.values
               for kind, n in P.window.neighbors(cell) if kind != "T"):
            out.add(cell)
    return out


def _check_wall_slices(cx, addr, cells, report, center, R):
    """P's footprint on each wall of the chamber is one connected patch."""
    by_line = {}
    for c in cells:
        for line in cx.lines_of_column(addr, c.column):
            if cx.wall_at(addr, line).boundary:
                continue
            i = line_index_of(cx.chamber(addr).pattern, line, c.column)
            by_line.setdefault(format_line(line), set()).add((i, c.level))
    for name in sorted(by_line):
        pts = by_line[name]
        if len(pts) > 1 and _grid_components(pts) != 1:
            report.witnesses.append({
                "lemma": "ball-sandwich", "clause": "wall-slice",
                "center": format_cell(center), "R": str(R),
                "line": name, "points": len(pts),
            })


# ------------------------------------------------------- wall constants

@dataclass
class WallConstants:
    matrix: tuple
    offset: tuple
    window: int
    condition: 'str | None'
    clauses: dict

    def to_json(self):
        return {
            "matrix": [list(r) for r in self.matrix],
            "offset": [str(x) for x in self.offset],
            "window": self.window,
            "condition": self.condition,
            "clauses": {k: self.clauses[k] for k in sorted(self.clauses)},
        }


def _least_strict(pairs):
    """Least integer C with num < C * den for all (num, den), den >= 1."""
    best = 0
    for num, den in pairs:
        c = num // den + 1
        best = max(best, c)
    return best


def _merge_clause(clauses, key, constant, cases, in_hypotheses):
    old = clauses.get(key)
    if old is None:
        clauses[key] = {"constant": constant, "cases": cases,
                        "in_hypotheses": in_hypotheses}
        return
    if constant is not None:
        old["constant"] = constant if old["constant"] is None \
            else max(old["constant"], constant)
    old["cases"] += cases


def _one_side_constants(A, omega, window, clauses, in_c, in_b):
    """Accumulate clause constants with the near chamber on the grid side.

    Near/far cells are lattice points; near u is adjacent to far v
    exactly when u = A v - w for an overlap offset w, so a far-side
    difference dv seen from the near side is A dv - (w1 - w2).
    """
    N = window
    Ainv = mat_inv(A)
    diffs = sorted({(w1[0] - w2[0], w1[1] - w2[1]) for w1 in omega for w2 in omega})
    b_entry = A[0][1]

    # (a) two near cells sharing a far neighbor differ by an offset gap
    _merge_clause(clauses, "a", max(max(abs(d[0]), abs(d[1])) for d in diffs) + 1,
                  len(diffs), in_c or in_b)

    # (b) far pair in one column: near and far verticals against the
    # near horizontal gap
    cases = []
    for dz in range(-N, N + 1):
        for d in diffs:
            img = mat_vec(A, (0, dz))
            cases.append((max(abs(img[1] - d[1]), abs(dz)), abs(img[0] - d[0]) + 1))
    _merge_clause(clauses, "b", _least_strict(cases), len(cases), in_c)

    # (c) two near-aligned pairs braced against two far columns: the
    # vertical gaps agree up to a transfer defect s.  Solving the far
    # column matching for z1-z4 and z2-z3 leaves s = (z1-z4)-(z2-z3)
    # depending only on the offset gaps, with a mod-A01 admissibility.
    worst, count = 0, 0
    if b_entry != 0:
        d_entry = A[1][1]
        for d14 in diffs:
            for d23 in diffs:
                if (d_entry * (d14[0] - d23[0])) % b_entry:
                    continue
                s = d_entry * (d14[0] - d23[0]) // b_entry - (d14[1] - d23[1])
                worst = max(worst, abs(s))
                count += 1
    else:
        # far columns constrain nothing vertically; the windowed maximum
        # is the honest (unbounded as N grows) answer
        worst, count = 2 * N, (2 * N + 1) ** 2
    _merge_clause(clauses, "c", worst + 1 if count else None, count, in_c)

    # (d) both horizontal distances at most 3
    worst, count = 0, 0
    if b_entry != 0:
        zspan = (3 + 3 * abs(A[0][0]) + max(abs(d[0]) for d in diffs)) // abs(b_entry) + 1
    else:
        zspan = N
    for di in range(-3, 4):
        for dz in range(-zspan, zspan + 1):
            img = mat_vec(A, (di, dz))
            for d in diffs:
                if abs(img[0] - d[0]) <= 3:
                    worst = max(worst, abs(img[1] - d[1]), abs(dz))
                    count += 1
    _merge_clause(clauses, "d", worst + 1 if count else None, count, in_c)

    # (e) near vertical growth against far vertical plus horizontal slack
    # (f) near displacement against total far displacement
    e_cases, f_cases = [], []
    for di in range(-N, N + 1):
        for dz in range(-N, N + 1):
            for d in diffs:
                img = mat_vec(A, (di, dz))
                dh, dv = abs(img[0] - d[0]), abs(img[1] - d[1])
                e_cases.append((dv - abs(dz), dh + 1))
                f_cases.append((max(dh, dv), abs(di) + abs(dz) + 1))
    _merge_clause(clauses, "e", _least_strict(e_cases), len(e_cases), in_b)
    _merge_clause(clauses, "f", _least_strict(f_cases), len(f_cases), in_c or in_b)

    # (g) equal near displacements land on far displacements that differ
    # by a bounded amount
    worst, count = 0, 0
    for dx in range(-N, N + 1):
        for dy in range(-N, N + 1):
            for d12 in diffs:
                for d34 in diffs:
                    p = mat_vec(Ainv, (dx + d12[0], dy + d12[1]))
                    q = mat_vec(Ainv, (dx + d34[0], dy + d34[1]))
                    worst = max(worst, abs(abs(p[0]) - abs(q[0])),
                                abs(abs(p[1]) - abs(q[1])))
                    count += 1
    _merge_clause(clauses, "g", worst + 1, count, in_c or in_b)


def estimate_wall_constants(gmap: GluingMap, window: int = 12) -> WallConstants:
    """Least per-clause integer constants over a chart window.

    The two chambers at a wall play symmetric roles, so each clause is
    evaluated with either side as the near one and the worse constant is
    kept.  Flipping sides replaces the matrix by its inverse and the
    offsets by their reflected images.
    """
    if window < 3:
        raise ValueError("window must be at least 3")
    A = gmap.matrix
    omega = overlap_offsets(A, gmap.offset)
    in_c = gmap.satisfies_condition("C")
    in_b = gmap.satisfies_condition("B")
    condition = "C" if in_c else ("B" if in_b else None)
    clauses = {}
    _one_side_constants(A, omega, window, clauses, in_c, in_b)
    # u = A v - w  <=>  v = A^-1 u - (A^-1 w) reversed
    Ainv = mat_inv(A)
    omega_rev = sorted({tuple(-x for x in mat_vec(Ainv, w)) for w in omega})
    _one_side_constants(Ainv, omega_rev, window, clauses, in_c, in_b)
    return WallConstants(A, gmap.offset, window, condition, clauses)


# ------------------------------------------------------------- the suite

def run_suite(cx: CoverComplex, params: MetricParams, window: Window = None,
              seed=0, n_sources=4, per_source=4, value_cap=None,
              convexity_R=None, sandwich_R=None) -> list:
    """All checkers on one shared window and sample; deterministic."""
    if window is None:
        window = Window(cx, extents=((3, 12), (2, 6), (1, 3)))
    if convexity_R is None:
        convexity_R = 2 * params.H
    if sandwich_R is None:
        sandwich_R = 2 * params.H
    reports = []
    for gi, gluing in enumerate(cx.spec.gluings):
        wc = estimate_wall_constants(gluing.map, window=8)
        reports.append(LemmaReport(
            f"wall-constants-{gi}", "pass",
            {"gluing": gi, "window": 8},
            {"condition": wc.condition,
             "constants": {k: v["constant"] for k, v in sorted(wc.clauses.items())}},
        ))
    pairs, searches = sample_pairs(cx, params, window, n_sources=n_sources,
                                   per_source=per_source, value_cap=value_cap, seed=seed)
    reports.append(check_wall_crossing_bound(cx, params, pairs, searches, window))
    reports.append(check_no_column_reentry(cx, params, pairs, searches, window))
    reports.append(check_chain_shadow(cx, params, pairs, searches, window))
    reports.append(check_double_crossing_gap(cx, params, pairs, searches, window))
    reports.append(check_parallel_geodesics(cx, params, pairs[:max(2, len(pairs) // 4)],
                                            searches, window))
    from .metric import root_cell
    reports.append(check_convexity(cx, params, root_cell(cx), convexity_R, window))
    reports.append(check_ball_sandwich(cx, params, root_cell(cx), sandwich_R, window))
    return reports


def replay_witness(cx, params, witness: dict, window: Window = None) -> bool:
    """Re-run the narrow check a witness came from; True = still violates."""
    from .cover import parse_cell
    lemma = witness.get("lemma")
    if "pair" in witness:
        pair = tuple(parse_cell(s, cx) for s in witness["pair"])
        checkers = {
            "wall-crossing": check_wall_crossing_bound,
            "column-interval": check_no_column_reentry,
            "chain-shadow": check_chain_shadow,
            "double-crossing": check_double_crossing_gap,
            "parallel-geodesics": check_parallel_geodesics,
        }
        checker = checkers.get(lemma)
        if checker is None:
            raise ValueError(f"cannot replay witness for {lemma!r}")
        report = checker(cx, params, [pair], None, window)
        return report.verdict == "fail"
    if lemma == "convexity":
        center = parse_cell(witness["center"], cx)
        qstar = parse_cell(witness["Qstar"], cx)
        search = distance_map(cx, params, center, window=window, targets=[qstar])
        bound = Fraction(witness["bound"])
        return not search.dist[qstar] < bound
    if lemma == "ball-sandwich":
        center = parse_cell(witness["center"], cx)
        report = check_ball_sandwich(cx, params, center, Fraction(witness["R"]),
                                     window, shells=witness["clause"] == "shells")
        return any(w["clause"] == witness["clause"] for w in report.witnesses)
    raise ValueError(f"cannot replay witness for {lemma!r}")
