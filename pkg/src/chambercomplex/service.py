"""HTTP facade over the core package.

Specs are registered once (POST /specs) and addressed by the SHA-256 of
their canonical document, so registration is idempotent and two clients
posting the same spec share one lazily-built complex.  Shared state
(complexes, materialized windows) lives behind per-entry locks; the
complexes' own caches are synchronized, so query handlers only need the
lock while building or fetching a window.

Error mapping: document and address problems return 422 with the rule
and JSON-path location; an exhausted expansion budget returns 409 with
the best bound found; unknown ids return 404.
"""

from __future__ import annotations

import hashlib
import json
import threading
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .cover import CoverComplex, parse_cell
from .documents import (
    SpecDocument,
    ball_obj,
    deck_obj,
    dist_obj,
    format_rational,
    geodesics_obj,
    graph_document,
    graph_dot,
    parse_rational,
    parse_spec_document,
)
from .errors import BudgetExceeded, ChamberComplexError, InvariantViolation, SpecSyntaxError
from .lemmas import (
    check_ball_sandwich,
    check_convexity,
    estimate_wall_constants,
    replay_witness,
    run_suite,
    sample_pairs,
)
from .cli import PAIR_CHECKERS, window_extents
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
from .torusbundle import (
    GroupElement,
    MonodromyMatrix,
    geometric_series_order_bruteforce,
    geometric_series_order_constructive,
    loop_decomposition,
    power,
)


# ------------------------------------------------------------- request models

class MetricOverrides(BaseModel):
    eta: Optional[str] = None
    H: Optional[str] = None
    J: Optional[str] = None
    budget: Optional[int] = Field(default=None, ge=1)
    window: Optional[int] = Field(default=None, ge=1)


class DistRequest(MetricOverrides):
    cell1: str
    cell2: str


class GeodesicsRequest(MetricOverrides):
    cell1: str
    cell2: str
    limit: int = Field(default=64, ge=1, le=4096)


class BallRequest(MetricOverrides):
    center: Optional[str] = None
    R: str
    variant: Literal["B", "Bprime", "P"] = "B"


class DeckRequest(MetricOverrides):
    cell: Optional[str] = None
    n_max: int = Field(default=8, ge=1, le=64)


class VerifyRequest(MetricOverrides):
    lemma: Literal[
        "wall-crossing", "column-interval", "chain-shadow",
        "double-crossing", "parallel-geodesics", "convexity", "ball-sandwich"]
    seed: int = 0
    n_sources: int = Field(default=4, ge=1)
    per_source: int = Field(default=4, ge=1)
    center: Optional[str] = None
    R: Optional[str] = None
    shells: bool = False


class ReplayRequest(MetricOverrides):
    witness: dict


class SuiteRequest(MetricOverrides):
    seed: int = 0
    n_sources: int = Field(default=4, ge=1)
    per_source: int = Field(default=4, ge=1)


class GraphRequest(MetricOverrides):
    format: Literal["json", "dot"] = "json"


class EstimateRequest(BaseModel):
    window: int = Field(default=12, ge=3)


class ElementBody(BaseModel):
    v: tuple[int, int]
    z: int


class OrderRequest(BaseModel):
    matrix: tuple[tuple[int, int], tuple[int, int]]
    k: int = Field(default=1, ge=1, le=6)
    method: Literal["brute", "constructive"] = "brute"


class LoopsRequest(BaseModel):
    matrix: tuple[tuple[int, int], tuple[int, int]]
    k: int = Field(default=1, ge=1, le=4)
    element: ElementBody


class PowerRequest(BaseModel):
    matrix: tuple[tuple[int, int], tuple[int, int]]
    element: ElementBody
    i: int


# ------------------------------------------------------------- registry

class _Entry:
    def __init__(self, doc: SpecDocument):
        self.doc = doc
        self.cx = CoverComplex(doc.spec)
        self.lock = threading.Lock()
        self._windows = {}

    def window(self, n: int, base=None) -> Window:
        """Shared, fully materialized window; one build per (n, base)."""
        key = (n, base.key() if base is not None else None)
        with self.lock:
            win = self._windows.get(key)
            if win is None:
                win = Window(self.cx, extents=window_extents(n), base=base)
                win._build_adjacency()
                self._windows[key] = win
            return win


class SpecRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self._entries: dict[str, _Entry] = {}

    def register(self, document_obj: dict) -> tuple[str, _Entry]:
        doc = parse_spec_document(json.dumps(document_obj))
        canonical = doc.canonical()
        spec_id = hashlib.sha256(canonical.encode()).hexdigest()[:16]
        with self._lock:
            entry = self._entries.get(spec_id)
            if entry is None:
                entry = _Entry(doc)
                self._entries[spec_id] = entry
        return spec_id, entry

    def get(self, spec_id: str) -> _Entry:
        with self._lock:
            entry = self._entries.get(spec_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown spec id {spec_id!r}")
        return entry

    def ids(self):
        with self._lock:
            return sorted(self._entries)


def _effective_params(entry: _Entry, req: MetricOverrides) -> MetricParams:
    base = entry.doc.metric
    eta = parse_rational(req.eta, "eta") if req.eta else base.eta
    if req.J:
        J = parse_rational(req.J, "J")
    elif req.H:
        J = None
    else:
        J = base.J
    H = parse_rational(req.H, "H") if req.H else base.H
    return MetricParams(eta=eta, H=H, J=J, budget=req.budget or base.budget)


def _maybe_window(entry: _Entry, req: MetricOverrides, base=None):
    return entry.window(req.window, base=base) if req.window is not None else None


def create_app() -> FastAPI:
    app = FastAPI(
        title="chambercomplex",
        description="Cell metrics, lemma checks and covering arithmetic "
                    "for graph-manifold chamber complexes.")
    registry = SpecRegistry()
    app.state.registry = registry

    @app.exception_handler(SpecSyntaxError)
    async def _syntax(request, err: SpecSyntaxError):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=422, content={
            "error": "syntax", "message": err.message, "location": err.location})

    @app.exception_handler(InvariantViolation)
    async def _invariant(request, err: InvariantViolation):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=422, content={
            "error": "invariant", "rule": err.rule, "message": err.message,
            "location": err.location})

    @app.exception_handler(BudgetExceeded)
    async def _budget(request, err: BudgetExceeded):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=409, content={
            "error": "budget-exhausted", "budget": err.budget, "cells": err.cells,
            "best_bound": None if err.best_bound is None else format_rational(err.best_bound)})

    @app.exception_handler(ChamberComplexError)
    async def _other(request, err: ChamberComplexError):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=422, content={
            "error": "invalid", "message": str(err)})

    # ----------------------------------------------------------- registry

    @app.post("/specs")
    def register_spec(document: dict):
        spec_id, entry = registry.register(document)
        return {"id": spec_id, "document": entry.doc.to_obj()}

    @app.get("/specs")
    def list_specs():
        out = []
        for spec_id in registry.ids():
            entry = registry.get(spec_id)
            spec = entry.doc.spec
            out.append({"id": spec_id, "condition": spec.condition,
                        "chamber_types": len(spec.chamber_types),
                        "gluings": len(spec.gluings)})
        return {"specs": out}

    @app.get("/specs/{spec_id}")
    def get_spec(spec_id: str):
        return registry.get(spec_id).doc.to_obj()

    # ----------------------------------------------------------- queries

    @app.post("/specs/{spec_id}/dist")
    def post_dist(spec_id: str, req: DistRequest):
        entry = registry.get(spec_id)
        params = _effective_params(entry, req)
        q1 = parse_cell(req.cell1, entry.cx)
        q2 = parse_cell(req.cell2, entry.cx)
        window = _maybe_window(entry, req, base=q1)
        value, res = dist_prime(entry.cx, params, q1, q2, window=window)
        return dist_obj(q1, q2, value, res)

    @app.post("/specs/{spec_id}/geodesics")
    def post_geodesics(spec_id: str, req: GeodesicsRequest):
        entry = registry.get(spec_id)
        params = _effective_params(entry, req)
        q1 = parse_cell(req.cell1, entry.cx)
        q2 = parse_cell(req.cell2, entry.cx)
        window = _maybe_window(entry, req, base=q1)
        geos, truncated = all_geodesics(entry.cx, params, q1, q2,
                                        window=window, limit=req.limit)
        return geodesics_obj(q1, q2, geos, truncated)

    @app.post("/specs/{spec_id}/ball")
    def post_ball(spec_id: str, req: BallRequest):
        entry = registry.get(spec_id)
        params = _effective_params(entry, req)
        center = parse_cell(req.center, entry.cx) if req.center else root_cell(entry.cx)
        window = _maybe_window(entry, req, base=center)
        cells = ball(entry.cx, params, center, parse_rational(req.R, "R"),
                     variant=req.variant, window=window)
        return ball_obj(cells)

    @app.post("/specs/{spec_id}/deck")
    def post_deck(spec_id: str, req: DeckRequest):
        entry = registry.get(spec_id)
        params = _effective_params(entry, req)
        cell = parse_cell(req.cell, entry.cx) if req.cell else root_cell(entry.cx)
        window = _maybe_window(entry, req, base=cell)
        failures = validate_deck(entry.cx)
        report = displacement_growth(entry.cx, params, cell, n_max=req.n_max, window=window)
        return deck_obj(failures, report)

    @app.post("/specs/{spec_id}/verify")
    def post_verify(spec_id: str, req: VerifyRequest):
        entry = registry.get(spec_id)
        params = _effective_params(entry, req)
        window = entry.window(req.window if req.window is not None else 2)
        if req.lemma in PAIR_CHECKERS:
            pairs, searches = sample_pairs(entry.cx, params, window,
                                           n_sources=req.n_sources,
                                           per_source=req.per_source, seed=req.seed)
            report = PAIR_CHECKERS[req.lemma](entry.cx, params, pairs, searches, window)
        else:
            center = parse_cell(req.center, entry.cx) if req.center else root_cell(entry.cx)
            R = parse_rational(req.R, "R") if req.R else 2 * params.H
            if req.lemma == "convexity":
                report = check_convexity(entry.cx, params, center, R, window)
            else:
                report = check_ball_sandwich(entry.cx, params, center, R, window,
                                             shells=req.shells)
        return report.to_json()

    @app.post("/specs/{spec_id}/replay")
    def post_replay(spec_id: str, req: ReplayRequest):
        entry = registry.get(spec_id)
        params = _effective_params(entry, req)
        window = entry.window(req.window if req.window is not None else 2)
        confirmed = replay_witness(entry.cx, params, req.witness, window)
        return {"lemma": req.witness.get("lemma"), "confirmed": bool(confirmed)}

    @app.post("/specs/{spec_id}/suite")
    def post_suite(spec_id: str, req: SuiteRequest):
        entry = registry.get(spec_id)
        params = _effective_params(entry, req)
        window = entry.window(req.window if req.window is not None else 2)
        reports = run_suite(entry.cx, params, window, seed=req.seed,
                            n_sources=req.n_sources, per_source=req.per_source)
        verdicts = [r.verdict for r in reports]
        return {"ok": all(v == "pass" for v in verdicts),
                "reports": [r.to_json() for r in reports]}

    @app.post("/specs/{spec_id}/estimate-c0")
    def post_estimate(spec_id: str, req: EstimateRequest):
        entry = registry.get(spec_id)
        return {"window": req.window,
                "gluings": [{"index": gi,
                             **estimate_wall_constants(g.map, window=req.window).to_json()}
                            for gi, g in enumerate(entry.doc.spec.gluings)]}

    @app.post("/specs/{spec_id}/export-graph")
    def post_graph(spec_id: str, req: GraphRequest):
        entry = registry.get(spec_id)
        params = _effective_params(entry, req)
        window = entry.window(req.window if req.window is not None else 1)
        if req.format == "dot":
            from fastapi.responses import PlainTextResponse
            return PlainTextResponse(graph_dot(window, params))
        return graph_document(window, params)

    # ----------------------------------------------------------- torus bundle

    @app.post("/tb/order")
    def post_order(req: OrderRequest):
        try:
            A = MonodromyMatrix(req.matrix)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        fn = (geometric_series_order_constructive if req.method == "constructive"
              else geometric_series_order_bruteforce)
        return {"k": req.k, "method": req.method, "d": fn(A, req.k)}

    @app.post("/tb/loops")
    def post_loops(req: LoopsRequest):
        try:
            A = MonodromyMatrix(req.matrix)
            g = GroupElement(req.element.v, req.element.z, A)
            dec = loop_decomposition(A, req.k, g)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        return {"k": dec.k, "m": 3 ** dec.k, "count": dec.count,
                "max_degree": dec.degrees[-1], "degrees": list(dec.degrees)}

    @app.post("/tb/power")
    def post_power(req: PowerRequest):
        try:
            A = MonodromyMatrix(req.matrix)
            g = GroupElement(req.element.v, req.element.z, A)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        h = power(g, req.i)
        return {"v": list(h.v), "z": h.z}

    return app


app = create_app()
