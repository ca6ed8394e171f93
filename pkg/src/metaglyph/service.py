"""Session-oriented HTTP API for the mixed-initiative studio workflow.

Upload a spreadsheet, generate ranked scenes, pin mappings, regenerate,
and export.  Sessions live in an embedded store (in-memory by default,
sqlite on disk when a path is given) with a 24 h TTL; mutations are
serialized per session by a revision compare-and-set.
"""

from __future__ import annotations

import base64
import io
import json
import os
import sqlite3
import threading
import time
import uuid
import zipfile
from dataclasses import replace

from fastapi import FastAPI, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import dataset, metaphor, pipeline, semantics
from .config import EngineConfig
from .errors import (
    BadRequest,
    MetaglyphError,
    NoCandidates,
    StaleRevision,
    UnknownResult,
    UnknownSession,
    UnsatisfiablePin,
)
from .metaphor import ImageSource, LocalCorpus, MetaphorCandidate
from .search import MappingTarget, TargetKind

_ERROR_STATUS = {
    "bad_request": 400,
    "unknown_session": 404,
    "unknown_result": 404,
    "no_candidates": 404,
    "stale_revision": 409,
    "unsatisfiable_pin": 422,
    "empty_file": 400,
    "ragged_rows": 400,
    "zero_rows": 400,
    "all_empty": 400,
    "svg_parse_error": 400,
    "space_too_large": 400,
}


# --------------------------------------------------------------------------
# session stores


class MemoryStore:
    def __init__(self, ttl_s: int):
        self.ttl_s = ttl_s
        self._data: dict[str, tuple[float, str]] = {}
        self._lock = threading.Lock()

    def get(self, sid: str) -> dict | None:
        with self._lock:
            row = self._data.get(sid)
            if row is None:
                return None
            created, payload = row
            if time.time() - created > self.ttl_s:
                del self._data[sid]
                return None
            return json.loads(payload)

    def put(self, sid: str, payload: dict) -> None:
        with self._lock:
            created = self._data.get(sid, (time.time(), ""))[0]
            self._data[sid] = (created, json.dumps(payload))


class SqliteStore:
    def __init__(self, path: str, ttl_s: int):
        self.path = path
        self.ttl_s = ttl_s
        self._lock = threading.Lock()
        with self._connect() as conn:
            conn.execute(
                "CREATE TABLE IF NOT EXISTS sessions "
                "(id TEXT PRIMARY KEY, created REAL, payload TEXT)")

    def _connect(self):
        return sqlite3.connect(self.path)

    def get(self, sid: str) -> dict | None:
        with self._lock, self._connect() as conn:
            row = conn.execute(
                "SELECT created, payload FROM sessions WHERE id = ?",
                (sid,)).fetchone()
            if row is None:
                return None
            created, payload = row
            if time.time() - created > self.ttl_s:
                conn.execute("DELETE FROM sessions WHERE id = ?", (sid,))
                return None
            return json.loads(payload)

    def put(self, sid: str, payload: dict) -> None:
        with self._lock, self._connect() as conn:
            conn.execute(
                "INSERT INTO sessions (id, created, payload) VALUES (?, ?, ?) "
                "ON CONFLICT(id) DO UPDATE SET payload = excluded.payload",
                (sid, time.time(), json.dumps(payload)))


# --------------------------------------------------------------------------
# request bodies


class TargetBody(BaseModel):
    kind: str   # element | axis | none
    index: int = 0


class PinEdit(BaseModel):
    dimension: str
    target: TargetBody | None = None
    unpin: bool = False


class MappingsBody(BaseModel):
    revision: int
    edits: list[PinEdit]


class GroupSpec(BaseModel):
    name: str
    members: list[str]


class GroupsBody(BaseModel):
    revision: int
    groups: list[GroupSpec]


class GenerateBody(BaseModel):
    revision: int
    candidates: int | None = None
    iterations: int | None = None
    per_candidate_budget_ms: int | None = None
    shuffle: bool = False


# --------------------------------------------------------------------------
# session (de)serialization helpers


def _candidate_to_json(c: MetaphorCandidate) -> dict:
    return {"id": c.id, "source": c.source.value,
            "svg_b64": base64.b64encode(c.svg_bytes).decode(),
            "keywords": list(c.keywords)}


def _candidate_from_json(d: dict) -> MetaphorCandidate:
    return MetaphorCandidate(
        id=d["id"], source=ImageSource(d["source"]),
        svg_bytes=base64.b64decode(d["svg_b64"]),
        keywords=tuple(d.get("keywords", ())))


def _result_to_json(r: pipeline.RankedResult) -> dict:
    return {
        "result_id": r.result_id,
        "candidate_id": r.candidate_id,
        "candidate_source": r.candidate_source,
        "reward": r.reward,
        "reward_breakdown": r.reward_json,
        "solution": r.solution_json,
        "svg": r.svg.decode("utf-8"),
        "legend": r.legend.decode("utf-8"),
        "elements": r.elements_json,
        "element_svgs": [b.decode("utf-8") for b in r.element_svgs],
        "metaphor_svg": r.metaphor_svg.decode("utf-8"),
        "alternatives": r.alternatives_json,
    }


def _result_summary(r: dict) -> dict:
    return {k: r[k] for k in ("result_id", "candidate_id", "candidate_source",
                              "reward", "reward_breakdown", "solution", "svg",
                              "legend", "elements", "element_svgs",
                              "metaphor_svg")}


def _pins_from_session(session: dict) -> dict[str, MappingTarget]:
    return {sid: MappingTarget.from_json(t)
            for sid, t in session.get("pins", {}).items()}


def _session_summary(session: dict) -> dict:
    ds = session["dataset"]
    return {
        "session_id": session["id"],
        "revision": session["revision"],
        "seed": session["seed"],
        "topic": ds["topic"],
        "rows": ds["rows"],
        "dimensions": [
            {"id": d["id"], "name": d["name"], "data_type": d["data_type"],
             "importance": d.get("importance")}
            for d in ds["dimensions"]
        ],
        "groups": [
            {"id": g["id"], "name": g["name"], "members": g["members"]}
            for g in ds.get("groups", [])
        ],
        "proposed_groups": session.get("proposed_groups", []),
        "pins": session.get("pins", {}),
        "result_count": len(session.get("results", [])),
    }


# --------------------------------------------------------------------------
# app factory


def create_app(config: EngineConfig | None = None, store_path: str | None = None,
               fetcher=None, embedding_backend=None,
               relevance_backend=None) -> FastAPI:
    config = config or EngineConfig()
    store = (SqliteStore(store_path, config.service.session_ttl_s)
             if store_path else MemoryStore(config.service.session_ttl_s))
    backend = embedding_backend or semantics.LexicalBackend()

    app = FastAPI(title="metaglyph", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.service.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(MetaglyphError)
    async def handle_engine_error(request: Request, exc: MetaglyphError):
        status = _ERROR_STATUS.get(exc.code, 500)
        return JSONResponse(status_code=status, content={
            "code": exc.code, "message": str(exc), "detail": exc.detail})

    def load_session(sid: str) -> dict:
        session = store.get(sid)
        if session is None:
            raise UnknownSession(f"session {sid} does not exist or expired")
        return session

    def check_revision(session: dict, revision: int) -> None:
        if revision != session["revision"]:
            raise StaleRevision(
                f"revision {revision} is stale, current is {session['revision']}",
                detail={"current": session["revision"]})

    def current_dataset(session: dict) -> dataset.Dataset:
        return dataset.from_json_dict(session["dataset"])

    def result_of(session: dict, rid: str) -> dict:
        for r in session.get("results", []):
            if r["result_id"] == rid:
                return r
        raise UnknownResult(f"result {rid} not found")

    @app.post("/sessions", status_code=201)
    async def create_session(file: UploadFile):
        data = await file.read()
        ds = dataset.load_spreadsheet(data, file.filename or "upload.csv", config)
        proposals = dataset.propose_groups(
            ds, config.grouping.similarity_threshold, backend=backend)
        seed = config.seed
        if seed is None:
            seed = int.from_bytes(os.urandom(4), "big")
        session = {
            "id": uuid.uuid4().hex,
            "revision": 0,
            "seed": seed,
            "dataset": dataset.to_json_dict(ds),
            "proposed_groups": [
                {"id": g.id, "name": g.name, "members": list(g.member_dimension_ids)}
                for g in proposals
            ],
            "pins": {},
            "candidates": [],
            "results": [],
            "diagnostics": [],
        }
        store.put(session["id"], session)
        return _session_summary(session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _session_summary(load_session(sid))

    @app.post("/sessions/{sid}/groups")
    def set_groups(sid: str, body: GroupsBody):
        session = load_session(sid)
        check_revision(session, body.revision)
        ds = current_dataset(session)
        groups = tuple(
            dataset.DataGroup(id=f"g{i}", name=g.name,
                              member_dimension_ids=tuple(g.members))
            for i, g in enumerate(body.groups)
        )
        try:
            ds = dataset.with_groups(replace(ds, groups=()), groups)
        except AssertionError as exc:
            raise UnsatisfiablePin(f"invalid grouping: {exc}") from exc
        session["dataset"] = dataset.to_json_dict(ds)
        # grouping changes the mapping space; existing results and pins on
        # grouped dimensions are stale
        grouped = {m for g in groups for m in g.member_dimension_ids}
        session["pins"] = {k: v for k, v in session["pins"].items()
                           if k not in grouped and not k.startswith("g")}
        session["results"] = []
        session["revision"] += 1
        store.put(sid, session)
        return _session_summary(session)

    def run_generation(session: dict, body: GenerateBody | None) -> None:
        ds = current_dataset(session)
        limit = (body.candidates if body and body.candidates
                 else config.service.candidates_per_generate)
        if not session["candidates"]:
            corpus = LocalCorpus(config.corpus_dir) if config.corpus_dir else None
            remote = fetcher
            if remote is None and config.image_api_url:
                remote = metaphor.CachedFetcher(
                    metaphor.HttpImageFetcher(
                        config.image_api_url,
                        api_key=os.environ.get(config.image_api_key_env)),
                    config.cache_dir or ".metaglyph-cache")
            found = metaphor.search_images(ds.topic, limit=limit,
                                           corpus=corpus, fetcher=remote)
            if not found:
                raise NoCandidates(
                    f"no candidate images for topic {ds.topic!r}")
            session["candidates"] = [_candidate_to_json(c) for c in found]
        candidates = [_candidate_from_json(c) for c in session["candidates"]]

        engine_config = config
        if body and (body.iterations or body.per_candidate_budget_ms):
            import dataclasses as dc

            search_cfg = config.search
            if body.iterations:
                search_cfg = dc.replace(search_cfg, iterations=body.iterations)
            if body.per_candidate_budget_ms:
                search_cfg = dc.replace(search_cfg,
                                        time_budget_ms=body.per_candidate_budget_ms)
            engine_config = dc.replace(config, search=search_cfg)
        if body and body.shuffle:
            session["seed"] = (session["seed"] + 1) & 0xFFFFFFFF
        report = pipeline.generate(
            ds, candidates, config=engine_config, seed=session["seed"],
            pins=_pins_from_session(session),
            embedding_backend=backend, relevance_backend=relevance_backend,
            total_budget_ms=config.service.total_budget_ms)
        session["results"] = [_result_to_json(r) for r in report.results]
        session["diagnostics"] = [c.to_json() for c in report.candidates]

    @app.post("/sessions/{sid}/generate")
    def generate(sid: str, body: GenerateBody):
        session = load_session(sid)
        check_revision(session, body.revision)
        run_generation(session, body)
        session["revision"] += 1
        store.put(sid, session)
        return {
            "session_id": sid,
            "revision": session["revision"],
            "results": [_result_summary(r) for r in session["results"]],
            "diagnostics": session["diagnostics"],
        }

    @app.get("/sessions/{sid}/results")
    def list_results(sid: str):
        session = load_session(sid)
        return {
            "session_id": sid,
            "revision": session["revision"],
            "results": [_result_summary(r) for r in session["results"]],
            "diagnostics": session.get("diagnostics", []),
        }

    @app.get("/sessions/{sid}/results/{rid}")
    def result_detail(sid: str, rid: str):
        session = load_session(sid)
        return result_of(session, rid)

    @app.patch("/sessions/{sid}/mappings")
    def edit_mappings(sid: str, body: MappingsBody):
        session = load_session(sid)
        check_revision(session, body.revision)
        ds = current_dataset(session)
        pins = dict(session["pins"])
        element_indices: set[int] = set()
        for r in session.get("results", []):
            element_indices.update(e["index"] for e in r.get("elements", []))
        for edit in body.edits:
            if edit.unpin:
                pins.pop(edit.dimension, None)
                continue
            if edit.target is None:
                raise UnsatisfiablePin(
                    f"edit for {edit.dimension} needs a target or unpin")
            target = MappingTarget.from_json(edit.target.model_dump())
            if (target.kind is TargetKind.ELEMENT and session.get("results")
                    and element_indices
                    and target.index not in element_indices):
                raise UnsatisfiablePin(
                    f"element {target.index} does not exist in current results")
            pins[edit.dimension] = target.to_json()
        pipeline.validate_pins(ds, {k: MappingTarget.from_json(v)
                                    for k, v in pins.items()})
        session["pins"] = pins
        run_generation(session, None)
        session["revision"] += 1
        store.put(sid, session)
        return {
            "session_id": sid,
            "revision": session["revision"],
            "pins": session["pins"],
            "results": [_result_summary(r) for r in session["results"]],
            "diagnostics": session["diagnostics"],
        }

    @app.get("/sessions/{sid}/results/{rid}/export")
    def export(sid: str, rid: str, format: str = "svg"):
        session = load_session(sid)
        result = result_of(session, rid)
        if format == "svg":
            return Response(content=result["svg"].encode("utf-8"),
                            media_type="image/svg+xml")
        if format != "bundle":
            raise BadRequest(f"unknown export format {format!r}")
        buffer = io.BytesIO()
        stamp = (1980, 1, 1, 0, 0, 0)  # fixed timestamps keep bundles byte-stable
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_STORED) as zf:
            def add(name: str, data: bytes):
                info = zipfile.ZipInfo(name, date_time=stamp)
                zf.writestr(info, data)

            add("scene.svg", result["svg"].encode("utf-8"))
            add("legend.svg", result["legend"].encode("utf-8"))
            add("metaphor.svg", result["metaphor_svg"].encode("utf-8"))
            add("mapping.json", json.dumps(result["solution"], indent=2,
                                           sort_keys=True).encode("utf-8"))
            for i, svg in enumerate(result["element_svgs"]):
                add(f"elements/element-{i}.svg", svg.encode("utf-8"))
        return Response(content=buffer.getvalue(), media_type="application/zip")

    @app.get("/sessions/{sid}/debug")
    def debug(sid: str):
        session = load_session(sid)
        return {"diagnostics": session.get("diagnostics", []),
                "pins": session.get("pins", {}),
                "seed": session["seed"]}

    return app
