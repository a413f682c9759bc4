"""HTTP/JSON service over the engine.

Every handler is a thin adapter: parse the request, call one engine
operation, serialize its result through the canonical JSON dialect. All
errors leave as ``{"error": {"code", "message"}}`` with a matching status.
"""

from __future__ import annotations

import json
import logging
from datetime import datetime
from pathlib import Path

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import serialize
from .catalog import EntryFilter, PathRule
from .engine import Engine
from .errors import ElnError, InvalidArgument, TableError

log = logging.getLogger(__name__)

_STATUS_BY_CODE = {
    "not_found": 404,
    "no_reports": 404,
    "unknown_sample": 404,
    "duplicate_key": 409,
    "busy": 409,
    "invalid_argument": 400,
    "invalid_range": 400,
    "invalid_link": 400,
    "parse_failure": 400,
    "invalid_proof": 400,
    "config_error": 400,
    "unreadable_metadata": 400,
    "not_tabular": 422,
    "root_unreadable": 500,
    "read_failure": 500,
    "schema_version": 500,
    "backend_unavailable": 502,
}


def _json(payload, status_code: int = 200) -> Response:
    return Response(
        content=serialize.dumps_bytes(payload),
        status_code=status_code,
        media_type="application/json",
    )


def _error(code: str, message: str, status_code: int) -> Response:
    return _json({"error": {"code": code, "message": message}}, status_code)


def _status_for(exc: ElnError) -> int:
    if isinstance(exc, TableError):
        return 422
    return _STATUS_BY_CODE.get(exc.code, 500)


async def _body(request: Request) -> dict:
    raw = await request.body()
    if not raw:
        return {}
    try:
        data = json.loads(raw)
    except ValueError:
        raise InvalidArgument("request body must be valid JSON") from None
    if not isinstance(data, dict):
        raise InvalidArgument("request body must be a JSON object")
    return data


def _parse_dt(value: str, name: str) -> datetime:
    try:
        return datetime.fromisoformat(value)
    except (TypeError, ValueError):
        raise InvalidArgument(f"{name} must be an ISO-8601 timestamp") from None


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="eln", docs_url=None, redoc_url=None, openapi_url=None)

    cors_origin = engine.config.api.cors_origin
    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ElnError)
    async def _eln_error(_request: Request, exc: ElnError) -> Response:
        return _error(exc.code, str(exc), _status_for(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError) -> Response:
        return _error("invalid_argument", str(exc.errors()[:1]), 400)

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(_request: Request, exc: StarletteHTTPException) -> Response:
        code = "not_found" if exc.status_code == 404 else "http_error"
        return _error(code, str(exc.detail), exc.status_code)

    @app.get("/api/health")
    async def health() -> Response:
        return _json({"status": "ok"})

    # -- samples -------------------------------------------------------

    @app.get("/api/samples")
    async def list_samples() -> Response:
        return _json([serialize.sample_to_dict(s) for s in engine.catalog.list_samples()])

    @app.post("/api/samples")
    async def create_sample(request: Request) -> Response:
        data = await _body(request)
        if "name" not in data:
            raise InvalidArgument("sample needs a 'name'")
        properties = data.get("properties") or {}
        if not isinstance(properties, dict):
            raise InvalidArgument("'properties' must be an object")
        sample = engine.add_sample(
            str(data["name"]), kind=str(data.get("kind", "")), properties=properties
        )
        return _json(serialize.sample_to_dict(sample), 201)

    # -- rules ---------------------------------------------------------

    @app.get("/api/rules")
    async def list_rules() -> Response:
        return _json([serialize.rule_to_dict(r) for r in engine.catalog.list_path_rules()])

    @app.post("/api/rules")
    async def create_rule(request: Request) -> Response:
        data = await _body(request)
        for field in ("device_code", "tree_kind", "root_subpath", "allowed_extensions"):
            if field not in data:
                raise InvalidArgument(f"rule needs '{field}'")
        extensions = data["allowed_extensions"]
        if not isinstance(extensions, list):
            raise InvalidArgument("'allowed_extensions' must be a list")
        rules = engine.add_rule(
            PathRule(
                device_code=str(data["device_code"]),
                tree_kind=str(data["tree_kind"]),
                root_subpath=str(data["root_subpath"]),
                allowed_extensions=tuple(str(e) for e in extensions),
                instrument_variant=str(data.get("instrument_variant", "")),
            )
        )
        return _json([serialize.rule_to_dict(r) for r in rules], 201)

    # -- entries -------------------------------------------------------

    @app.get("/api/entries")
    async def list_entries(
        sample: str | None = None,
        device: str | None = None,
        kind: str | None = None,
        from_: str | None = Query(default=None, alias="from"),
        to: str | None = None,
        q: str | None = None,
    ) -> Response:
        time_range = None
        if from_ is not None or to is not None:
            start = _parse_dt(from_, "from") if from_ is not None else datetime.min
            end = _parse_dt(to, "to") if to is not None else datetime.max
            time_range = (start, end)
        entries = engine.query(
            EntryFilter(sample=sample, device=device, kind=kind, text=q, time_range=time_range)
        )
        return _json([serialize.entry_to_dict(e) for e in entries])

    @app.get("/api/entries/{entry_id}")
    async def get_entry(entry_id: int) -> Response:
        return _json(serialize.entry_to_dict(engine.catalog.get_entry(entry_id)))

    @app.delete("/api/entries/{entry_id}")
    async def delete_entry(entry_id: int) -> Response:
        engine.catalog.delete_entry(entry_id)
        return _json({"deleted": entry_id})

    @app.get("/api/entries/{entry_id}/plot")
    async def entry_plot(entry_id: int) -> Response:
        return _json(engine.plot(entry_id))

    @app.get("/api/entries/{entry_id}/links")
    async def entry_links(entry_id: int) -> Response:
        engine.catalog.get_entry(entry_id)  # 404 for unknown ids
        return _json([serialize.link_to_dict(l) for l in engine.catalog.links_for_entry(entry_id)])

    # -- links / notes ---------------------------------------------------

    @app.post("/api/links")
    async def create_link(request: Request) -> Response:
        data = await _body(request)
        for field in ("from_id", "to_id", "link_type"):
            if field not in data:
                raise InvalidArgument(f"link needs '{field}'")
        if not isinstance(data["from_id"], int) or not isinstance(data["to_id"], int):
            raise InvalidArgument("'from_id' and 'to_id' must be integers")
        link = engine.add_manual_link(data["from_id"], data["to_id"], str(data["link_type"]))
        return _json(serialize.link_to_dict(link), 201)

    @app.post("/api/notes")
    async def create_note(request: Request) -> Response:
        data = await _body(request)
        for field in ("sample", "body"):
            if field not in data:
                raise InvalidArgument(f"note needs '{field}'")
        written_at = None
        if data.get("written_at") is not None:
            written_at = _parse_dt(str(data["written_at"]), "written_at")
        note = engine.add_note(str(data["sample"]), str(data["body"]), written_at=written_at)
        return _json(serialize.note_to_dict(note), 201)

    @app.get("/api/samples/{name}/history")
    async def sample_history(name: str) -> Response:
        return _json([serialize.history_item_to_dict(i) for i in engine.history(name)])

    # -- ingest / reports -------------------------------------------------

    @app.post("/api/ingest")
    async def run_ingest(request: Request) -> Response:
        data = await _body(request)
        now = _parse_dt(str(data["now"]), "now") if data.get("now") is not None else None
        recency = data.get("recency_enabled")
        if recency is not None and not isinstance(recency, bool):
            raise InvalidArgument("'recency_enabled' must be a boolean")
        return _json(engine.ingest_run(now=now, recency_enabled=recency))

    @app.get("/api/reports/latest")
    async def latest_report() -> Response:
        return _json(engine.latest_report())

    # -- stamps -----------------------------------------------------------

    @app.post("/api/stamps/run")
    async def stamp_run() -> Response:
        batch = engine.stamp_run()
        if batch is None:
            return _json({"status": "nothing_to_stamp"})
        return _json(serialize.batch_to_dict(batch))

    @app.get("/api/stamps/{digest_hex}")
    async def stamp_lookup(digest_hex: str) -> Response:
        payload = engine.stamp_lookup(digest_hex)
        if payload is None:
            return _error("not_found", "digest was never stamped", 404)
        return _json(payload)

    ui_dir = engine.config.api.ui_dir
    if ui_dir:
        ui_path = Path(ui_dir)
        if ui_path.is_dir():
            from fastapi.staticfiles import StaticFiles

            app.mount("/", StaticFiles(directory=str(ui_path), html=True), name="ui")
        else:
            log.warning("ui_dir %s does not exist; serving API only", ui_dir)

    return app


def serve(engine: Engine, bind: str | None = None, port: int | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(
        create_app(engine),
        host=bind if bind is not None else engine.config.api.bind,
        port=port if port is not None else engine.config.api.port,
        log_level="info",
    )
