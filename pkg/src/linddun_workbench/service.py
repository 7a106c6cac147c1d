"""HTTP face of the workbench.

Thin by design: every route parses, calls the same replay core the CLI
uses, and serializes. Writes go through the project store, which appends
and fsyncs before the response leaves, so a successful status implies the
entry is durable and a failed one implies the log did not move.
"""

from __future__ import annotations

import os
from fractions import Fraction
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import ConflictError, NotFoundError, ParseError, WorkbenchError
from .model import MappingRecord, Stage, Threat, render_mapping_source
from .replay import ProjectState, gap_report
from .script import parse_script
from .store import ProjectHandle, ProjectStore, entry_to_json
from .suggest import suggest_embraces
from .trees import TreeCatalog, TreeNode

DEFAULT_PORT = 8787

_PLACEHOLDER = """<!doctype html>
<title>threat-model workbench</title>
<p>The workbench API is up. Build the UI bundle to serve it here;
until then the API lives under <code>/api</code>.</p>
"""


def threat_json(threat: Threat) -> dict:
    return {
        "id": str(threat.id),
        "label": threat.label.render(),
        "text": threat.label.text,
        "source": threat.source.render(),
        "properties": list(threat.profile.letters()),
    }


def mapping_json(record: MappingRecord) -> dict:
    return {
        "m_id": str(record.m_id),
        "final_id": str(record.final_id),
        "nodes": [str(n) for n in record.embraced_nodes],
        "representative": str(record.representative),
        "composed": record.composed,
        "source": render_mapping_source(record),
        "step5_extended": record.step5_extended,
    }


def _node_json(catalog: TreeCatalog, node: TreeNode) -> dict:
    return {
        "id": str(node.id),
        "label": node.label,
        "composes": node.composes,
        "composed": catalog.composed_label(node.id),
        "children": [_node_json(catalog, catalog.nodes[child]) for child in node.children],
    }


def trees_json(catalog: TreeCatalog) -> dict:
    return {
        "origin": catalog.origin,
        "properties": {
            letter: [
                _node_json(catalog, catalog.nodes[root]) for root in catalog.roots[letter]
            ]
            for letter in catalog.roots
        },
    }


def gap_json(state: ProjectState) -> dict:
    provisional, records = gap_report(state)
    return {
        "provisional": provisional,
        "records": [
            {
                "final_id": str(r.final_id),
                "original_label": r.original_label.render(),
                "generalized_label": r.generalized_label,
                "provenance": _prov(r.provenance),
                "confirmed": r.confirmed,
            }
            for r in records
        ],
    }


def _prov(expr) -> str:
    from .model import render_provenance

    return render_provenance(expr)


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def create_app(store: ProjectStore | None = None, ui_dir: str | Path | None = None) -> FastAPI:
    if store is None:
        store = ProjectStore(os.environ.get("TM_PROJECT_DIR") or "projects")
    app = FastAPI(title="threat-model workbench", docs_url=None, redoc_url=None)

    @app.exception_handler(ParseError)
    async def _parse_error(_request, exc: ParseError):
        return _error_response(400, exc.code, str(exc))

    @app.exception_handler(NotFoundError)
    async def _not_found(_request, exc: NotFoundError):
        return _error_response(404, exc.code, str(exc))

    @app.exception_handler(ConflictError)
    async def _conflict(_request, exc: ConflictError):
        return _error_response(409, exc.code, str(exc))

    @app.exception_handler(WorkbenchError)
    async def _workbench_error(_request, exc: WorkbenchError):
        return _error_response(422, exc.code, str(exc))

    def project_record(handle: ProjectHandle) -> dict:
        return {
            "id": handle.id,
            "name": handle.name,
            "created": handle.meta.get("created", ""),
            "log_length": len(handle.entries()),
        }

    @app.get("/api/projects")
    def list_projects():
        return {"projects": store.list()}

    @app.post("/api/projects", status_code=201)
    async def create_project(request: Request):
        body = await request.json()
        name = body.get("name") if isinstance(body, dict) else None
        if not isinstance(name, str) or not name.strip():
            return _error_response(400, "invalid-argument", "a project needs a non-empty name")
        handle = store.create(name)
        return project_record(handle)

    @app.get("/api/projects/{key}")
    def get_project(key: str):
        return project_record(store.get(key))

    @app.post("/api/projects/{key}/ops")
    async def post_ops(key: str, request: Request):
        handle = store.get(key)
        body = await request.json()
        text = body.get("statement") if isinstance(body, dict) else None
        if not isinstance(text, str) or not text.strip():
            return _error_response(400, "invalid-argument", "missing statement text")
        statements = parse_script(text)
        applied, state = handle.apply_statements(statements)
        rows = []
        for stmt in statements:
            rows.append(_affected_row(state, stmt))
        return {"applied": applied, "log_length": state.log_length, "rows": rows}

    def _affected_row(state: ProjectState, stmt) -> dict:
        from .script import AssignStmt, CarryStmt, DiscardStmt, MapStmt, ProfileStmt, SafetyStmt

        if isinstance(stmt, (AssignStmt, CarryStmt)):
            entry = state.finals.get(stmt.target)
            return {"kind": "final", **threat_json(entry.threat)} if entry else {}
        if isinstance(stmt, ProfileStmt):
            return {"kind": "preliminary", **threat_json(state.prelims[stmt.id].threat)}
        if isinstance(stmt, DiscardStmt):
            pool = state.prelims if stmt.id.prefix == "p" else state.finals
            return {"kind": "reserve", **threat_json(pool[stmt.id].threat)}
        if isinstance(stmt, MapStmt):
            return {"kind": "mapping", **mapping_json(state.mappings[stmt.final_id])}
        if isinstance(stmt, SafetyStmt):
            record = state.mappings.get(stmt.final_id)
            if record is not None:
                return {"kind": "mapping", **mapping_json(record)}
            return {"kind": "gap-confirmed", "final_id": str(stmt.final_id)}
        return {}

    @app.get("/api/projects/{key}/tables/{stage}")
    def get_table(key: str, stage: str):
        handle = store.get(key)
        state = handle.state()
        if stage not in ("P", "F", "M"):
            return _error_response(404, "not-found", f"no table stage {stage!r}")
        table = state.table(stage)
        if stage == "M":
            rows = [mapping_json(r) for r in table.rows]
        else:
            rows = [threat_json(r) for r in table.rows]
            if stage == "P":
                consumed = state.consumed_ids()
                for row, threat in zip(rows, table.rows):
                    row["consumed"] = threat.id in consumed
                    row["reserve"] = state.prelims[threat.id].threat.stage is Stage.RESERVE
        return {"stage": stage, "rows": rows}

    @app.get("/api/projects/{key}/suggestions")
    def get_suggestions(key: str, threshold: float | None = None, limit: int | None = None):
        handle = store.get(key)
        config = handle.config()
        value = config["suggest_threshold"] if threshold is None else threshold
        candidates = suggest_embraces(
            handle.state(),
            threshold=Fraction(value).limit_denominator(10**9),
            max_results=limit,
            protected=tuple(config["protected_terms"]),
        )
        return {
            "threshold": float(value),
            "candidates": [
                {
                    "ids": [str(i) for i in c.ids],
                    "score": float(c.score),
                    "score_exact": str(c.score),
                    "shared_tokens": list(c.shared_tokens),
                }
                for c in candidates
            ],
        }

    @app.get("/api/projects/{key}/gap-report")
    def get_gap_report(key: str):
        return gap_json(store.get(key).state())

    @app.get("/api/projects/{key}/log")
    def get_log(key: str, since: int = 0):
        if since < 0:
            return _error_response(422, "invalid-argument", "since must be at least 0")
        entries = store.get(key).entries()
        return {
            "log_length": len(entries),
            "entries": [entry_to_json(e) for e in entries if e.seq > since],
        }

    @app.post("/api/projects/{key}/import")
    async def post_import(key: str, request: Request, suffix: str = "", source_tag: str | None = None):
        handle = store.get(key)
        data = await request.body()
        imported, state = handle.import_catalog(data, suffix=suffix, source_tag=source_tag)
        return {"imported": imported, "log_length": state.log_length}

    @app.get("/api/projects/{key}/trees")
    def get_trees(key: str):
        catalog = store.get(key).trees()
        if catalog is None:
            return _error_response(404, "not-found", "no tree catalog attached to this project")
        return trees_json(catalog)

    @app.get("/api/projects/{key}/stats")
    def get_stats(key: str, suffix: str | None = None):
        from .replay import op_stats

        handle = store.get(key)
        stats = op_stats(handle.entries(), handle.trees(), suffix=suffix)
        return {
            "step2_total": stats.step2_total,
            "step3_total": stats.step3_total,
            "embrace_count": stats.embrace_count,
            "rename_count": stats.rename_count,
            "discard_count": stats.discard_count,
            "final_discard_count": stats.final_discard_count,
            "rendered": stats.render(),
        }

    resolved_ui = Path(ui_dir) if ui_dir else Path(os.environ.get("TM_UI_DIR") or "frontend/dist")
    if resolved_ui.is_dir():
        app.mount("/", StaticFiles(directory=str(resolved_ui), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def placeholder():
            return _PLACEHOLDER

    return app


def serve(store: ProjectStore | None = None, port: int | None = None, host: str = "127.0.0.1"):
    import uvicorn

    if port is None:
        env_port = os.environ.get("TM_PORT")
        port = int(env_port) if env_port else DEFAULT_PORT
    uvicorn.run(create_app(store), host=host, port=port)
