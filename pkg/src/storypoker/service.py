"""HTTP boundary: session creation, commands, live event streams, exports."""

from __future__ import annotations

import asyncio
import json
import secrets
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import StreamingResponse

from . import report
from .catalog import CatalogParseError, CatalogValidationError
from .journal import FileJournal, load_events, project_event, project_stream
from .session import GuardFailure, IllegalTransition, SessionEngine, SessionError, Unauthorized


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class LiveSession:
    """One session's engine plus its connection fan-out and write lock."""

    def __init__(self, engine: SessionEngine, credentials: dict[str, dict]):
        self.engine = engine
        self.credentials = credentials  # token -> {participant_id, role_tag}
        self.lock = asyncio.Lock()
        self.subscribers: list[tuple[str, asyncio.Queue]] = []  # (role, queue)

    def broadcast(self, events: list[dict]) -> None:
        for event in events:
            for role, queue in list(self.subscribers):
                projected = project_event(event, role)
                if projected is not None:
                    queue.put_nowait(projected)


class SessionStore:
    """Registry of live sessions backed by one journal file per session."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, LiveSession] = {}

    def _journal_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.journal.jsonl"

    def _credentials_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.credentials.json"

    def create(self, catalog_doc, roster: list[dict], config: dict | None) -> tuple[str, list[dict]]:
        session_id = secrets.token_hex(8)
        sink = FileJournal(self._journal_path(session_id))
        engine = SessionEngine.create(
            catalog_doc, roster, config, session_id=session_id, ts=_now(), sink=sink
        )
        credentials = {}
        issued = []
        for p in engine.participants:
            token = secrets.token_urlsafe(24)
            credentials[token] = {"participant_id": p.participant_id, "role_tag": p.role_tag}
            issued.append(
                {
                    "participant_token": token,
                    "participant_id": p.participant_id,
                    "display_name": p.display_name,
                    "role_tag": p.role_tag,
                }
            )
        self._credentials_path(session_id).write_text(
            json.dumps(credentials), encoding="utf-8"
        )
        self.sessions[session_id] = LiveSession(engine, credentials)
        return session_id, issued

    def get(self, session_id: str) -> LiveSession:
        if session_id in self.sessions:
            return self.sessions[session_id]
        path = self._journal_path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        events = load_events(path)
        engine = SessionEngine.replay(events, sink=FileJournal(path))
        credentials = json.loads(self._credentials_path(session_id).read_text(encoding="utf-8"))
        live = LiveSession(engine, credentials)
        self.sessions[session_id] = live
        return live


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="storypoker")
    app.state.store = store

    def _session_or_404(session_id: str) -> LiveSession:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    def _identity(live: LiveSession, credential: str) -> dict:
        entry = live.credentials.get(credential or "")
        if entry is None:
            raise HTTPException(status_code=401, detail="invalid credential")
        return entry

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        try:
            session_id, credentials = store.create(
                body.get("catalog"), body.get("roster") or [], body.get("config")
            )
        except CatalogValidationError as exc:
            raise HTTPException(status_code=400, detail={"violations": exc.violations})
        except (CatalogParseError, SessionError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"session_id": session_id, "credentials": credentials}

    @app.post("/sessions/{session_id}/commands")
    async def command(session_id: str, body: dict):
        live = _session_or_404(session_id)
        identity = _identity(live, body.get("credential"))
        cmd = body.get("command") or {}
        kind = cmd.get("kind")
        if not kind:
            raise HTTPException(status_code=400, detail="command.kind is required")
        async with live.lock:
            before = len(live.engine.events)
            try:
                result = live.engine.handle(
                    actor=identity["participant_id"],
                    kind=kind,
                    payload=cmd.get("payload") or {},
                    ts=_now(),
                    idempotency_key=body.get("idempotency_key"),
                )
            except Unauthorized as exc:
                raise HTTPException(status_code=403, detail=str(exc))
            except IllegalTransition as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except GuardFailure as exc:
                raise HTTPException(status_code=409, detail={"guard": exc.guard, "message": str(exc)})
            except SessionError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            new_events = live.engine.events[before:]
            live.broadcast(new_events)
        return {"result": result}

    @app.get("/sessions/{session_id}/status")
    async def status(session_id: str, credential: str = Query("")):
        live = _session_or_404(session_id)
        identity = _identity(live, credential)
        engine = live.engine
        return {
            "cursor": engine.cursor(),
            "round_status": engine.round_status(identity["role_tag"])
            if engine.current_story_id
            else None,
        }

    @app.get("/sessions/{session_id}/events")
    async def events(
        session_id: str,
        request: Request,
        credential: str = Query(""),
        from_seq: int = Query(1, alias="from"),
    ):
        live = _session_or_404(session_id)
        identity = _identity(live, credential)
        role = identity["role_tag"]

        queue: asyncio.Queue = asyncio.Queue()
        async with live.lock:
            backlog = list(project_stream(live.engine.events, role, from_seq))
            live.subscribers.append((role, queue))

        async def stream():
            try:
                for event in backlog:
                    yield _sse(event)
                while True:
                    if await request.is_disconnected():
                        break
                    try:
                        event = await asyncio.wait_for(queue.get(), timeout=15.0)
                    except asyncio.TimeoutError:
                        yield ": keepalive\n\n"
                        continue
                    yield _sse(event)
            finally:
                try:
                    live.subscribers.remove((role, queue))
                except ValueError:
                    pass

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/export/{artifact}")
    async def export(
        session_id: str,
        artifact: str,
        credential: str = Query(""),
        format: str = Query("json"),
    ):
        live = _session_or_404(session_id)
        identity = _identity(live, credential)
        if identity["role_tag"] != "assessor":
            raise HTTPException(status_code=403, detail="exports require the assessor credential")
        engine = live.engine
        draft = engine.phase != "Closed"
        try:
            if artifact == "findings":
                doc = report.build_findings(engine, draft=draft)
                payload = doc if format == "json" else report.findings_markdown(doc)
            elif artifact == "vote_table":
                table = report.export_vote_table(engine)
                payload = table if format == "json" else report.vote_table_markdown(table)
            elif artifact == "practice_tables":
                tables = report.export_practice_tables(engine)
                payload = tables if format == "json" else report.practice_tables_markdown(tables)
            else:
                raise HTTPException(status_code=404, detail=f"unknown artifact {artifact!r}")
        except report.ReportError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        if format == "json":
            return {"artifact": artifact, "draft": draft, "document": payload}
        return StreamingResponse(iter([payload]), media_type="text/markdown")

    return app


def _sse(event: dict) -> str:
    return f"id: {event['seq']}\ndata: {json.dumps(event, ensure_ascii=False)}\n\n"
