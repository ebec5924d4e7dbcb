"""Operator entry points: serve, validate, replay."""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from pathlib import Path

from . import report
from .catalog import CatalogParseError, CatalogValidationError, load_catalog
from .journal import JournalCorrupt, load_events
from .session import SessionEngine, SessionError

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2


def counter_token_factory():
    counter = itertools.count(1)
    return lambda: f"ballot-{next(counter):04d}"


def cmd_validate(args) -> int:
    path = Path(args.catalog)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return EXIT_IO
    try:
        load_catalog(path)
    except CatalogValidationError as exc:
        print("invalid catalog:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  {violation}", file=sys.stderr)
        return EXIT_DOMAIN
    except CatalogParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{path}: valid catalog")
    return EXIT_OK


def run_transcript(commands: list[dict], token_factory=None) -> SessionEngine:
    """Run a credential-free command script through a fresh engine.

    The first command must create the session; timestamps come from the
    transcript so identical inputs yield identical journals and reports.
    """
    if not commands:
        raise SessionError("no session-created command")
    first = commands[0]
    if first.get("kind") not in ("create_session", "session.created"):
        raise SessionError("no session-created command (transcript must start with create_session)")
    payload = first.get("payload") or {}
    engine = SessionEngine.create(
        payload.get("catalog") or payload.get("catalog_document"),
        payload.get("roster") or [],
        payload.get("config"),
        session_id=payload.get("session_id", "replay"),
        ts=first.get("ts", ""),
        token_factory=token_factory or counter_token_factory(),
    )
    for i, cmd in enumerate(commands[1:], start=2):
        try:
            engine.handle(
                actor=cmd["actor"],
                kind=cmd["kind"],
                payload=cmd.get("payload") or {},
                ts=cmd.get("ts", ""),
                idempotency_key=cmd.get("idempotency_key"),
            )
        except SessionError as exc:
            raise SessionError(f"command {i} ({cmd.get('kind')}): {exc}") from exc
    return engine


def _load_transcript(path: Path):
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise SessionError("no session-created command (empty transcript)")
    if path.suffix == ".jsonl" or text.lstrip().startswith('{"seq"'):
        return ("events", load_events(path))
    doc = json.loads(text)
    if isinstance(doc, dict) and "events" in doc:
        return ("events", doc["events"])
    if isinstance(doc, dict) and "commands" in doc:
        return ("commands", doc["commands"])
    if isinstance(doc, list):
        return ("commands", doc)
    raise SessionError("transcript must hold a 'commands' or 'events' list")


def cmd_replay(args) -> int:
    path = Path(args.transcript)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return EXIT_IO
    out_dir = Path(args.out)
    try:
        shape, records = _load_transcript(path)
        if shape == "events":
            engine = SessionEngine.replay(records)
        else:
            engine = run_transcript(records)
    except (SessionError, JournalCorrupt, json.JSONDecodeError, CatalogValidationError) as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return EXIT_DOMAIN

    out_dir.mkdir(parents=True, exist_ok=True)
    draft = engine.phase != "Closed"
    try:
        findings = report.build_findings(engine, draft=draft)
    except report.ReportError as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    vote_table = report.export_vote_table(engine)
    practice_tables = report.export_practice_tables(engine)

    (out_dir / "findings.json").write_text(report.to_json(findings), encoding="utf-8")
    (out_dir / "findings.md").write_text(report.findings_markdown(findings), encoding="utf-8")
    (out_dir / "vote_table.json").write_text(report.to_json(vote_table), encoding="utf-8")
    (out_dir / "vote_table.md").write_text(report.vote_table_markdown(vote_table), encoding="utf-8")
    (out_dir / "practice_tables.json").write_text(
        report.to_json(practice_tables), encoding="utf-8"
    )
    (out_dir / "practice_tables.md").write_text(
        report.practice_tables_markdown(practice_tables), encoding="utf-8"
    )
    print(f"wrote findings and exports to {out_dir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionStore, create_app

    data_dir = Path(args.data)
    try:
        data_dir.mkdir(parents=True, exist_ok=True)
        probe = data_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: storage directory not writable: {exc}", file=sys.stderr)
        return EXIT_IO
    host, _, port = args.listen.rpartition(":")
    app = create_app(SessionStore(data_dir))
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    except (OSError, ValueError) as exc:
        print(f"error: cannot listen on {args.listen}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storypoker",
        description="Facilitation service for card-vote process assessments.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument(
        "--listen",
        default=os.environ.get("STORYPOKER_LISTEN", "127.0.0.1:8400"),
        help="host:port to listen on (env STORYPOKER_LISTEN)",
    )
    serve.add_argument(
        "--data",
        default=os.environ.get("STORYPOKER_DATA", "./data"),
        help="journal storage directory (env STORYPOKER_DATA)",
    )
    serve.set_defaults(func=cmd_serve)

    validate = sub.add_parser("validate", help="validate a catalog file")
    validate.add_argument("catalog")
    validate.set_defaults(func=cmd_validate)

    replay = sub.add_parser("replay", help="replay a transcript and write reports")
    replay.add_argument("transcript")
    replay.add_argument("--out", required=True, help="output directory")
    replay.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
