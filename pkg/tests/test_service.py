import json
import socket
import threading
import time

import httpx
import pytest
import uvicorn
from fastapi.testclient import TestClient

from storypoker.service import SessionStore, create_app

from .conftest import mini_catalog_doc

ROSTER = [
    {"participant_id": "boss", "display_name": "Assessor", "role_tag": "assessor"},
    {"participant_id": "p1", "display_name": "P1", "role_tag": "practitioner"},
    {"participant_id": "p2", "display_name": "P2", "role_tag": "practitioner"},
]


@pytest.fixture
def client(tmp_path):
    store = SessionStore(tmp_path / "data")
    with TestClient(create_app(store)) as c:
        c.store = store
        yield c


def create_session(client, catalog=None, roster=None):
    resp = client.post(
        "/sessions", json={"catalog": catalog or mini_catalog_doc(), "roster": roster or ROSTER}
    )
    assert resp.status_code == 201, resp.text
    body = resp.json()
    creds = {c["participant_id"]: c["participant_token"] for c in body["credentials"]}
    return body["session_id"], creds


def send(client, session_id, creds, actor, kind, payload=None, idempotency_key=None):
    body = {"credential": creds[actor], "command": {"kind": kind, "payload": payload or {}}}
    if idempotency_key:
        body["idempotency_key"] = idempotency_key
    return client.post(f"/sessions/{session_id}/commands", json=body)


def ok(resp):
    assert resp.status_code == 200, resp.text
    return resp.json()["result"]


def test_healthz(client):
    assert client.get("/healthz").json() == {"status": "ok"}


def test_create_session_validation_errors(client):
    resp = client.post("/sessions", json={"catalog": {"title": "x"}, "roster": ROSTER})
    assert resp.status_code == 400
    assert any("process_areas" in v for v in resp.json()["detail"]["violations"])

    resp = client.post("/sessions", json={"catalog": mini_catalog_doc(), "roster": []})
    assert resp.status_code == 400
    assert "assessor" in resp.json()["detail"]


def test_unknown_session_and_bad_credential(client):
    assert client.get("/sessions/nope/status", params={"credential": "x"}).status_code == 404
    session_id, creds = create_session(client)
    resp = client.get(f"/sessions/{session_id}/status", params={"credential": "wrong"})
    assert resp.status_code == 401


def test_command_flow_and_error_mapping(client):
    session_id, creds = create_session(client)

    # practitioner may not drive the state machine
    resp = send(client, session_id, creds, "p1", "begin_area")
    assert resp.status_code == 403

    ok(send(client, session_id, creds, "boss", "begin_area"))
    ok(send(client, session_id, creds, "boss", "present_story"))

    # illegal transition maps to 409
    resp = send(client, session_id, creds, "boss", "reveal")
    assert resp.status_code == 409

    ok(send(client, session_id, creds, "boss", "open_clarification"))
    ok(send(client, session_id, creds, "boss", "close_clarification"))
    ok(send(client, session_id, creds, "p1", "cast_vote", {"card": "Always"}))

    # guard failure maps to 409 with the guard name
    resp = send(client, session_id, creds, "boss", "reveal")
    assert resp.status_code == 409
    assert resp.json()["detail"]["guard"] == "all_votes_cast"

    # missing kind maps to 400
    resp = client.post(
        f"/sessions/{session_id}/commands",
        json={"credential": creds["boss"], "command": {}},
    )
    assert resp.status_code == 400


def test_status_projection_by_role(client):
    session_id, creds = create_session(client)
    ok(send(client, session_id, creds, "boss", "begin_area"))
    ok(send(client, session_id, creds, "boss", "present_story"))
    ok(send(client, session_id, creds, "boss", "open_clarification"))
    ok(send(client, session_id, creds, "boss", "close_clarification"))
    ok(send(client, session_id, creds, "p1", "cast_vote", {"card": "Always"}))

    boss_view = client.get(
        f"/sessions/{session_id}/status", params={"credential": creds["boss"]}
    ).json()
    assert boss_view["round_status"]["has_cast"] == {"p1": True, "p2": False}

    p2_view = client.get(
        f"/sessions/{session_id}/status", params={"credential": creds["p2"]}
    ).json()
    assert "has_cast" not in p2_view["round_status"]
    assert p2_view["round_status"]["cast"] == 1


def test_idempotent_retry_over_http(client):
    session_id, creds = create_session(client)
    ok(send(client, session_id, creds, "boss", "begin_area"))
    ok(send(client, session_id, creds, "boss", "present_story"))
    ok(send(client, session_id, creds, "boss", "open_clarification"))
    ok(send(client, session_id, creds, "boss", "close_clarification"))
    first = ok(send(client, session_id, creds, "p1", "cast_vote", {"card": "Always"}, "retry-1"))
    second = ok(send(client, session_id, creds, "p1", "cast_vote", {"card": "Always"}, "retry-1"))
    assert first == second == {"cast": 1, "expected": 2}
    engine = client.store.get(session_id).engine
    assert sum(1 for e in engine.events if e["kind"] == "ballot.cast") == 1


@pytest.fixture
def live_server(tmp_path):
    """A real uvicorn server; SSE disconnects need an actual socket."""
    store = SessionStore(tmp_path / "data")
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = uvicorn.Config(
        create_app(store),
        host="127.0.0.1",
        port=port,
        log_level="error",
        timeout_graceful_shutdown=1,
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        assert time.time() < deadline, "server failed to start"
        time.sleep(0.01)
    base = f"http://127.0.0.1:{port}"
    with httpx.Client(base_url=base, timeout=10) as http:
        http.store = store
        yield http
    server.should_exit = True
    thread.join(timeout=10)


def collect_sse(http, session_id, credential, expected, from_seq=1):
    """Read SSE frames until `expected` events arrived, then disconnect."""
    events = []
    with http.stream(
        "GET",
        f"/sessions/{session_id}/events",
        params={"credential": credential, "from": from_seq},
    ) as resp:
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("text/event-stream")
        for line in resp.iter_lines():
            if line.startswith("data: "):
                events.append(json.loads(line[len("data: "):]))
                if len(events) >= expected:
                    break
    return events


def test_sse_backlog_is_role_projected(live_server):
    session_id, creds = create_session(live_server)
    ok(send(live_server, session_id, creds, "boss", "begin_area"))
    ok(send(live_server, session_id, creds, "boss", "present_story"))
    ok(send(live_server, session_id, creds, "boss", "open_clarification"))
    ok(send(live_server, session_id, creds, "boss", "close_clarification"))
    ok(send(live_server, session_id, creds, "p1", "cast_vote", {"card": "Always"}))

    engine = live_server.store.get(session_id).engine
    assessor_visible = [
        e for e in engine.events if e["kind"] not in ("ballot.cast",)
    ]
    got = collect_sse(live_server, session_id, creds["boss"], expected=len(assessor_visible))
    assert [e["kind"] for e in got] == [e["kind"] for e in assessor_visible]
    assert all(e["kind"] != "ballot.cast" for e in got)

    practitioner_events = collect_sse(
        live_server, session_id, creds["p2"],
        expected=len([e for e in assessor_visible if e["kind"] != "vote.progress"]),
    )
    kinds = {e["kind"] for e in practitioner_events}
    assert "vote.progress" not in kinds and "ballot.cast" not in kinds
    assert "Always" not in json.dumps(practitioner_events)


def test_sse_resume_from_seq(live_server):
    session_id, creds = create_session(live_server)
    ok(send(live_server, session_id, creds, "boss", "begin_area"))
    events = collect_sse(live_server, session_id, creds["boss"], expected=2, from_seq=4)
    assert events[0]["seq"] >= 4


def test_sse_live_push_to_subscriber(live_server):
    session_id, creds = create_session(live_server)
    ok(send(live_server, session_id, creds, "boss", "begin_area"))
    backlog_len = len(live_server.store.get(session_id).engine.events)

    received = []
    ready = threading.Event()

    def subscriber():
        with httpx.Client(timeout=15) as sub:
            with sub.stream(
                "GET",
                f"{live_server.base_url}/sessions/{session_id}/events",
                params={"credential": creds["boss"], "from": backlog_len + 1},
            ) as resp:
                ready.set()
                for line in resp.iter_lines():
                    if line.startswith("data: "):
                        received.append(json.loads(line[len("data: "):]))
                        if len(received) >= 2:
                            return

    worker = threading.Thread(target=subscriber, daemon=True)
    worker.start()
    assert ready.wait(timeout=10)
    time.sleep(0.2)  # let the subscriber register before the command lands
    ok(send(live_server, session_id, creds, "boss", "present_story"))
    worker.join(timeout=10)
    assert not worker.is_alive()
    assert [e["kind"] for e in received] == ["story.presented", "phase.changed"]


def test_export_requires_assessor_and_marks_draft(client):
    session_id, creds = create_session(client)
    resp = client.get(
        f"/sessions/{session_id}/export/findings", params={"credential": creds["p1"]}
    )
    assert resp.status_code == 403

    resp = client.get(
        f"/sessions/{session_id}/export/findings", params={"credential": creds["boss"]}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["draft"] is True
    assert body["document"]["header"]["draft"] is True

    resp = client.get(
        f"/sessions/{session_id}/export/nonsense", params={"credential": creds["boss"]}
    )
    assert resp.status_code == 404

    md = client.get(
        f"/sessions/{session_id}/export/findings",
        params={"credential": creds["boss"], "format": "md"},
    )
    assert md.status_code == 200
    assert md.text.startswith("> **DRAFT**")


def test_store_recovers_sessions_from_disk(client, tmp_path):
    session_id, creds = create_session(client)
    ok(send(client, session_id, creds, "boss", "begin_area"))
    ok(send(client, session_id, creds, "boss", "present_story"))
    ok(send(client, session_id, creds, "boss", "open_clarification"))
    ok(send(client, session_id, creds, "boss", "close_clarification"))
    ok(send(client, session_id, creds, "p1", "cast_vote", {"card": "Always"}))
    snapshot = client.store.get(session_id).engine.snapshot()

    # simulate a process restart: a fresh store over the same directory
    restarted_store = SessionStore(client.store.data_dir)
    with TestClient(create_app(restarted_store)) as fresh:
        live = restarted_store.get(session_id)
        assert live.engine.snapshot() == snapshot
        # credentials survive too and the service keeps answering
        resp = fresh.get(
            f"/sessions/{session_id}/status", params={"credential": creds["boss"]}
        )
        assert resp.json()["round_status"]["has_cast"] == {"p1": True, "p2": False}
        # and new commands continue the same journal
        resp = fresh.post(
            f"/sessions/{session_id}/commands",
            json={"credential": creds["p2"], "command": {"kind": "cast_vote", "payload": {"card": "Seldom"}}},
        )
        assert resp.status_code == 200
        assert resp.json()["result"]["cast"] == 2
