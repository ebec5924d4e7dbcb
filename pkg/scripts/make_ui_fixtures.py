#!/usr/bin/env python3
"""Regenerate frontend/tests/fixtures/*.json.

Captures role-projected event streams from real engine runs so the UI
tests fold exactly what the service would push over the wire.
"""

from __future__ import annotations

import itertools
import json
from pathlib import Path

from storypoker.journal import project_stream
from storypoker.session import SessionEngine

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "frontend" / "tests" / "fixtures"

CATALOG = {
    "title": "UI fixture catalog",
    "version": "u1",
    "process_areas": [
        {
            "id": "UX",
            "name": "Example Area",
            "intent": "exercise the client views",
            "goals": [
                {
                    "id": "UX-G1",
                    "statement": "example goal",
                    "stories": [
                        {
                            "id": "ux-s1",
                            "model_ref": "UX 1.1",
                            "level": 2,
                            "cmmi_text": "do the thing",
                            "role": "team",
                            "pronoun": "we",
                            "practice_instance": "exercise the client views",
                            "benefit": "the tests mean something",
                        }
                    ],
                }
            ],
        }
    ],
}


def engine_with(practitioners: int) -> SessionEngine:
    counter = itertools.count(1)
    roster = [{"participant_id": "boss", "display_name": "Assessor", "role_tag": "assessor"}]
    roster += [
        {"participant_id": f"p{i}", "display_name": f"P{i}", "role_tag": "practitioner"}
        for i in range(1, practitioners + 1)
    ]
    return SessionEngine.create(
        CATALOG,
        roster,
        None,
        session_id="ui-fixture",
        ts="2026-02-01T10:00:00Z",
        token_factory=lambda: f"uitok-{next(counter)}",
    )


def open_round(engine: SessionEngine) -> None:
    engine.handle("boss", "begin_area", ts="t")
    engine.handle("boss", "present_story", ts="t")
    engine.handle("boss", "open_clarification", ts="t")
    engine.handle("boss", "close_clarification", ts="t")


def privacy_fixture() -> dict:
    """Two practitioners vote differently; capture both role streams."""
    engine = engine_with(2)
    open_round(engine)
    engine.handle("p1", "cast_vote", {"card": "Always"}, ts="t")
    engine.handle("p2", "cast_vote", {"card": "Seldom"}, ts="t")
    pre_reveal_len = len(engine.events)
    engine.handle("boss", "reveal", ts="t")
    return {
        "votes": {"p1": "Always", "p2": "Seldom"},
        "practitioner_stream": list(project_stream(engine.events, "practitioner")),
        "assessor_stream": list(project_stream(engine.events, "assessor")),
        "reveal_seq": engine.events[pre_reveal_len]["seq"],
    }


def gate_fixture() -> dict:
    """Seven practitioners cast one by one; assessor-projected stream."""
    engine = engine_with(7)
    open_round(engine)
    cast_seqs = []
    for i in range(1, 8):
        engine.handle(f"p{i}", "cast_vote", {"card": "MostOfTheTime"}, ts="t")
        cast_seqs.append(engine.events[-1]["seq"])
    engine.handle("boss", "reveal", ts="t")
    return {
        "assessor_stream": list(project_stream(engine.events, "assessor")),
        "cast_seqs": cast_seqs,
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "privacy.json").write_text(
        json.dumps(privacy_fixture(), indent=2) + "\n", encoding="utf-8"
    )
    (OUT / "gate.json").write_text(
        json.dumps(gate_fixture(), indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
