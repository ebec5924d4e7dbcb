#!/usr/bin/env python3
"""Regenerate fixtures/replay_transcript.json.

A deterministic command script for a 2-area, 5-story, 5-practitioner
interview that exercises a skip, a parking item closed agree-to-disagree,
an assessor judgment resolution, and a misinformation note.
"""

from __future__ import annotations

import itertools
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

FIXTURE_CATALOG = {
    "title": "Deployment pipeline practices",
    "version": "2026.1",
    "process_areas": [
        {
            "id": "BLD",
            "name": "Build and Integration",
            "intent": "Changes are integrated and verified continuously.",
            "goals": [
                {
                    "id": "BLD-SG1",
                    "statement": "Changes reach the mainline through a verified pipeline.",
                    "stories": [
                        {
                            "id": "bld-ci",
                            "model_ref": "BLD 1.1",
                            "level": 2,
                            "cmmi_text": "Integrate changes continuously",
                            "role": "developer",
                            "pronoun": "I",
                            "practice_instance": "merge my work to the mainline at least daily",
                            "benefit": "integration problems surface while they are still small",
                        },
                        {
                            "id": "bld-gate",
                            "model_ref": "BLD 1.2",
                            "level": 2,
                            "cmmi_text": "Verify changes before integration",
                            "role": "team",
                            "pronoun": "we",
                            "practice_instance": "run the full test gate on every merge request",
                            "benefit": "broken changes never reach the mainline",
                        },
                    ],
                },
                {
                    "id": "BLD-SG2",
                    "statement": "Build results are visible to the whole team.",
                    "stories": [
                        {
                            "id": "bld-radiator",
                            "model_ref": "BLD 2.1",
                            "level": 2,
                            "cmmi_text": "Communicate build status",
                            "role": "team",
                            "pronoun": "we",
                            "practice_instance": "keep a build radiator visible in the team area",
                            "benefit": "a red build gets attention within minutes",
                        }
                    ],
                },
            ],
        },
        {
            "id": "REL",
            "name": "Release Management",
            "intent": "Releases are routine, reversible events.",
            "goals": [
                {
                    "id": "REL-SG1",
                    "statement": "Any mainline build can be released and rolled back.",
                    "stories": [
                        {
                            "id": "rel-deploy",
                            "model_ref": "REL 1.1",
                            "level": 3,
                            "cmmi_text": "Automate deployment",
                            "role": "team",
                            "pronoun": "we",
                            "practice_instance": "deploy to production through a one-step automated pipeline",
                            "benefit": "releases do not depend on any single person",
                        },
                        {
                            "id": "rel-rollback",
                            "model_ref": "REL 1.2",
                            "level": 3,
                            "cmmi_text": "Provide rollback capability",
                            "role": "team",
                            "pronoun": "we",
                            "practice_instance": "rehearse rolling back a release",
                            "benefit": "a bad release is a ten-minute incident, not an outage",
                        },
                    ],
                }
            ],
        },
    ],
}

PRACTITIONERS = [f"p{i}" for i in range(1, 6)]
ASSESSOR = "lead"

TABLE_FIELDS = {
    "relevant": True,
    "efficient": True,
    "institutionalized": False,
    "documented": False,
    "strengths_weaknesses": "none",
    "implementation_blockers": "none",
    "traceable_problems": "none",
    "additional_comments": "none",
}


def main() -> None:
    clock = itertools.count(0)
    commands: list[dict] = []

    def emit(actor: str, kind: str, payload: dict | None = None) -> None:
        commands.append(
            {
                "actor": actor,
                "kind": kind,
                "payload": payload or {},
                "ts": f"2026-01-15T09:{next(clock) // 60:02d}:{next(clock) % 60:02d}Z",
            }
        )

    emit(
        ASSESSOR,
        "create_session",
        {
            "session_id": "fixture",
            "catalog": FIXTURE_CATALOG,
            "roster": [
                {"participant_id": ASSESSOR, "display_name": "Assessor", "role_tag": "assessor"},
                *(
                    {"participant_id": p, "display_name": p.upper(), "role_tag": "practitioner"}
                    for p in PRACTITIONERS
                ),
            ],
            "config": {"presenter_policy": "rotate"},
        },
    )

    def run_story(prelim: list[str], definitive: list[str], presenter_policy: str | None = None):
        emit(ASSESSOR, "present_story")
        emit(ASSESSOR, "open_clarification")
        emit(ASSESSOR, "close_clarification")
        for pid, card in zip(PRACTITIONERS, prelim):
            emit(pid, "cast_vote", {"card": card})
        emit(ASSESSOR, "reveal")
        if presenter_policy:
            emit(ASSESSOR, "select_presenter", {"policy": presenter_policy})
        emit(ASSESSOR, "begin_explanations")
        # Floor order depends on rotation; the replay runner accepts notes only
        # from the floor holder, so the transcript names speakers explicitly.
        return prelim, definitive

    def finish_story(order: list[str], definitive: list[str], confirm_payload=None):
        for pid in order:
            emit(pid, "record_explanation", {"note": f"{pid} explains"})
        emit(ASSESSOR, "finish_explanations")
        emit(ASSESSOR, "edit_practice_table", {"fields": TABLE_FIELDS})
        emit(ASSESSOR, "open_definitive")
        for pid, card in zip(PRACTITIONERS, definitive):
            emit(pid, "cast_vote", {"card": card})
        emit(ASSESSOR, "reveal")
        emit(ASSESSOR, "record_vote")
        emit(ASSESSOR, "open_validation")
        emit(ASSESSOR, "confirm_finding", confirm_payload or {})

    def rotation(round_index: int) -> list[str]:
        start = round_index % len(PRACTITIONERS)
        return PRACTITIONERS[start:] + PRACTITIONERS[:start]

    emit(ASSESSOR, "begin_area")  # BLD

    # bld-ci: preliminary NI, definitive FI -> misinformation note + strength.
    run_story(["Seldom", "Seldom", "Seldom", "Never", "Never"], None)
    finish_story(
        rotation(0),
        ["Always"] * 5,
        {"noteworthy": True, "strength_note": "daily mainline merges are second nature"},
    )

    # bld-gate: NeedsJudgment (3 positive, 2 negative), resolved to LI.
    emit("p2", "add_parking_item", {"text": "does the nightly suite count as the gate?"})
    run_story(["Always", "Always", "Always", "Seldom", "Seldom"], None)
    finish_story(rotation(1), ["Always", "Always", "Always", "Seldom", "Seldom"])
    emit(
        ASSESSOR,
        "resolve_judgment",
        {
            "story_id": "bld-gate",
            "rating": "LI",
            "rationale": "gate enforced on services, not yet on the legacy monolith",
        },
    )

    # bld-radiator: PI.
    run_story(
        ["Seldom", "Seldom", "MostOfTheTime", "MostOfTheTime", "DontKnow"], None, "dissenting"
    )
    # Dissenting pick: DontKnow is the minority category; p5 holds it.
    finish_story(
        ["p5", "p1", "p2", "p3", "p4"],
        ["Seldom", "Seldom", "MostOfTheTime", "MostOfTheTime", "DontKnow"],
    )

    emit(ASSESSOR, "begin_area")  # REL

    # rel-deploy: NI.
    run_story(["Never", "Never", "Never", "Seldom", "Seldom"], None)
    finish_story(rotation(3), ["Never", "Never", "Never", "Seldom", "Seldom"])

    # Skip the rest of REL; rel-rollback becomes NotRated.
    emit(
        ASSESSOR,
        "skip_process_area",
        {"reason": "deployment is manual; rollback questions would embarrass", "disposition": "unsatisfied"},
    )

    # Parking review and closure.
    emit(ASSESSOR, "assign_parking_item", {"item_id": "pl-1", "participant_id": "p2"})
    emit(ASSESSOR, "begin_parking_closure")
    emit(
        ASSESSOR,
        "close_parking_item",
        {
            "item_id": "pl-1",
            "status": "agreed_to_disagree",
            "evidence_note": "nightly suite timing disputed; no shared definition of the gate",
        },
    )
    emit(ASSESSOR, "close_session")

    out = ROOT / "fixtures" / "replay_transcript.json"
    out.write_text(json.dumps({"commands": commands}, indent=2, ensure_ascii=False) + "\n", "utf-8")
    print(f"wrote {out} ({len(commands)} commands)")

    # Freeze the corresponding journal with deterministic ballot tokens so the
    # crash-recovery and event-replay tests have a stable event stream.
    from storypoker.cli import counter_token_factory, run_transcript

    engine = run_transcript(commands, token_factory=counter_token_factory())
    assert engine.phase == "Closed", engine.phase
    journal = ROOT / "fixtures" / "replay_journal.jsonl"
    with journal.open("w", encoding="utf-8") as fh:
        for event in engine.events:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")
    print(f"wrote {journal} ({len(engine.events)} events)")


if __name__ == "__main__":
    main()
