import itertools
import json
from pathlib import Path

import pytest

from storypoker.session import SessionEngine

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ASSESSOR = "boss"


def counter_tokens():
    counter = itertools.count(1)
    return lambda: f"tok-{next(counter):04d}"


def mini_catalog_doc(area_specs=None, title="Mini catalog", version="t1"):
    """Build a small catalog document: area_specs maps area id -> story count."""
    area_specs = area_specs or {"AA": 2, "BB": 1}
    areas = []
    for area_id, n_stories in area_specs.items():
        stories = [
            {
                "id": f"{area_id.lower()}-s{k}",
                "model_ref": f"{area_id} 1.{k}",
                "level": 2,
                "cmmi_text": f"practice {k} of {area_id}",
                "role": "team",
                "pronoun": "we",
                "practice_instance": f"do thing {k} for {area_id}",
                "benefit": "it helps",
            }
            for k in range(1, n_stories + 1)
        ]
        areas.append(
            {
                "id": area_id,
                "name": f"Area {area_id}",
                "intent": f"intent of {area_id}",
                "goals": [{"id": f"{area_id}-G1", "statement": f"goal of {area_id}", "stories": stories}],
            }
        )
    return {"title": title, "version": version, "process_areas": areas}


def make_engine(practitioners=3, catalog=None, config=None, token_factory=None, sink=None):
    roster = [{"participant_id": ASSESSOR, "display_name": "Assessor", "role_tag": "assessor"}]
    roster += [
        {"participant_id": f"p{i}", "display_name": f"P{i}", "role_tag": "practitioner"}
        for i in range(1, practitioners + 1)
    ]
    return SessionEngine.create(
        catalog or mini_catalog_doc(),
        roster,
        config,
        session_id="test",
        ts="2026-01-01T00:00:00Z",
        token_factory=token_factory or counter_tokens(),
        sink=sink,
    )


def to_voting(engine):
    """Advance from AreaIntro/ContinueDecision to an open preliminary round."""
    engine.handle(ASSESSOR, "present_story")
    engine.handle(ASSESSOR, "open_clarification")
    return engine.handle(ASSESSOR, "close_clarification")


def cast_all(engine, cards):
    for pid, card in cards.items():
        engine.handle(pid, "cast_vote", {"card": card})


def complete_table(engine):
    engine.handle(
        ASSESSOR,
        "edit_practice_table",
        {
            "fields": {
                "relevant": True,
                "efficient": True,
                "institutionalized": True,
                "documented": False,
                "strengths_weaknesses": "none",
                "implementation_blockers": "none",
                "traceable_problems": "none",
                "additional_comments": "none",
            }
        },
    )


def explain_all(engine):
    order = list(engine.explaining["order"])
    for pid in order:
        engine.handle(pid, "record_explanation", {"note": f"{pid} speaks"})
    engine.handle(ASSESSOR, "finish_explanations")


def run_story(engine, prelim_cards, definitive_cards=None, confirm=True):
    """One full story cycle; returns the drafted finding result."""
    to_voting(engine)
    cast_all(engine, prelim_cards)
    engine.handle(ASSESSOR, "reveal")
    engine.handle(ASSESSOR, "begin_explanations")
    explain_all(engine)
    complete_table(engine)
    engine.handle(ASSESSOR, "open_definitive")
    cast_all(engine, definitive_cards or prelim_cards)
    engine.handle(ASSESSOR, "reveal")
    result = engine.handle(ASSESSOR, "record_vote")
    engine.handle(ASSESSOR, "open_validation")
    if confirm:
        engine.handle(ASSESSOR, "confirm_finding")
    return result


@pytest.fixture
def sample_catalog_doc():
    return json.loads((FIXTURES / "sample_catalog.json").read_text(encoding="utf-8"))


@pytest.fixture
def fixture_commands():
    doc = json.loads((FIXTURES / "replay_transcript.json").read_text(encoding="utf-8"))
    return doc["commands"]


@pytest.fixture
def fixture_journal_events():
    from storypoker.journal import load_events

    return load_events(FIXTURES / "replay_journal.jsonl")
