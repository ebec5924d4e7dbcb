import json

import pytest

from storypoker import report
from storypoker.cli import counter_token_factory, run_transcript
from storypoker.rating import DEFAULT_STAGED_SCOPE
from storypoker.session import SessionEngine

from .conftest import ASSESSOR, make_engine, mini_catalog_doc, run_story


def closed_engine(catalog=None, practitioners=2):
    engine = make_engine(practitioners=practitioners, catalog=catalog or mini_catalog_doc({"AA": 1}))
    for _ in range(len(engine.catalog.process_areas)):
        engine.handle(ASSESSOR, "begin_area")
        for _ in range(len(list(engine.catalog.process_areas[engine.area_idx].stories()))):
            run_story(engine, {f"p{i}": "Always" for i in range(1, practitioners + 1)})
    engine.handle(ASSESSOR, "begin_parking_review")
    engine.handle(ASSESSOR, "begin_parking_closure")
    engine.handle(ASSESSOR, "close_session")
    return engine


def test_findings_requires_closed_session_unless_draft():
    engine = make_engine(practitioners=2)
    with pytest.raises(report.ReportError, match="not Closed"):
        report.build_findings(engine)
    doc = report.build_findings(engine, draft=True)
    assert doc["header"]["draft"] is True


def test_findings_blocks_unresolved_judgment_when_final():
    engine = make_engine(practitioners=3, catalog=mini_catalog_doc({"AA": 1}))
    engine.handle(ASSESSOR, "begin_area")
    run_story(engine, {"p1": "Always", "p2": "Always", "p3": "Seldom"})
    engine.handle(ASSESSOR, "begin_parking_review")
    engine.handle(ASSESSOR, "begin_parking_closure")
    engine.handle(ASSESSOR, "close_session")
    with pytest.raises(report.ReportError, match="unresolved assessor judgments"):
        report.build_findings(engine)
    draft = report.build_findings(engine, draft=True)
    (story,) = [
        s for area in draft["areas"] for g in area["goals"] for s in g["stories"]
    ]
    assert story["rating"] == "NotRated"


def test_fixture_findings_shape(fixture_commands):
    engine = run_transcript(fixture_commands, token_factory=counter_token_factory())
    doc = report.build_findings(engine)

    ratings = {
        s["story_id"]: s["rating"]
        for area in doc["areas"]
        for goal in area["goals"]
        for s in goal["stories"]
    }
    assert ratings == {
        "bld-ci": "FI",
        "bld-gate": "LI",
        "bld-radiator": "PI",
        "rel-deploy": "NI",
        "rel-rollback": "NotRated",
    }
    by_area = {a["area_id"]: a for a in doc["areas"]}
    assert by_area["BLD"]["satisfied"] == "no"  # bld-radiator is PI
    assert by_area["REL"]["satisfied"] == "no"
    assert by_area["REL"]["disposition"] == "unsatisfied"
    assert doc["maturity"]["level"] is None  # pipeline catalog is out of staged scope
    assert len(doc["misinformation_notes"]) == 1
    assert doc["misinformation_notes"][0]["story_id"] == "bld-ci"
    assert [s["story_id"] for s in doc["strengths"]] == ["bld-ci"]
    weak_ids = {w["story_id"] for w in doc["weaknesses"]}
    assert weak_ids == {"bld-radiator", "rel-deploy"}
    assert doc["parking_lot"][0]["status"] == "agreed_to_disagree"
    # no participant identity in the findings document
    text = report.to_json(doc)
    for pid in ("p1", "p2", "p3", "p4", "p5", "lead"):
        assert f'"{pid}"' not in text


def test_findings_anonymity_of_exports(fixture_commands):
    engine = run_transcript(fixture_commands, token_factory=counter_token_factory())
    exports = report.machine_export(engine)
    text = report.to_json(exports)
    assert "ballot_token" not in text
    assert "participant_id" not in text


def test_vote_table_covers_every_story_once(fixture_commands):
    engine = run_transcript(fixture_commands, token_factory=counter_token_factory())
    table = report.export_vote_table(engine)
    rows = [row for area in table for row in area["rows"]]
    assert sorted(r["story_id"] for r in rows) == sorted(s.id for s in engine.catalog.stories())
    skipped = next(r for r in rows if r["story_id"] == "rel-rollback")
    assert skipped["counts"] is None and skipped["rating"] == "NotRated"
    voted = next(r for r in rows if r["story_id"] == "bld-ci")
    assert list(voted["counts"]) == ["StronglyDisagree", "Disagree", "Agree", "StronglyAgree", "DontKnow"]
    assert voted["counts"]["StronglyAgree"] == 5
    assert voted["total"] == 5


def test_practice_tables_performed_follows_rating(fixture_commands):
    engine = run_transcript(fixture_commands, token_factory=counter_token_factory())
    tables = {t["story_id"]: t for t in report.export_practice_tables(engine)}
    assert tables["bld-ci"]["performed"] is True  # FI
    assert tables["bld-gate"]["performed"] is True  # LI after judgment
    assert tables["bld-radiator"]["performed"] is False  # PI
    assert tables["rel-deploy"]["performed"] is False  # NI
    assert tables["rel-rollback"]["performed"] is False and tables["rel-rollback"]["rating"] == "NotRated"
    assert tables["bld-ci"]["relevant"] is True


def test_maturity_level_reported_with_full_level2_catalog():
    catalog = mini_catalog_doc({code: 1 for code in DEFAULT_STAGED_SCOPE[2]})
    engine = closed_engine(catalog=catalog)
    doc = report.build_findings(engine)
    assert doc["maturity"]["level"] == 2
    assert doc["maturity"]["label"] == "unofficial"


def test_to_json_is_stable_and_markdown_renders(fixture_commands):
    engine = run_transcript(fixture_commands, token_factory=counter_token_factory())
    doc = report.build_findings(engine)
    a = report.to_json(doc)
    b = report.to_json(json.loads(a))
    assert a == b
    md = report.findings_markdown(doc)
    assert "# Assessment findings" in md
    assert "agreed_to_disagree" in md
    vt = report.vote_table_markdown(report.export_vote_table(engine))
    assert "| StronglyDisagree | Disagree | Agree | StronglyAgree | DontKnow |" in vt
    pt = report.practice_tables_markdown(report.export_practice_tables(engine))
    assert "BLD 1.1" in pt


def test_external_inputs_threaded_through():
    engine = closed_engine()
    doc = report.build_findings(engine, external_inputs="customer survey summary attached")
    assert doc["external_inputs"] == "customer survey summary attached"
    md = report.findings_markdown(doc)
    assert "customer survey summary attached" in md


def test_live_journal_replays_to_identical_findings(fixture_commands):
    live = run_transcript(fixture_commands, token_factory=counter_token_factory())
    replayed = SessionEngine.replay(live.events)
    assert report.to_json(report.build_findings(live)) == report.to_json(
        report.build_findings(replayed)
    )
