import json

import pytest
from hypothesis import given, strategies as st

from storypoker.catalog import (
    CatalogParseError,
    CatalogValidationError,
    StoryCard,
    catalog_from_document,
    load_catalog,
    render_story,
    scope_report,
    serialize_catalog,
)

from .conftest import FIXTURES, mini_catalog_doc

# Frozen expected display texts for the shipped sample catalog, keyed by
# story id. Punctuation (typographic apostrophes and quotes) is part of the
# expectation; the renderer must not normalize it.
EXPECTED_TEXTS = {
    "reqm-1-3": "As a team member I can find how user stories have evolved over time as well as their current status so I can better understand stakeholders’ needs and avert “he said, she said” situations",
    "pp-1-2": "As a team we establish estimates for user stories and tasks so that we can make commitments to our stakeholders and plan our work",
    "pmc-1-1": "As a team we track rate of work completion using iteration and release burn down charts so that we can keep all stakeholders abreast of our progress",
    "ma-2-3": "As an organization we preserve our defect and velocity data so it can be used by other projects to check their initial estimates against what has been achieved and to find organizational quality issues and bottlenecks",
    "rskm-1-1": "As a team we have at our disposal a list of risks sources that can help us identify what might go wrong in a project and decide what to do about it",
    "rskm-2-1": "As a team we make a conscious effort to identify and document potential problems so we don’t overlook them",
    "ts-1-1": "As a team we discuss the characteristics a good software solution should possess and evaluate different solutions against them to avoid following a dead end path",
    "ver-2-2": "As developers we review each other code with the purpose of identifying bugs and non-compliances with our coding guidelines",
    "val-1-2": "As a team we use a canary release strategy to get fast feedback from actual users",
}


def test_sample_catalog_loads():
    catalog = load_catalog(FIXTURES / "sample_catalog.json")
    assert catalog.title
    assert len(list(catalog.stories())) == 9


def test_sample_catalog_renders_expected_texts():
    catalog = load_catalog(FIXTURES / "sample_catalog.json")
    for story_id, expected in EXPECTED_TEXTS.items():
        assert render_story(catalog.story(story_id)) == expected, story_id


def test_render_default_article():
    story = StoryCard(
        id="x", model_ref="X 1.1", level=2, cmmi_text="c",
        role="X", pronoun="I want to", practice_instance="Y", benefit="Z",
    )
    assert render_story(story) == "As a X I want to Y so Z"


def test_render_no_benefit_omits_so_clause():
    story = StoryCard(
        id="x", model_ref="X 1.1", level=2, cmmi_text="c",
        role="team", pronoun="we", practice_instance="act", benefit="",
    )
    assert render_story(story) == "As a team we act"


def test_round_trip_serialize_load(sample_catalog_doc):
    catalog = catalog_from_document(sample_catalog_doc)
    doc = serialize_catalog(catalog)
    again = catalog_from_document(doc)
    assert serialize_catalog(again) == doc
    assert [s.id for s in again.stories()] == [s.id for s in catalog.stories()]


def test_load_catalog_accepts_string_and_file(tmp_path, sample_catalog_doc):
    text = json.dumps(sample_catalog_doc)
    assert load_catalog(text).title == sample_catalog_doc["title"]
    path = tmp_path / "cat.json"
    path.write_text(text, encoding="utf-8")
    assert load_catalog(path).title == sample_catalog_doc["title"]
    with path.open(encoding="utf-8") as fh:
        assert load_catalog(fh).title == sample_catalog_doc["title"]


def test_parse_error_on_malformed_json():
    with pytest.raises(CatalogParseError):
        load_catalog("{not json")
    with pytest.raises(CatalogParseError):
        load_catalog("   ")


def test_validation_collects_all_violations():
    doc = mini_catalog_doc()
    # Inject several independent problems at once.
    doc["process_areas"][0]["goals"][0]["stories"][0]["level"] = 7
    del doc["process_areas"][0]["goals"][0]["stories"][1]["role"]
    doc["process_areas"][1]["goals"][0]["stories"][0]["id"] = "aa-s1"  # duplicate
    doc["process_areas"].append(dict(doc["process_areas"][0]))  # duplicate area id
    with pytest.raises(CatalogValidationError) as exc_info:
        catalog_from_document(doc)
    violations = exc_info.value.violations
    assert any("level" in v for v in violations)
    assert any("role" in v and "missing" in v for v in violations)
    assert any("duplicate story id" in v for v in violations)
    assert any("duplicate process-area id" in v for v in violations)
    assert len(violations) >= 4


def test_validation_rejects_empty_role_and_bad_article():
    doc = mini_catalog_doc()
    doc["process_areas"][0]["goals"][0]["stories"][0]["role"] = "  "
    doc["process_areas"][0]["goals"][0]["stories"][1]["article"] = "the"
    with pytest.raises(CatalogValidationError) as exc_info:
        catalog_from_document(doc)
    violations = exc_info.value.violations
    assert any(".role" in v for v in violations)
    assert any(".article" in v for v in violations)


def test_goal_and_area_must_have_children():
    doc = mini_catalog_doc()
    doc["process_areas"][0]["goals"][0]["stories"] = []
    doc["process_areas"][1]["goals"] = []
    with pytest.raises(CatalogValidationError) as exc_info:
        catalog_from_document(doc)
    violations = exc_info.value.violations
    assert any("at least one story" in v for v in violations)
    assert any("at least one goal" in v for v in violations)


def test_scope_report_sample_catalog(sample_catalog_doc):
    catalog = catalog_from_document(sample_catalog_doc)
    rep = scope_report(catalog, [2, 3, 4])
    assert rep["levels"][2]["story_count"] == 4
    assert set(rep["levels"][2]["process_areas"]) == {"REQM", "PP", "PMC", "MA"}
    assert rep["levels"][3]["story_count"] == 5
    assert rep["empty_levels"] == [4]
    assert rep["total_stories"] == 9


WORD = st.text(alphabet="abcdefghij", min_size=1, max_size=6)


@given(a=st.tuples(WORD, WORD, WORD, WORD), b=st.tuples(WORD, WORD, WORD, WORD))
def test_render_injective_on_single_word_slots(a, b):
    # With single-token slots the rendered sentence determines the slots,
    # so distinct cards render distinctly.
    def card(slots):
        role, pronoun, practice, benefit = slots
        return StoryCard(
            id="x", model_ref="m", level=2, cmmi_text="c",
            role=role, pronoun=pronoun, practice_instance=practice, benefit=benefit,
        )

    if a != b:
        assert render_story(card(a)) != render_story(card(b))
    else:
        assert render_story(card(a)) == render_story(card(b))
