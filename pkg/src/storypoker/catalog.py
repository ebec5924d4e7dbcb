"""Assessment catalog: process areas, goals, and practices recast as user stories."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

VALID_LEVELS = (2, 3, 4, 5)
VALID_ARTICLES = ("a", "an", "")

STORY_FIELDS = (
    "id",
    "model_ref",
    "level",
    "cmmi_text",
    "role",
    "pronoun",
    "practice_instance",
    "benefit",
)


class CatalogParseError(ValueError):
    """The source document is not a syntactically valid catalog."""


class CatalogValidationError(ValueError):
    """The document parsed but violates catalog invariants.

    Carries every violation found, each prefixed with a path to the
    offending element, so authors can fix a file in one cycle.
    """

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid catalog:\n" + "\n".join(violations))


@dataclass(frozen=True)
class StoryCard:
    """A specific practice recast as a user story; the unit of assessment.

    ``article`` lets a story read "As an organization ..." or drop the
    article entirely ("As developers ..."); ``benefit`` may be empty for
    stories whose practice phrase already carries its own rationale.
    """

    id: str
    model_ref: str
    level: int
    cmmi_text: str
    role: str
    pronoun: str
    practice_instance: str
    benefit: str
    article: str = "a"


@dataclass(frozen=True)
class SpecificGoal:
    id: str
    statement: str
    stories: tuple[StoryCard, ...]


@dataclass(frozen=True)
class ProcessArea:
    id: str
    name: str
    intent: str
    goals: tuple[SpecificGoal, ...]

    def stories(self) -> Iterator[tuple[SpecificGoal, StoryCard]]:
        for goal in self.goals:
            for story in goal.stories:
                yield goal, story

    @property
    def level(self) -> int:
        return min(s.level for _, s in self.stories())


@dataclass(frozen=True)
class Catalog:
    title: str
    version: str
    process_areas: tuple[ProcessArea, ...]
    _story_index: dict[str, StoryCard] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        index = {}
        for area in self.process_areas:
            for _, story in area.stories():
                index[story.id] = story
        object.__setattr__(self, "_story_index", index)

    def story(self, story_id: str) -> StoryCard:
        return self._story_index[story_id]

    def stories(self) -> Iterator[StoryCard]:
        for area in self.process_areas:
            for _, story in area.stories():
                yield story

    def area(self, area_id: str) -> ProcessArea:
        for area in self.process_areas:
            if area.id == area_id:
                return area
        raise KeyError(area_id)


def render_story(story: StoryCard) -> str:
    """Render a story card as its display sentence.

    Joins the template slots with single spaces; the article may be
    "a", "an" or absent, and the trailing "so <benefit>" clause is
    omitted when the story has no separate benefit phrase.
    """
    parts = ["As"]
    if story.article:
        parts.append(story.article)
    parts.extend([story.role, story.pronoun, story.practice_instance])
    if story.benefit:
        parts.extend(["so", story.benefit])
    return " ".join(parts)


def _validate_story(doc: Any, path: str, errors: list[str]) -> StoryCard | None:
    if not isinstance(doc, dict):
        errors.append(f"{path}: story must be an object")
        return None
    for name in STORY_FIELDS:
        if name not in doc:
            errors.append(f"{path}.{name}: missing field")
    if errors and any(e.startswith(path + ".") and "missing field" in e for e in errors):
        return None
    level = doc["level"]
    if not isinstance(level, int) or level not in VALID_LEVELS:
        errors.append(f"{path}.level: must be one of {list(VALID_LEVELS)}, got {level!r}")
        level = 2
    for name in ("role", "practice_instance"):
        if not str(doc[name]).strip():
            errors.append(f"{path}.{name}: must be non-empty")
    article = doc.get("article", "a")
    if article not in VALID_ARTICLES:
        errors.append(f"{path}.article: must be one of {list(VALID_ARTICLES)}, got {article!r}")
        article = "a"
    return StoryCard(
        id=str(doc["id"]),
        model_ref=str(doc["model_ref"]),
        level=level,
        cmmi_text=str(doc["cmmi_text"]),
        role=str(doc["role"]),
        pronoun=str(doc["pronoun"]),
        practice_instance=str(doc["practice_instance"]),
        benefit=str(doc["benefit"]),
        article=article,
    )


def catalog_from_document(doc: Any) -> Catalog:
    """Build a Catalog from a parsed document, reporting all violations at once."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise CatalogParseError("catalog document must be a JSON object")
    for name in ("title", "version", "process_areas"):
        if name not in doc:
            errors.append(f"{name}: missing field")
    areas_doc = doc.get("process_areas", [])
    if not isinstance(areas_doc, list) or (not areas_doc and "process_areas" in doc):
        errors.append("process_areas: must be a non-empty list")
        areas_doc = []

    areas: list[ProcessArea] = []
    seen_area_ids: set[str] = set()
    seen_story_ids: dict[str, str] = {}
    for i, area_doc in enumerate(areas_doc):
        apath = f"process_areas[{i}]"
        if not isinstance(area_doc, dict):
            errors.append(f"{apath}: must be an object")
            continue
        area_id = str(area_doc.get("id", ""))
        if not area_id:
            errors.append(f"{apath}.id: missing or empty")
        if area_id in seen_area_ids:
            errors.append(f"{apath}.id: duplicate process-area id {area_id!r}")
        seen_area_ids.add(area_id)
        goals_doc = area_doc.get("goals", [])
        if not goals_doc:
            errors.append(f"{apath}.goals: process area must have at least one goal")
        goals: list[SpecificGoal] = []
        seen_goal_ids: set[str] = set()
        for j, goal_doc in enumerate(goals_doc):
            gpath = f"{apath}.goals[{j}]"
            if not isinstance(goal_doc, dict):
                errors.append(f"{gpath}: must be an object")
                continue
            goal_id = str(goal_doc.get("id", ""))
            if goal_id in seen_goal_ids:
                errors.append(f"{gpath}.id: duplicate goal id {goal_id!r} within area {area_id!r}")
            seen_goal_ids.add(goal_id)
            stories_doc = goal_doc.get("stories", [])
            if not stories_doc:
                errors.append(f"{gpath}.stories: goal must have at least one story")
            stories: list[StoryCard] = []
            for k, story_doc in enumerate(stories_doc):
                spath = f"{gpath}.stories[{k}]"
                story = _validate_story(story_doc, spath, errors)
                if story is None:
                    continue
                if story.id in seen_story_ids:
                    errors.append(
                        f"{spath}.id: duplicate story id {story.id!r}"
                        f" (first seen at {seen_story_ids[story.id]})"
                    )
                else:
                    seen_story_ids[story.id] = spath
                stories.append(story)
            goals.append(SpecificGoal(id=goal_id, statement=str(goal_doc.get("statement", "")), stories=tuple(stories)))
        areas.append(
            ProcessArea(
                id=area_id,
                name=str(area_doc.get("name", "")),
                intent=str(area_doc.get("intent", "")),
                goals=tuple(goals),
            )
        )
    if errors:
        raise CatalogValidationError(errors)
    return Catalog(title=str(doc["title"]), version=str(doc["version"]), process_areas=tuple(areas))


def load_catalog(source) -> Catalog:
    """Load a catalog from a path, JSON string, open file, or parsed dict."""
    if isinstance(source, dict):
        return catalog_from_document(source)
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if "\n" not in text and not text.lstrip().startswith("{") and Path(text).exists():
            text = Path(text).read_text(encoding="utf-8")
    if not text.strip():
        raise CatalogParseError("empty document")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogParseError(f"malformed catalog document: {exc}") from exc
    return catalog_from_document(doc)


def serialize_catalog(catalog: Catalog) -> dict:
    """Inverse of load_catalog: produce the catalog file document."""
    return {
        "title": catalog.title,
        "version": catalog.version,
        "process_areas": [
            {
                "id": area.id,
                "name": area.name,
                "intent": area.intent,
                "goals": [
                    {
                        "id": goal.id,
                        "statement": goal.statement,
                        "stories": [
                            {
                                "id": s.id,
                                "model_ref": s.model_ref,
                                "level": s.level,
                                "cmmi_text": s.cmmi_text,
                                "role": s.role,
                                "pronoun": s.pronoun,
                                "practice_instance": s.practice_instance,
                                "benefit": s.benefit,
                                **({"article": s.article} if s.article != "a" else {}),
                            }
                            for s in goal.stories
                        ],
                    }
                    for goal in area.goals
                ],
            }
            for area in catalog.process_areas
        ],
    }


def scope_report(catalog: Catalog, requested_levels: Iterable[int]) -> dict:
    """Summarize catalog coverage for the requested maturity levels."""
    levels = sorted(set(requested_levels))
    report: dict = {"levels": {}, "empty_levels": []}
    for level in levels:
        area_ids = []
        count = 0
        for area in catalog.process_areas:
            n = sum(1 for _, s in area.stories() if s.level == level)
            if n:
                area_ids.append(area.id)
                count += n
        report["levels"][level] = {"process_areas": area_ids, "story_count": count}
        if count == 0:
            report["empty_levels"].append(level)
    report["total_stories"] = sum(v["story_count"] for v in report["levels"].values())
    return report
