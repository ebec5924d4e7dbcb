"""Final findings document and evidence exports, derived purely from a journal."""

from __future__ import annotations

import json
from typing import Any

from .rating import (
    AreaRating,
    GoalRating,
    MaturityAssessment,
    PracticeRating,
    maturity_level,
    rate_area,
    rate_goal,
)
from .session import SessionEngine
from .voting import AGREEMENT_LABEL, SERIALIZATION_ORDER

VOTE_COLUMNS = tuple(AGREEMENT_LABEL[card] for card in SERIALIZATION_ORDER)


class ReportError(ValueError):
    pass


def engine_from_events(events: list[dict]) -> SessionEngine:
    return SessionEngine.replay(events)


def _story_ratings(engine: SessionEngine, draft: bool) -> dict[str, PracticeRating]:
    ratings: dict[str, PracticeRating] = {}
    unresolved = []
    for story in engine.catalog.stories():
        finding = engine.findings.get(story.id)
        if finding is not None:
            rating = PracticeRating(finding["rating"])
            if rating == PracticeRating.NEEDS_JUDGMENT:
                unresolved.append(story.id)
                if draft:
                    rating = PracticeRating.NOT_RATED
            ratings[story.id] = rating
        else:
            # Skipped or never reached; both export as NotRated.
            ratings[story.id] = PracticeRating.NOT_RATED
    if unresolved and not draft:
        raise ReportError(
            "unresolved assessor judgments for: " + ", ".join(sorted(unresolved))
        )
    return ratings


def build_findings(
    engine: SessionEngine,
    draft: bool = False,
    external_inputs: str | None = None,
) -> dict:
    """Assemble the findings document; a pure function of the journal."""
    if engine.phase != "Closed" and not draft:
        raise ReportError(
            f"session is {engine.phase}, not Closed; pass draft=True for a running snapshot"
        )
    ratings = _story_ratings(engine, draft)
    created = engine.events[0]

    areas_doc = []
    area_ratings: dict[str, AreaRating] = {}
    weaknesses: list[dict] = []
    strengths: list[dict] = []
    for area in engine.catalog.process_areas:
        goal_ratings: list[GoalRating] = []
        goals_doc = []
        for goal in area.goals:
            per_story = {s.id: ratings[s.id] for s in goal.stories}
            goal_rating = rate_goal(goal.id, per_story)
            goal_ratings.append(goal_rating)
            stories_doc = []
            for story in goal.stories:
                finding = engine.findings.get(story.id)
                entry = {
                    "story_id": story.id,
                    "model_ref": story.model_ref,
                    "rating": ratings[story.id].value,
                }
                if finding:
                    entry["rationale"] = finding["rationale"]
                    if finding.get("judgment_rationale"):
                        entry["judgment_rationale"] = finding["judgment_rationale"]
                    if finding.get("misinformation_note"):
                        entry["misinformation_note"] = finding["misinformation_note"]
                    if finding.get("validation_status"):
                        entry["validation_status"] = finding["validation_status"]
                stories_doc.append(entry)
            statement = _goal_statement(goal.id, goal_rating)
            goals_doc.append(
                {
                    "goal_id": goal.id,
                    "statement": goal.statement,
                    "satisfied": goal_rating.satisfied,
                    "finding": statement,
                    "stories": stories_doc,
                }
            )
            for story in goal.stories:
                rating = ratings[story.id]
                if rating in (PracticeRating.PI, PracticeRating.NI):
                    weaknesses.append(
                        {
                            "story_id": story.id,
                            "source": "practice_rating",
                            "text": f"{story.model_ref}: rated {rating.value} under goal {goal.id}",
                        }
                    )
                finding = engine.findings.get(story.id)
                if finding and rating == PracticeRating.FI and finding.get("noteworthy"):
                    strengths.append(
                        {
                            "story_id": story.id,
                            "text": finding.get("strength_note")
                            or f"{story.model_ref}: fully implemented",
                        }
                    )
        disposition = engine.area_dispositions.get(area.id)
        area_rating = rate_area(area.id, goal_ratings, disposition)
        area_ratings[area.id] = area_rating
        areas_doc.append(
            {
                "area_id": area.id,
                "name": area.name,
                "satisfied": area_rating.satisfied,
                "disposition": disposition,
                "goals": goals_doc,
            }
        )

    for story_id, table in sorted(engine.practice_tables.items()):
        note = str(table.get("strengths_weaknesses") or "").strip()
        if note and note.lower() != "none":
            weaknesses.append(
                {"story_id": story_id, "source": "practice_table", "text": note}
            )

    maturity = maturity_level([a.id for a in engine.catalog.process_areas], area_ratings)

    misinformation = [
        {"story_id": sid, "note": f["misinformation_note"]}
        for sid, f in sorted(engine.findings.items())
        if f.get("misinformation_note")
    ]
    parking = [
        {
            "text": item["text"],
            "tag": item["tag"],
            "status": item["status"],
            "consensus_reached": item["consensus_reached"],
            "evidence_note": item["evidence_note"],
        }
        for item in sorted(engine.parking_items(), key=lambda i: i["item_id"])
    ]

    return {
        "header": {
            "catalog_title": engine.catalog.title,
            "catalog_version": engine.catalog.version,
            "session_date": created["ts"],
            "participant_count": len(engine.participants),
            "draft": draft,
        },
        "areas": areas_doc,
        "strengths": strengths,
        "weaknesses": weaknesses,
        "maturity": {
            "level": maturity.level,
            "label": maturity.label,
            "notes": list(maturity.notes),
        },
        "parking_lot": parking,
        "misinformation_notes": misinformation,
        "external_inputs": external_inputs,
    }


def _goal_statement(goal_id: str, goal_rating: GoalRating) -> str:
    cites = ", ".join(f"{sid}={r}" for sid, r in sorted(goal_rating.story_ratings.items()))
    if goal_rating.satisfied == "yes":
        return f"Goal {goal_id} satisfied ({cites})"
    if goal_rating.satisfied == "not_rated":
        return f"Goal {goal_id} not rated ({cites})"
    gaps = "; ".join(goal_rating.weaknesses)
    return f"Goal {goal_id} not satisfied: {gaps} ({cites})"


def export_vote_table(engine: SessionEngine) -> list[dict]:
    """Per-card counts in the fixed column order; every story appears exactly once."""
    revealed = {row["story_id"]: row for row in engine.vote_table_rows}
    table = []
    for area in engine.catalog.process_areas:
        rows = []
        for goal in area.goals:
            for story in goal.stories:
                if story.id in revealed:
                    row = revealed[story.id]
                    counts = {col: row["distribution"].get(col, 0) for col in VOTE_COLUMNS}
                    rows.append(
                        {
                            "story_id": story.id,
                            "model_ref": story.model_ref,
                            "counts": counts,
                            "total": row["total"],
                        }
                    )
                else:
                    rows.append(
                        {
                            "story_id": story.id,
                            "model_ref": story.model_ref,
                            "counts": None,
                            "rating": "NotRated",
                        }
                    )
        table.append({"area_id": area.id, "area_name": area.name, "rows": rows})
    return table


def export_practice_tables(engine: SessionEngine) -> list[dict]:
    tables = []
    for area in engine.catalog.process_areas:
        for goal in area.goals:
            for story in goal.stories:
                finding = engine.findings.get(story.id)
                rating = finding["rating"] if finding else "NotRated"
                entry = {
                    "story_id": story.id,
                    "model_ref": story.model_ref,
                    "performed": rating in ("FI", "LI"),
                    "rating": rating,
                }
                entry.update(
                    {k: v for k, v in sorted(engine.practice_tables.get(story.id, {}).items())}
                )
                tables.append(entry)
    return tables


def machine_export(engine: SessionEngine, draft: bool = False, external_inputs=None) -> dict:
    findings = build_findings(engine, draft=draft, external_inputs=external_inputs)
    return {
        "meta": findings["header"],
        "findings": findings,
        "vote_table": export_vote_table(engine),
        "practice_tables": export_practice_tables(engine),
    }


def to_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# ----------------------------------------------------------------------
# Human-readable (Markdown) renderings


def findings_markdown(doc: dict) -> str:
    h = doc["header"]
    lines = []
    if h["draft"]:
        lines.append("> **DRAFT** — session still in progress")
        lines.append("")
    lines.append(f"# Assessment findings: {h['catalog_title']} ({h['catalog_version']})")
    lines.append("")
    lines.append(f"Session date: {h['session_date'] or 'n/a'}  ")
    lines.append(f"Participants: {h['participant_count']}")
    lines.append("")
    for area in doc["areas"]:
        lines.append(f"## {area['area_id']} — {area['name']}: {area['satisfied']}")
        if area["disposition"]:
            lines.append(f"*Skipped ({area['disposition']})*")
        lines.append("")
        for goal in area["goals"]:
            lines.append(f"### {goal['goal_id']}: {goal['statement']}")
            lines.append("")
            lines.append(goal["finding"])
            lines.append("")
            for story in goal["stories"]:
                extra = []
                if "judgment_rationale" in story:
                    extra.append(f"judgment: {story['judgment_rationale']}")
                if "misinformation_note" in story:
                    extra.append(f"note: {story['misinformation_note']}")
                suffix = f" ({'; '.join(extra)})" if extra else ""
                lines.append(f"- {story['model_ref']} [{story['story_id']}]: {story['rating']}{suffix}")
            lines.append("")
    lines.append("## Strengths")
    lines.append("")
    for s in doc["strengths"] or [{"text": "none recorded", "story_id": ""}]:
        lines.append(f"- {s['text']}")
    lines.append("")
    lines.append("## Weaknesses")
    lines.append("")
    for w in doc["weaknesses"] or [{"text": "none recorded", "story_id": ""}]:
        lines.append(f"- {w['text']}")
    lines.append("")
    lines.append("## Maturity level (unofficial)")
    lines.append("")
    level = doc["maturity"]["level"]
    lines.append(f"Level: {level if level is not None else 'withheld'}")
    for note in doc["maturity"]["notes"]:
        lines.append(f"- {note}")
    lines.append("")
    if doc["misinformation_notes"]:
        lines.append("## Misinformation notes")
        lines.append("")
        for m in doc["misinformation_notes"]:
            lines.append(f"- {m['story_id']}: {m['note']}")
        lines.append("")
    lines.append("## Parking lot")
    lines.append("")
    if doc["parking_lot"]:
        for item in doc["parking_lot"]:
            consensus = "" if item["consensus_reached"] in (True, None) else " (consensus not reached)"
            lines.append(f"- [{item['status']}] {item['text']}{consensus}")
    else:
        lines.append("- empty")
    lines.append("")
    if doc["external_inputs"]:
        lines.append("## External inputs")
        lines.append("")
        lines.append(doc["external_inputs"])
        lines.append("")
    return "\n".join(lines)


def vote_table_markdown(table: list[dict]) -> str:
    lines = []
    header = "| Story | " + " | ".join(VOTE_COLUMNS) + " |"
    rule = "|" + "---|" * (len(VOTE_COLUMNS) + 1)
    for area in table:
        lines.append(f"## {area['area_id']} — {area['area_name']}")
        lines.append("")
        lines.append(header)
        lines.append(rule)
        for row in area["rows"]:
            if row["counts"] is None:
                cells = ["NotRated"] * len(VOTE_COLUMNS)
            else:
                cells = [str(row["counts"][col]) for col in VOTE_COLUMNS]
            lines.append(f"| {row['model_ref']} | " + " | ".join(cells) + " |")
        lines.append("")
    return "\n".join(lines)


def practice_tables_markdown(tables: list[dict]) -> str:
    lines = []
    for entry in tables:
        lines.append(f"## {entry['model_ref']} [{entry['story_id']}]")
        lines.append("")
        for key, value in entry.items():
            if key in ("story_id", "model_ref"):
                continue
            lines.append(f"- {key}: {value if value not in (None, '') else '—'}")
        lines.append("")
    return "\n".join(lines)
