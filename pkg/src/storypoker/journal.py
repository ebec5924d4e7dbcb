"""Append-only per-session journal files and role-filtered event projections."""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable


class JournalCorrupt(ValueError):
    pass


class FileJournal:
    """One append-only JSONL file per session; flushed per event."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh: IO[str] | None = None

    def append(self, event: dict) -> None:
        if self._fh is None:
            self._fh = self.path.open("a", encoding="utf-8")
        self._fh.write(json.dumps(event, ensure_ascii=False) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def load_events(path: Path) -> list[dict]:
    events = []
    expected_seq = 1
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JournalCorrupt(f"{path}:{lineno}: malformed event: {exc}") from exc
            if event.get("seq") != expected_seq:
                raise JournalCorrupt(
                    f"{path}:{lineno}: sequence gap (expected {expected_seq}, got {event.get('seq')})"
                )
            expected_seq += 1
            events.append(event)
    return events


# Per-event-kind visibility of the stored payload for each client role.
# "full" passes the payload through; "drop" removes the event from that
# role's stream entirely. The anonymity schema test enumerates this table:
# no projection may carry a participant identity next to a card value, and
# ballot values never leave the journal before the reveal event.
EVENT_VISIBILITY: dict[str, dict[str, str]] = {
    "session.created": {"assessor": "full", "practitioner": "full"},
    "participant.joined": {"assessor": "full", "practitioner": "full"},
    "session.warning": {"assessor": "full", "practitioner": "drop"},
    "phase.changed": {"assessor": "full", "practitioner": "full"},
    "area.entered": {"assessor": "full", "practitioner": "full"},
    "story.presented": {"assessor": "full", "practitioner": "full"},
    "round.opened": {"assessor": "full", "practitioner": "full"},
    "ballot.cast": {"assessor": "drop", "practitioner": "drop"},
    "vote.progress": {"assessor": "full", "practitioner": "drop"},
    "round.progress": {"assessor": "full", "practitioner": "full"},
    "round.revealed": {"assessor": "full", "practitioner": "full"},
    "presenter.selected": {"assessor": "full", "practitioner": "full"},
    "explanations.started": {"assessor": "full", "practitioner": "full"},
    "explanation.recorded": {"assessor": "full", "practitioner": "drop"},
    "explanation.early_exit": {"assessor": "full", "practitioner": "full"},
    "practice_table.updated": {"assessor": "full", "practitioner": "full"},
    "override.incomplete": {"assessor": "full", "practitioner": "drop"},
    "finding.drafted": {"assessor": "full", "practitioner": "full"},
    "finding.validated": {"assessor": "full", "practitioner": "full"},
    "judgment.resolved": {"assessor": "full", "practitioner": "full"},
    "area.skipped": {"assessor": "full", "practitioner": "full"},
    "parking.added": {"assessor": "full", "practitioner": "full"},
    "parking.assigned": {"assessor": "full", "practitioner": "full"},
    "parking.closed": {"assessor": "full", "practitioner": "full"},
    "participant.activity": {"assessor": "full", "practitioner": "full"},
    "session.closed": {"assessor": "full", "practitioner": "full"},
}


def project_event(event: dict, role: str) -> dict | None:
    """Role-filter a journal event for delivery to a client stream."""
    rule = EVENT_VISIBILITY[event["kind"]][role]
    if rule == "drop":
        return None
    projected = {"seq": event["seq"], "ts": event["ts"], "kind": event["kind"], "payload": event["payload"]}
    return projected


def project_stream(events: Iterable[dict], role: str, from_seq: int = 1):
    for event in events:
        if event["seq"] < from_seq:
            continue
        projected = project_event(event, role)
        if projected is not None:
            yield projected
