"""Group interview engine: a guarded state machine over the facilitation workflow.

One session is one logical command stream. Every state change is expressed
as journal events; replaying the journal through :meth:`SessionEngine.replay`
reconstructs the exact state, which is what crash recovery, offline report
generation, and the deterministic replay CLI all rely on.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field
from typing import Any, Callable

from .catalog import Catalog, catalog_from_document, load_catalog, render_story, serialize_catalog
from .rating import PracticeRating, RULE_RATIONALE, classify_votes_with_rule
from .voting import VoteCard, VoteDistribution, VoteRound

PHASES = (
    "Welcome",
    "AreaIntro",
    "StoryPresented",
    "Clarification",
    "PreliminaryVoting",
    "PreliminaryRevealed",
    "Explaining",
    "FollowOn",
    "DefinitiveVoting",
    "DefinitiveRevealed",
    "VoteRecorded",
    "FindingValidation",
    "ContinueDecision",
    "ParkingReview",
    "ParkingClosure",
    "Closed",
)

# Declared phase graph: (phase, command) -> possible target phases.
# Conformance tests fuzz command streams against exactly this table.
PHASE_GRAPH: dict[tuple[str, str], tuple[str, ...]] = {
    ("Welcome", "begin_area"): ("AreaIntro",),
    ("ContinueDecision", "begin_area"): ("AreaIntro",),
    ("AreaIntro", "present_story"): ("StoryPresented",),
    ("ContinueDecision", "present_story"): ("StoryPresented",),
    ("StoryPresented", "open_clarification"): ("Clarification",),
    ("Clarification", "close_clarification"): ("PreliminaryVoting",),
    ("PreliminaryVoting", "reveal"): ("PreliminaryRevealed",),
    ("DefinitiveVoting", "reveal"): ("DefinitiveRevealed",),
    # Idempotent reveal retries are self-loops, never new reveal events.
    ("PreliminaryRevealed", "reveal"): ("PreliminaryRevealed",),
    ("DefinitiveRevealed", "reveal"): ("DefinitiveRevealed",),
    ("PreliminaryRevealed", "begin_explanations"): ("Explaining",),
    ("Explaining", "finish_explanations"): ("FollowOn",),
    ("FollowOn", "open_definitive"): ("DefinitiveVoting",),
    ("DefinitiveRevealed", "record_vote"): ("VoteRecorded",),
    ("VoteRecorded", "open_validation"): ("FindingValidation",),
    ("FindingValidation", "confirm_finding"): ("ContinueDecision",),
    ("FindingValidation", "correct_finding"): ("ContinueDecision",),
    ("FindingValidation", "dispute_finding"): ("ContinueDecision",),
    ("ContinueDecision", "skip_process_area"): ("AreaIntro", "ParkingReview"),
    ("ContinueDecision", "begin_parking_review"): ("ParkingReview",),
    ("ParkingReview", "begin_parking_closure"): ("ParkingClosure",),
    ("ParkingClosure", "close_session"): ("Closed",),
}

TRANSITION_COMMANDS = {command for _, command in PHASE_GRAPH}

OPEN_PHASES = tuple(p for p in PHASES if p != "Closed")

# Non-transition commands and the phases in which they are legal.
COMMAND_PHASES: dict[str, tuple[str, ...]] = {
    "cast_vote": ("PreliminaryVoting", "DefinitiveVoting"),
    "select_presenter": ("PreliminaryRevealed",),
    "record_explanation": ("Explaining",),
    "early_exit_explanations": ("Explaining",),
    "edit_practice_table": ("Explaining", "FollowOn"),
    "set_incomplete_override": ("FollowOn",),
    "resolve_judgment": ("FindingValidation", "ContinueDecision", "ParkingReview", "ParkingClosure"),
    "add_parking_item": OPEN_PHASES,
    "assign_parking_item": ("ParkingReview",),
    "close_parking_item": ("ParkingReview", "ParkingClosure"),
    "set_participant_active": ("Welcome", "AreaIntro", "ContinueDecision"),
}

ASSESSOR_COMMANDS = TRANSITION_COMMANDS | {
    "select_presenter",
    "early_exit_explanations",
    "edit_practice_table",
    "set_incomplete_override",
    "resolve_judgment",
    "assign_parking_item",
    "close_parking_item",
    "set_participant_active",
}
PRACTITIONER_COMMANDS = {"cast_vote", "record_explanation", "add_parking_item"}
ALL_COMMANDS = ASSESSOR_COMMANDS | PRACTITIONER_COMMANDS

PRACTICE_TABLE_BOOL_FIELDS = ("relevant", "efficient", "institutionalized", "documented")
PRACTICE_TABLE_TEXT_FIELDS = (
    "strengths_weaknesses",
    "implementation_blockers",
    "traceable_problems",
    "additional_comments",
)
PRACTICE_TABLE_OPTIONAL_FIELDS = ("alternate_practice",) + tuple(
    f"{name}_note" for name in PRACTICE_TABLE_BOOL_FIELDS
)
PRACTICE_TABLE_FIELDS = (
    PRACTICE_TABLE_BOOL_FIELDS + PRACTICE_TABLE_TEXT_FIELDS + PRACTICE_TABLE_OPTIONAL_FIELDS
)

PARKING_TERMINAL_STATUSES = ("resolved", "agreed_to_disagree", "assessor_decided")


class SessionError(Exception):
    """Base for command rejections; message is safe to surface to clients."""


class IllegalTransition(SessionError):
    def __init__(self, phase: str, command: str):
        self.phase = phase
        self.command = command
        super().__init__(f"command {command!r} is not legal in phase {phase!r}")


class GuardFailure(SessionError):
    def __init__(self, guard: str, message: str):
        self.guard = guard
        super().__init__(f"[{guard}] {message}")


class Unauthorized(SessionError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    clarification_timebox_seconds: int = 300
    presenter_policy: str = "rotate"  # "rotate" | "manual"
    warn_participant_bounds: bool = True

    @classmethod
    def from_dict(cls, doc: dict | None) -> "SessionConfig":
        doc = doc or {}
        return cls(
            clarification_timebox_seconds=int(doc.get("clarification_timebox_seconds", 300)),
            presenter_policy=str(doc.get("presenter_policy", "rotate")),
            warn_participant_bounds=bool(doc.get("warn_participant_bounds", True)),
        )

    def to_dict(self) -> dict:
        return {
            "clarification_timebox_seconds": self.clarification_timebox_seconds,
            "presenter_policy": self.presenter_policy,
            "warn_participant_bounds": self.warn_participant_bounds,
        }


@dataclass
class Participant:
    participant_id: str
    display_name: str
    role_tag: str  # "assessor" | "practitioner"
    active: bool = True


def default_token_factory() -> str:
    return secrets.token_urlsafe(12)


class SessionEngine:
    """State machine plus journal for one group interview.

    Commands go through :meth:`handle`; every mutation happens inside
    :meth:`_apply`, so replaying the journal is state reconstruction by
    construction. Ballot-token ownership lives only in ``self._tokens``,
    which is populated by live command handling and never by replay.
    """

    def __init__(self, token_factory: Callable[[], str] | None = None, sink=None):
        self._token_factory = token_factory or default_token_factory
        self._sink = sink
        self.events: list[dict] = []
        self._seq = 0
        self._idempotency: dict[str, Any] = {}

        self.session_id: str = ""
        self.catalog: Catalog | None = None
        self.config = SessionConfig()
        self.participants: list[Participant] = []
        self.phase = "Welcome"
        self.area_idx = -1
        self.story_pos = -1
        self.current_story_id: str | None = None
        self.current_goal_id: str | None = None
        self.rounds: dict[str, VoteRound] = {}
        self.explaining: dict | None = None
        self.rounds_started = 0
        self.pending_presenter: dict | None = None
        self.practice_tables: dict[str, dict] = {}
        self.incomplete_overrides: dict[str, str] = {}
        self.findings: dict[str, dict] = {}
        self.vote_table_rows: list[dict] = []
        self.story_status: dict[str, str] = {}
        self.area_dispositions: dict[str, str] = {}
        self.parking: dict[str, dict] = {}
        self._parking_counter = 0

        # Transient, never journaled: participant -> ballot token per round.
        self._tokens: dict[str, dict[str, str]] = {}

    # ------------------------------------------------------------------
    # Construction and replay

    @classmethod
    def create(
        cls,
        catalog,
        roster: list[dict],
        config: dict | SessionConfig | None = None,
        session_id: str = "session",
        ts: str = "",
        token_factory: Callable[[], str] | None = None,
        sink=None,
    ) -> "SessionEngine":
        if not isinstance(catalog, Catalog):
            catalog = load_catalog(catalog)
        if not catalog.process_areas:
            raise SessionError("catalog has no process areas")
        cfg = config if isinstance(config, SessionConfig) else SessionConfig.from_dict(config)
        assessors = [r for r in roster if r.get("role_tag") == "assessor"]
        practitioners = [r for r in roster if r.get("role_tag") == "practitioner"]
        if len(assessors) != 1:
            raise SessionError(f"exactly one assessor required, got {len(assessors)}")
        if len(roster) != len(assessors) + len(practitioners):
            raise SessionError("every roster entry needs role_tag assessor or practitioner")

        engine = cls(token_factory=token_factory, sink=sink)
        events = [
            (
                "session.created",
                {
                    "session_id": session_id,
                    "catalog_title": catalog.title,
                    "catalog_version": catalog.version,
                    "catalog_document": serialize_catalog(catalog),
                    "roster_size": len(roster),
                    "practitioner_count": len(practitioners),
                    "config": cfg.to_dict(),
                },
            )
        ]
        used_ids = set()
        for i, entry in enumerate(roster, start=1):
            pid = entry.get("participant_id") or f"p{i}"
            if pid in used_ids:
                raise SessionError(f"duplicate participant_id {pid!r}")
            used_ids.add(pid)
            events.append(
                (
                    "participant.joined",
                    {
                        "participant_id": pid,
                        "display_name": entry.get("display_name", pid),
                        "role_tag": entry["role_tag"],
                    },
                )
            )
        if cfg.warn_participant_bounds and not (2 <= len(practitioners) <= 9):
            events.append(
                (
                    "session.warning",
                    {
                        "code": "participant_bounds",
                        "detail": f"{len(practitioners)} practitioners; recommended range is 2..9",
                    },
                )
            )
        engine._record(events, ts=ts)
        return engine

    @classmethod
    def replay(cls, events: list[dict], token_factory=None, sink=None) -> "SessionEngine":
        engine = cls(token_factory=token_factory, sink=None)
        for event in events:
            engine._apply(event)
            engine.events.append(event)
            engine._seq = event["seq"]
            key = event.get("idempotency_key")
            if key:
                engine._idempotency[key] = {"status": "applied", "seq": event["seq"]}
        engine._sink = sink
        return engine

    # ------------------------------------------------------------------
    # Command entry point

    def handle(
        self,
        actor: str,
        kind: str,
        payload: dict | None = None,
        ts: str = "",
        idempotency_key: str | None = None,
    ) -> dict:
        if idempotency_key and idempotency_key in self._idempotency:
            return self._idempotency[idempotency_key]
        payload = payload or {}
        participant = self._participant(actor)
        self._authorize(participant, kind)
        self._check_phase(kind)
        handler = getattr(self, f"_cmd_{kind}")
        result, events = handler(participant, payload)
        self._record(events, ts=ts, idempotency_key=idempotency_key)
        if idempotency_key:
            self._idempotency[idempotency_key] = result
        return result

    def _participant(self, actor: str) -> Participant:
        for p in self.participants:
            if p.participant_id == actor:
                return p
        raise Unauthorized(f"unknown participant {actor!r}")

    def _authorize(self, participant: Participant, kind: str) -> None:
        if kind not in ALL_COMMANDS:
            raise SessionError(f"unknown command {kind!r}")
        allowed = ASSESSOR_COMMANDS if participant.role_tag == "assessor" else PRACTITIONER_COMMANDS
        if kind not in allowed:
            raise Unauthorized(
                f"command {kind!r} is not available to role {participant.role_tag!r}"
            )

    def _check_phase(self, kind: str) -> None:
        if kind in TRANSITION_COMMANDS:
            if (self.phase, kind) not in PHASE_GRAPH:
                raise IllegalTransition(self.phase, kind)
        else:
            if self.phase not in COMMAND_PHASES[kind]:
                raise IllegalTransition(self.phase, kind)

    def _record(self, events: list[tuple[str, dict]], ts: str, idempotency_key: str | None = None):
        for i, (kind, payload) in enumerate(events):
            self._seq += 1
            event = {"seq": self._seq, "ts": ts, "kind": kind, "payload": payload}
            if i == 0 and idempotency_key:
                event["idempotency_key"] = idempotency_key
            self._apply(event)
            self.events.append(event)
            if self._sink is not None:
                self._sink.append(event)

    # ------------------------------------------------------------------
    # Helpers

    @property
    def assessor(self) -> Participant:
        return next(p for p in self.participants if p.role_tag == "assessor")

    @property
    def practitioners(self) -> list[Participant]:
        return [p for p in self.participants if p.role_tag == "practitioner"]

    def active_practitioner_ids(self) -> list[str]:
        return [p.participant_id for p in self.practitioners if p.active]

    def _current_area(self):
        return self.catalog.process_areas[self.area_idx]

    def _area_story_list(self, area) -> list[tuple[str, str]]:
        return [(goal.id, story.id) for goal, story in area.stories()]

    def _round_id(self, kind: str) -> str:
        return f"{self.current_story_id}#{kind}"

    def _current_round(self) -> VoteRound:
        kind = "preliminary" if self.phase in ("PreliminaryVoting", "PreliminaryRevealed") else "definitive"
        return self.rounds[self._round_id(kind)]

    def _transition(self, command: str, target: str) -> tuple[str, dict]:
        assert target in PHASE_GRAPH[(self.phase, command)]
        return ("phase.changed", {"from": self.phase, "to": target, "command": command})

    def _area_exhausted(self) -> bool:
        area = self._current_area()
        return self.story_pos + 1 >= len(self._area_story_list(area))

    def _issue_tokens(self, round_id: str) -> None:
        self._tokens[round_id] = {
            pid: self._token_factory() for pid in self.active_practitioner_ids()
        }

    def _next_parking_id(self) -> str:
        return f"pl-{self._parking_counter + 1}"

    def practice_table_missing(self, story_id: str) -> list[str]:
        table = self.practice_tables.get(story_id, {})
        missing = [f for f in PRACTICE_TABLE_BOOL_FIELDS if table.get(f) is None]
        missing += [f for f in PRACTICE_TABLE_TEXT_FIELDS if not str(table.get(f) or "").strip()]
        return missing

    def default_starter(self) -> str:
        """Rotate the starting position over the fixed practitioner ordering."""
        order = [p.participant_id for p in self.practitioners]
        idx = self.rounds_started % len(order)
        for offset in range(len(order)):
            pid = order[(idx + offset) % len(order)]
            if pid in self.active_practitioner_ids():
                return pid
        raise GuardFailure("active_practitioners", "no active practitioners")

    # ------------------------------------------------------------------
    # Command handlers: validate, then describe the change as events.

    def _cmd_begin_area(self, participant, payload):
        if self.phase == "Welcome":
            next_idx = 0
        else:
            if not self._area_exhausted():
                raise GuardFailure(
                    "area_exhausted",
                    f"area {self._current_area().id} still has unassessed stories",
                )
            next_idx = self.area_idx + 1
            if next_idx >= len(self.catalog.process_areas):
                raise GuardFailure("more_areas", "no process areas remain")
        area = self.catalog.process_areas[next_idx]
        events = [
            ("area.entered", {"area_id": area.id, "area_index": next_idx, "intent": area.intent}),
            self._transition("begin_area", "AreaIntro"),
        ]
        return {"area_id": area.id}, events

    def _cmd_present_story(self, participant, payload):
        area = self._current_area()
        stories = self._area_story_list(area)
        next_pos = self.story_pos + 1
        if next_pos >= len(stories):
            raise GuardFailure("more_stories", f"area {area.id} has no further stories")
        goal_id, story_id = stories[next_pos]
        story = self.catalog.story(story_id)
        events = [
            (
                "story.presented",
                {
                    "area_id": area.id,
                    "goal_id": goal_id,
                    "story_id": story_id,
                    "story_index": next_pos,
                    "text": render_story(story),
                },
            ),
            self._transition("present_story", "StoryPresented"),
        ]
        return {"story_id": story_id, "text": render_story(story)}, events

    def _cmd_open_clarification(self, participant, payload):
        events = [self._transition("open_clarification", "Clarification")]
        return {"timebox_seconds": self.config.clarification_timebox_seconds}, events

    def _cmd_close_clarification(self, participant, payload):
        round_id = self._round_id("preliminary")
        if round_id in self.rounds:
            raise GuardFailure("duplicate_round", f"round {round_id} already exists")
        expected = len(self.active_practitioner_ids())
        if expected < 1:
            raise GuardFailure("active_practitioners", "no active practitioners to vote")
        events = [
            (
                "round.opened",
                {
                    "round_id": round_id,
                    "story_id": self.current_story_id,
                    "kind": "preliminary",
                    "expected": expected,
                },
            ),
            self._transition("close_clarification", "PreliminaryVoting"),
        ]
        self._issue_tokens(round_id)
        return {"round_id": round_id, "expected": expected}, events

    def _cmd_cast_vote(self, participant, payload):
        if not participant.active:
            raise GuardFailure("active_participant", f"{participant.participant_id} is deactivated")
        try:
            card = VoteCard(payload["card"])
        except (KeyError, ValueError):
            raise GuardFailure("card_value", f"invalid card {payload.get('card')!r}")
        kind = "preliminary" if self.phase == "PreliminaryVoting" else "definitive"
        round_id = self._round_id(kind)
        rnd = self.rounds[round_id]
        tokens = self._tokens.setdefault(round_id, {})
        token = tokens.get(participant.participant_id)
        already_cast = participant.participant_id in rnd.cast_participants
        if token is None:
            if already_cast:
                # Recovered process: the token owner mapping was transient and
                # is gone; a fresh token would double-count this ballot.
                raise GuardFailure(
                    "ballot_token",
                    "ballot already cast; vote changes are unavailable after a restart",
                )
            token = self._token_factory()
            # After a restart the factory may re-issue a token already keying
            # someone else's ballot; never overwrite a foreign ballot.
            while token in rnd.ballots:
                token = self._token_factory()
            tokens[participant.participant_id] = token
        events: list[tuple[str, dict]] = [
            ("ballot.cast", {"round_id": round_id, "ballot_token": token, "card": card.value})
        ]
        if not already_cast:
            events.append(
                ("vote.progress", {"round_id": round_id, "participant_id": participant.participant_id})
            )
        cast_count = len(rnd.cast_participants) + (0 if already_cast else 1)
        events.append(
            ("round.progress", {"round_id": round_id, "cast": cast_count, "expected": rnd.expected})
        )
        return {"cast": cast_count, "expected": rnd.expected}, events

    def _cmd_reveal(self, participant, payload):
        if self.phase in ("PreliminaryRevealed", "DefinitiveRevealed"):
            rnd = self._current_round()
            return {"round_id": rnd.round_id, "distribution": rnd.distribution.to_labels()}, []
        rnd = self._current_round()
        outstanding = rnd.outstanding(self.active_practitioner_ids())
        if outstanding:
            n = len(outstanding)
            raise GuardFailure(
                "all_votes_cast", f"{n} vote{'s' if n != 1 else ''} outstanding"
            )
        distribution = rnd.compute_distribution()
        target = "PreliminaryRevealed" if rnd.kind == "preliminary" else "DefinitiveRevealed"
        events = [
            (
                "round.revealed",
                {
                    "round_id": rnd.round_id,
                    "story_id": rnd.story_id,
                    "kind": rnd.kind,
                    "area_id": self._current_area().id,
                    "distribution": distribution.to_labels(),
                    "total": distribution.total,
                },
            ),
            self._transition("reveal", target),
        ]
        if rnd.kind == "definitive":
            self._tokens.pop(rnd.round_id, None)
        return {"round_id": rnd.round_id, "distribution": distribution.to_labels()}, events

    def _cmd_select_presenter(self, participant, payload):
        policy = payload.get("policy", self.config.presenter_policy)
        override_pid = payload.get("participant_id")
        if override_pid is not None:
            policy = "manual"
        starter, used_policy = self._choose_starter(policy, override_pid)
        events = [
            (
                "presenter.selected",
                {
                    "story_id": self.current_story_id,
                    "participant_id": starter,
                    "policy": used_policy,
                },
            )
        ]
        return {"participant_id": starter, "policy": used_policy}, events

    def _choose_starter(self, policy: str, override_pid: str | None) -> tuple[str, str]:
        active = self.active_practitioner_ids()
        if override_pid is not None:
            if override_pid not in active:
                raise GuardFailure(
                    "presenter_eligible",
                    f"{override_pid!r} is not an active practitioner",
                )
            return override_pid, "manual"
        if policy == "dissenting":
            rnd = self.rounds[self._round_id("preliminary")]
            tokens = self._tokens.get(rnd.round_id, {})
            votes = {
                pid: rnd.ballots[token]
                for pid, token in tokens.items()
                if token in rnd.ballots and pid in active
            }
            if votes:
                counts: dict[VoteCard, int] = {}
                for card in votes.values():
                    counts[card] = counts.get(card, 0) + 1
                minority = min(counts.values())
                minority_cards = {c for c, n in counts.items() if n == minority}
                rotation = self._rotation_from(self.default_starter())
                for pid in rotation:
                    if votes.get(pid) in minority_cards:
                        return pid, "dissenting"
            # Ballot ownership is transient; after a restart fall back to rotation.
            return self.default_starter(), "rotate_fallback"
        return self.default_starter(), "rotate"

    def _rotation_from(self, starter: str) -> list[str]:
        active = self.active_practitioner_ids()
        idx = active.index(starter)
        return active[idx:] + active[:idx]

    def _cmd_begin_explanations(self, participant, payload):
        events: list[tuple[str, dict]] = []
        if self.pending_presenter and self.pending_presenter.get("story_id") == self.current_story_id:
            starter = self.pending_presenter["participant_id"]
        else:
            starter, policy = self._choose_starter(self.config.presenter_policy, None)
            events.append(
                (
                    "presenter.selected",
                    {"story_id": self.current_story_id, "participant_id": starter, "policy": policy},
                )
            )
        order = self._rotation_from(starter)
        events.append(
            (
                "explanations.started",
                {"story_id": self.current_story_id, "order": order, "starter": starter},
            )
        )
        events.append(self._transition("begin_explanations", "Explaining"))
        return {"order": order}, events

    def _cmd_record_explanation(self, participant, payload):
        exp = self.explaining
        if exp["floor_idx"] >= len(exp["order"]):
            raise GuardFailure("floor_open", "every practitioner has already held the floor")
        holder = exp["order"][exp["floor_idx"]]
        if participant.participant_id != holder:
            raise GuardFailure(
                "floor_holder",
                f"{participant.participant_id} is out of turn; the floor belongs to another participant",
            )
        note = str(payload.get("note", ""))
        events = [
            (
                "explanation.recorded",
                {
                    "story_id": self.current_story_id,
                    "position": exp["floor_idx"],
                    "note": note,
                },
            )
        ]
        next_idx = exp["floor_idx"] + 1
        next_holder = exp["order"][next_idx] if next_idx < len(exp["order"]) else None
        return {"next_floor": next_holder, "complete": next_holder is None}, events

    def _cmd_early_exit_explanations(self, participant, payload):
        events = [("explanation.early_exit", {"story_id": self.current_story_id})]
        return {"early_exit": True}, events

    def _cmd_finish_explanations(self, participant, payload):
        exp = self.explaining
        done = exp["floor_idx"] >= len(exp["order"]) or exp["early_exit"]
        if not done:
            remaining = len(exp["order"]) - exp["floor_idx"]
            raise GuardFailure(
                "explanations_complete",
                f"{remaining} participant(s) have not held the floor and no early exit was recorded",
            )
        events = [self._transition("finish_explanations", "FollowOn")]
        return {"phase": "FollowOn"}, events

    def _cmd_edit_practice_table(self, participant, payload):
        fields = payload.get("fields")
        if not isinstance(fields, dict) or not fields:
            raise GuardFailure("table_fields", "payload must carry a non-empty 'fields' object")
        unknown = [f for f in fields if f not in PRACTICE_TABLE_FIELDS]
        if unknown:
            raise GuardFailure("table_fields", f"unknown practice-table fields: {', '.join(unknown)}")
        for name in PRACTICE_TABLE_BOOL_FIELDS:
            if name in fields and not isinstance(fields[name], bool):
                raise GuardFailure("table_fields", f"field {name!r} must be true or false")
        events = [
            (
                "practice_table.updated",
                {"story_id": self.current_story_id, "fields": fields, "correction": False},
            )
        ]
        return {"missing": self._missing_after(self.current_story_id, fields)}, events

    def _missing_after(self, story_id: str, fields: dict) -> list[str]:
        table = dict(self.practice_tables.get(story_id, {}))
        table.update(fields)
        missing = [f for f in PRACTICE_TABLE_BOOL_FIELDS if table.get(f) is None]
        missing += [f for f in PRACTICE_TABLE_TEXT_FIELDS if not str(table.get(f) or "").strip()]
        return missing

    def _cmd_set_incomplete_override(self, participant, payload):
        reason = str(payload.get("reason", "")).strip()
        if not reason:
            raise GuardFailure("override_reason", "an incomplete-override requires a reason")
        events = [
            ("override.incomplete", {"story_id": self.current_story_id, "reason": reason})
        ]
        return {"story_id": self.current_story_id}, events

    def _cmd_open_definitive(self, participant, payload):
        story_id = self.current_story_id
        missing = self.practice_table_missing(story_id)
        if missing and story_id not in self.incomplete_overrides:
            raise GuardFailure(
                "practice_table_complete",
                f"practice table incomplete ({', '.join(missing)}) and no override set",
            )
        round_id = self._round_id("definitive")
        if round_id in self.rounds:
            raise GuardFailure("duplicate_round", f"round {round_id} already exists")
        expected = len(self.active_practitioner_ids())
        if expected < 1:
            raise GuardFailure("active_practitioners", "no active practitioners to vote")
        events = [
            (
                "round.opened",
                {"round_id": round_id, "story_id": story_id, "kind": "definitive", "expected": expected},
            ),
            self._transition("open_definitive", "DefinitiveVoting"),
        ]
        self._issue_tokens(round_id)
        return {"round_id": round_id, "expected": expected}, events

    def _cmd_record_vote(self, participant, payload):
        story_id = self.current_story_id
        prelim = self.rounds[self._round_id("preliminary")].distribution
        definitive = self.rounds[self._round_id("definitive")].distribution
        prelim_rating, _ = classify_votes_with_rule(prelim)
        rating, rule = classify_votes_with_rule(definitive)
        misinformation_note = None
        if prelim_rating != rating:
            misinformation_note = (
                f"preliminary vote classified {prelim_rating.value} but the definitive vote "
                f"classified {rating.value}; possible misinformation or unequal information"
            )
        events = [
            (
                "finding.drafted",
                {
                    "story_id": story_id,
                    "rating": rating.value,
                    "rule": rule,
                    "rationale": RULE_RATIONALE[rule],
                    "preliminary_rating": prelim_rating.value,
                    "definitive_rating": rating.value,
                    "misinformation_note": misinformation_note,
                },
            ),
            self._transition("record_vote", "VoteRecorded"),
        ]
        return {"rating": rating.value, "misinformation_note": misinformation_note}, events

    def _cmd_open_validation(self, participant, payload):
        return {"phase": "FindingValidation"}, [self._transition("open_validation", "FindingValidation")]

    def _cmd_confirm_finding(self, participant, payload):
        events = [
            (
                "finding.validated",
                {
                    "story_id": self.current_story_id,
                    "status": "confirmed",
                    "noteworthy": bool(payload.get("noteworthy", False)),
                    "strength_note": payload.get("strength_note"),
                },
            ),
            self._transition("confirm_finding", "ContinueDecision"),
        ]
        return {"status": "confirmed"}, events

    def _cmd_correct_finding(self, participant, payload):
        fields = payload.get("fields") or {}
        unknown = [f for f in fields if f not in PRACTICE_TABLE_FIELDS]
        if unknown:
            raise GuardFailure("table_fields", f"unknown practice-table fields: {', '.join(unknown)}")
        note = str(payload.get("note", "")).strip()
        if not note:
            raise GuardFailure("correction_note", "a factual correction requires a note")
        events: list[tuple[str, dict]] = []
        if fields:
            events.append(
                (
                    "practice_table.updated",
                    {"story_id": self.current_story_id, "fields": fields, "correction": True},
                )
            )
        events.append(
            (
                "finding.validated",
                {"story_id": self.current_story_id, "status": "corrected", "note": note},
            )
        )
        events.append(self._transition("correct_finding", "ContinueDecision"))
        return {"status": "corrected"}, events

    def _cmd_dispute_finding(self, participant, payload):
        text = str(payload.get("text", "")).strip()
        if not text:
            raise GuardFailure("dispute_text", "a disputed finding needs the point of contention")
        item_id = self._next_parking_id()
        events = [
            (
                "parking.added",
                {
                    "item_id": item_id,
                    "text": text,
                    "tag": "interpretation",
                    "raised_phase": self.phase,
                    "raised_story_id": self.current_story_id,
                },
            ),
            (
                "finding.validated",
                {"story_id": self.current_story_id, "status": "disputed", "item_id": item_id},
            ),
            self._transition("dispute_finding", "ContinueDecision"),
        ]
        return {"status": "disputed", "item_id": item_id}, events

    def _cmd_skip_process_area(self, participant, payload):
        disposition = payload.get("disposition")
        if disposition not in ("not_rated", "unsatisfied"):
            raise GuardFailure(
                "skip_disposition", "disposition must be 'not_rated' or 'unsatisfied'"
            )
        reason = str(payload.get("reason", "")).strip()
        if not reason:
            raise GuardFailure("skip_reason", "skipping a process area requires a reason")
        area = self._current_area()
        not_rated = [
            sid
            for _, sid in self._area_story_list(area)
            if self.story_status.get(sid, "pending") == "pending"
        ]
        events: list[tuple[str, dict]] = [
            (
                "area.skipped",
                {
                    "area_id": area.id,
                    "disposition": disposition,
                    "reason": reason,
                    "not_rated_story_ids": not_rated,
                },
            )
        ]
        next_idx = self.area_idx + 1
        if next_idx < len(self.catalog.process_areas):
            nxt = self.catalog.process_areas[next_idx]
            events.append(
                ("area.entered", {"area_id": nxt.id, "area_index": next_idx, "intent": nxt.intent})
            )
            events.append(self._transition("skip_process_area", "AreaIntro"))
            return {"area_id": nxt.id, "not_rated": not_rated}, events
        events.append(self._transition("skip_process_area", "ParkingReview"))
        return {"area_id": None, "not_rated": not_rated}, events

    def _cmd_begin_parking_review(self, participant, payload):
        if not self._area_exhausted() or self.area_idx + 1 < len(self.catalog.process_areas):
            raise GuardFailure(
                "areas_complete",
                "stories or process areas remain; skip or assess them before the parking review",
            )
        return {"phase": "ParkingReview"}, [self._transition("begin_parking_review", "ParkingReview")]

    def _cmd_begin_parking_closure(self, participant, payload):
        return {"phase": "ParkingClosure"}, [
            self._transition("begin_parking_closure", "ParkingClosure")
        ]

    def _cmd_close_session(self, participant, payload):
        unterminated = [
            item_id
            for item_id, item in self.parking.items()
            if item["status"] not in PARKING_TERMINAL_STATUSES
        ]
        if unterminated:
            raise GuardFailure(
                "parking_items_terminal",
                f"parking items still open or assigned: {', '.join(sorted(unterminated))}",
            )
        events = [("session.closed", {}), self._transition("close_session", "Closed")]
        return {"phase": "Closed"}, events

    def _cmd_add_parking_item(self, participant, payload):
        text = str(payload.get("text", "")).strip()
        if not text:
            raise GuardFailure("parking_text", "a parking item needs text")
        item_id = self._next_parking_id()
        events = [
            (
                "parking.added",
                {
                    "item_id": item_id,
                    "text": text,
                    "tag": payload.get("tag", "discussion"),
                    "raised_phase": self.phase,
                    "raised_story_id": self.current_story_id,
                },
            )
        ]
        return {"item_id": item_id}, events

    def _cmd_assign_parking_item(self, participant, payload):
        item = self.parking.get(payload.get("item_id"))
        if item is None:
            raise GuardFailure("parking_item", f"unknown parking item {payload.get('item_id')!r}")
        if item["status"] != "open":
            raise GuardFailure("parking_open", f"item {item['item_id']} is {item['status']}, not open")
        owner = payload.get("participant_id")
        if owner not in [p.participant_id for p in self.participants]:
            raise GuardFailure("parking_owner", f"unknown participant {owner!r}")
        events = [("parking.assigned", {"item_id": item["item_id"], "participant_id": owner})]
        return {"item_id": item["item_id"], "owner": owner}, events

    def _cmd_close_parking_item(self, participant, payload):
        item = self.parking.get(payload.get("item_id"))
        if item is None:
            raise GuardFailure("parking_item", f"unknown parking item {payload.get('item_id')!r}")
        if item["status"] in PARKING_TERMINAL_STATUSES:
            raise GuardFailure("parking_open", f"item {item['item_id']} is already closed")
        status = payload.get("status")
        if status not in PARKING_TERMINAL_STATUSES:
            raise GuardFailure(
                "parking_status", f"status must be one of {', '.join(PARKING_TERMINAL_STATUSES)}"
            )
        consensus = status != "assessor_decided"
        events = [
            (
                "parking.closed",
                {
                    "item_id": item["item_id"],
                    "status": status,
                    "evidence_note": payload.get("evidence_note"),
                    "consensus_reached": consensus,
                },
            )
        ]
        return {"item_id": item["item_id"], "status": status, "consensus_reached": consensus}, events

    def _cmd_resolve_judgment(self, participant, payload):
        story_id = payload.get("story_id")
        finding = self.findings.get(story_id)
        if finding is None or finding["rating"] != PracticeRating.NEEDS_JUDGMENT.value:
            current = finding["rating"] if finding else "unrated"
            raise GuardFailure(
                "needs_judgment", f"story {story_id!r} is {current}, not NeedsJudgment"
            )
        rating = payload.get("rating")
        if rating not in ("FI", "LI", "PI", "NI"):
            raise GuardFailure("judgment_rating", "rating must be FI, LI, PI or NI")
        rationale = str(payload.get("rationale", "")).strip()
        if not rationale:
            raise GuardFailure("judgment_rationale", "an assessor judgment requires a rationale")
        events = [
            ("judgment.resolved", {"story_id": story_id, "rating": rating, "rationale": rationale})
        ]
        return {"story_id": story_id, "rating": rating}, events

    def _cmd_set_participant_active(self, participant, payload):
        pid = payload.get("participant_id")
        target = next((p for p in self.practitioners if p.participant_id == pid), None)
        if target is None:
            raise GuardFailure("participant_known", f"{pid!r} is not a practitioner")
        active = bool(payload.get("active", False))
        events = [("participant.activity", {"participant_id": pid, "active": active})]
        return {"participant_id": pid, "active": active}, events

    # ------------------------------------------------------------------
    # Event application (the only place state mutates)

    def _apply(self, event: dict) -> None:
        getattr(self, "_apply_" + event["kind"].replace(".", "_"))(event["payload"])

    def _apply_session_created(self, p):
        self.session_id = p["session_id"]
        self.catalog = catalog_from_document(p["catalog_document"])
        self.config = SessionConfig.from_dict(p["config"])
        self.phase = "Welcome"

    def _apply_participant_joined(self, p):
        self.participants.append(
            Participant(p["participant_id"], p["display_name"], p["role_tag"])
        )

    def _apply_session_warning(self, p):
        pass

    def _apply_phase_changed(self, p):
        self.phase = p["to"]

    def _apply_area_entered(self, p):
        self.area_idx = p["area_index"]
        self.story_pos = -1

    def _apply_story_presented(self, p):
        self.story_pos = p["story_index"]
        self.current_story_id = p["story_id"]
        self.current_goal_id = p["goal_id"]
        self.story_status.setdefault(p["story_id"], "pending")
        self.practice_tables.setdefault(
            p["story_id"],
            {f: None for f in PRACTICE_TABLE_BOOL_FIELDS}
            | {f: "" for f in PRACTICE_TABLE_TEXT_FIELDS},
        )
        self.explaining = None
        self.pending_presenter = None

    def _apply_round_opened(self, p):
        self.rounds[p["round_id"]] = VoteRound(
            p["round_id"], p["story_id"], p["kind"], p["expected"]
        )

    def _apply_ballot_cast(self, p):
        self.rounds[p["round_id"]].cast(p["ballot_token"], VoteCard(p["card"]))

    def _apply_vote_progress(self, p):
        self.rounds[p["round_id"]].mark_cast(p["participant_id"])

    def _apply_round_progress(self, p):
        pass

    def _apply_round_revealed(self, p):
        rnd = self.rounds[p["round_id"]]
        rnd.reveal(VoteDistribution.from_counts(p["distribution"]))
        if p["kind"] == "definitive":
            self.vote_table_rows.append(
                {
                    "area_id": p["area_id"],
                    "story_id": p["story_id"],
                    "distribution": p["distribution"],
                    "total": p["total"],
                }
            )

    def _apply_presenter_selected(self, p):
        self.pending_presenter = p

    def _apply_explanations_started(self, p):
        self.explaining = {
            "story_id": p["story_id"],
            "order": list(p["order"]),
            "floor_idx": 0,
            "early_exit": False,
        }
        self.rounds_started += 1

    def _apply_explanation_recorded(self, p):
        self.explaining["floor_idx"] = p["position"] + 1

    def _apply_explanation_early_exit(self, p):
        self.explaining["early_exit"] = True

    def _apply_practice_table_updated(self, p):
        self.practice_tables.setdefault(p["story_id"], {}).update(p["fields"])

    def _apply_override_incomplete(self, p):
        self.incomplete_overrides[p["story_id"]] = p["reason"]

    def _apply_finding_drafted(self, p):
        self.findings[p["story_id"]] = {
            "story_id": p["story_id"],
            "rating": p["rating"],
            "rule": p["rule"],
            "rationale": p["rationale"],
            "preliminary_rating": p["preliminary_rating"],
            "definitive_rating": p["definitive_rating"],
            "misinformation_note": p["misinformation_note"],
            "validation_status": None,
            "judgment_rationale": None,
            "noteworthy": False,
            "strength_note": None,
        }
        self.story_status[p["story_id"]] = "assessed"

    def _apply_finding_validated(self, p):
        finding = self.findings[p["story_id"]]
        finding["validation_status"] = p["status"]
        if p["status"] == "confirmed":
            finding["noteworthy"] = p.get("noteworthy", False)
            finding["strength_note"] = p.get("strength_note")
        elif p["status"] == "corrected":
            finding["correction_note"] = p.get("note")
        elif p["status"] == "disputed":
            finding["dispute_item_id"] = p.get("item_id")

    def _apply_judgment_resolved(self, p):
        finding = self.findings[p["story_id"]]
        finding["rating"] = p["rating"]
        finding["judgment_rationale"] = p["rationale"]

    def _apply_area_skipped(self, p):
        for sid in p["not_rated_story_ids"]:
            self.story_status[sid] = "not_rated"
        self.area_dispositions[p["area_id"]] = p["disposition"]
        # Leave the cursor past the area; area.entered / phase.changed follow.
        self.story_pos = len(self._area_story_list(self.catalog.area(p["area_id"]))) - 1

    def _apply_parking_added(self, p):
        self._parking_counter += 1
        self.parking[p["item_id"]] = {
            "item_id": p["item_id"],
            "text": p["text"],
            "tag": p.get("tag", "discussion"),
            "raised_phase": p["raised_phase"],
            "raised_story_id": p.get("raised_story_id"),
            "status": "open",
            "owner": None,
            "evidence_note": None,
            "consensus_reached": None,
        }

    def _apply_parking_assigned(self, p):
        item = self.parking[p["item_id"]]
        item["status"] = "assigned"
        item["owner"] = p["participant_id"]

    def _apply_parking_closed(self, p):
        item = self.parking[p["item_id"]]
        item["status"] = p["status"]
        item["evidence_note"] = p.get("evidence_note")
        item["consensus_reached"] = p["consensus_reached"]

    def _apply_participant_activity(self, p):
        for participant in self.participants:
            if participant.participant_id == p["participant_id"]:
                participant.active = p["active"]

    def _apply_session_closed(self, p):
        pass

    # ------------------------------------------------------------------
    # Read-only queries

    def round_status(self, viewer_role: str = "assessor", kind: str | None = None) -> dict:
        if kind is None:
            kind = "definitive" if self.phase in (
                "DefinitiveVoting",
                "DefinitiveRevealed",
            ) else "preliminary"
        round_id = self._round_id(kind)
        rnd = self.rounds.get(round_id)
        if rnd is None:
            return {"round_id": round_id, "status": "absent"}
        status = {
            "round_id": round_id,
            "kind": rnd.kind,
            "status": rnd.status,
            "cast": rnd.cast_count,
            "expected": rnd.expected,
        }
        if viewer_role == "assessor" and rnd.status == "open":
            status["has_cast"] = {
                pid: pid in rnd.cast_participants for pid in self.active_practitioner_ids()
            }
        if rnd.status == "revealed":
            status["distribution"] = rnd.distribution.to_labels()
        return status

    def vote_table(self) -> list[dict]:
        """One row per definitive-revealed story, plus NotRated rows for skips."""
        revealed = {row["story_id"]: row for row in self.vote_table_rows}
        table = []
        for area in self.catalog.process_areas:
            rows = []
            for _, story_id in self._area_story_list(area):
                if story_id in revealed:
                    row = revealed[story_id]
                    rows.append(
                        {
                            "story_id": story_id,
                            "model_ref": self.catalog.story(story_id).model_ref,
                            "distribution": row["distribution"],
                            "total": row["total"],
                        }
                    )
                elif self.story_status.get(story_id) == "not_rated":
                    rows.append(
                        {
                            "story_id": story_id,
                            "model_ref": self.catalog.story(story_id).model_ref,
                            "distribution": None,
                            "rating": "NotRated",
                        }
                    )
            if rows:
                table.append({"area_id": area.id, "area_name": area.name, "rows": rows})
        return table

    def parking_items(self) -> list[dict]:
        return [dict(item) for item in self.parking.values()]

    def story_ratings(self) -> dict[str, str]:
        ratings = {}
        for story in self.catalog.stories():
            if story.id in self.findings:
                ratings[story.id] = self.findings[story.id]["rating"]
            elif self.story_status.get(story.id) == "not_rated":
                ratings[story.id] = PracticeRating.NOT_RATED.value
        return ratings

    def cursor(self) -> dict:
        return {
            "phase": self.phase,
            "area_index": self.area_idx,
            "area_id": self._current_area().id if 0 <= self.area_idx < len(self.catalog.process_areas) else None,
            "story_index": self.story_pos,
            "story_id": self.current_story_id,
            "goal_id": self.current_goal_id,
        }

    def snapshot(self) -> dict:
        """Deterministic digest of every externally queryable answer."""
        return {
            "cursor": self.cursor(),
            "participants": [
                {"participant_id": p.participant_id, "role_tag": p.role_tag, "active": p.active}
                for p in self.participants
            ],
            "round_status_preliminary": self.round_status("assessor", "preliminary")
            if self.current_story_id
            else None,
            "round_status_definitive": self.round_status("assessor", "definitive")
            if self.current_story_id
            else None,
            "vote_table": self.vote_table(),
            "practice_tables": {k: dict(v) for k, v in sorted(self.practice_tables.items())},
            "findings": {k: dict(v) for k, v in sorted(self.findings.items())},
            "parking": sorted(self.parking_items(), key=lambda i: i["item_id"]),
            "story_status": dict(sorted(self.story_status.items())),
            "area_dispositions": dict(sorted(self.area_dispositions.items())),
            "explaining": dict(self.explaining) if self.explaining else None,
        }
