"""Vote interpretation: distribution -> practice rating, plus goal/area/level rollups."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .voting import VoteDistribution


class PracticeRating(str, Enum):
    FI = "FI"
    LI = "LI"
    PI = "PI"
    NI = "NI"
    NEEDS_JUDGMENT = "NeedsJudgment"
    NOT_RATED = "NotRated"


TERMINAL_RATINGS = frozenset(
    {PracticeRating.FI, PracticeRating.LI, PracticeRating.PI, PracticeRating.NI, PracticeRating.NOT_RATED}
)

# Ordered first-match interpretation rules. Rationale text is surfaced in
# preliminary findings so the assessor can explain the classification.
RULE_RATIONALE = {
    "R1": "every vote is positive: the practice is known and performed under most circumstances",
    "R2": "every vote is negative: the practice is not being performed",
    "R3": "a majority voted positive and every dissenting vote is a don't-know: "
    "performed by most, unknown to the rest",
    "R4": "a majority of votes fell in the seldom / most-of-the-time / don't-know set: "
    "carried by individual effort, not institutionalized",
    "R5": "the vote pattern matches no rule; assessor judgment required",
}


def classify_votes_with_rule(d: VoteDistribution) -> tuple[PracticeRating, str]:
    """Apply the ordered interpretation rules; exactly one fires (first match)."""
    if d.total < 1:
        raise ValueError("cannot classify an empty distribution")
    if d.negative == 0 and d.dont_know == 0:
        return PracticeRating.FI, "R1"
    if d.positive == 0 and d.dont_know == 0:
        return PracticeRating.NI, "R2"
    if d.positive * 2 > d.total and d.negative == 0:
        return PracticeRating.LI, "R3"
    if (d.seldom + d.most_of_the_time + d.dont_know) * 2 > d.total:
        return PracticeRating.PI, "R4"
    return PracticeRating.NEEDS_JUDGMENT, "R5"


def classify_votes(d: VoteDistribution) -> PracticeRating:
    return classify_votes_with_rule(d)[0]


@dataclass(frozen=True)
class DispersionReport:
    """Consistency signal feeding the institutionalized checklist entry.

    Advisory only: inconsistency hints at weak institutionalization but
    never produces an automatic verdict.
    """

    distinct_categories: int
    dont_know_fraction: Fraction
    inconsistent: bool


def dispersion(
    d: VoteDistribution,
    category_threshold: int = 3,
    dont_know_threshold: Fraction = Fraction(1, 3),
) -> DispersionReport:
    if d.total < 1:
        raise ValueError("cannot measure dispersion of an empty distribution")
    distinct = sum(1 for n in (d.always, d.most_of_the_time, d.seldom, d.never) if n > 0)
    frac = Fraction(d.dont_know, d.total)
    return DispersionReport(
        distinct_categories=distinct,
        dont_know_fraction=frac,
        inconsistent=distinct >= category_threshold or frac >= dont_know_threshold,
    )


@dataclass(frozen=True)
class GoalRating:
    goal_id: str
    satisfied: str  # "yes" | "no" | "not_rated"
    story_ratings: dict[str, str]
    weaknesses: tuple[str, ...] = ()


@dataclass(frozen=True)
class AreaRating:
    area_id: str
    satisfied: str  # "yes" | "no" | "not_rated"
    goal_ratings: tuple[GoalRating, ...]
    disposition: str | None = None


def rate_goal(goal_id: str, story_ratings: dict[str, PracticeRating]) -> GoalRating:
    """Roll practice ratings up to a goal: satisfied iff all rated stories are FI/LI."""
    if not story_ratings:
        raise ValueError(f"goal {goal_id} has no stories to rate")
    unresolved = [s for s, r in story_ratings.items() if r == PracticeRating.NEEDS_JUDGMENT]
    if unresolved:
        raise ValueError(f"goal {goal_id} has unresolved judgments: {', '.join(sorted(unresolved))}")
    rated = {s: r for s, r in story_ratings.items() if r != PracticeRating.NOT_RATED}
    if not rated:
        satisfied = "not_rated"
        weaknesses: tuple[str, ...] = ()
    else:
        gaps = [s for s, r in rated.items() if r in (PracticeRating.PI, PracticeRating.NI)]
        satisfied = "yes" if not gaps else "no"
        weaknesses = tuple(
            f"practice {s} rated {rated[s].value}" for s in sorted(gaps)
        )
    return GoalRating(
        goal_id=goal_id,
        satisfied=satisfied,
        story_ratings={s: r.value for s, r in story_ratings.items()},
        weaknesses=weaknesses,
    )


def rate_area(
    area_id: str,
    goal_ratings: list[GoalRating],
    disposition: str | None = None,
) -> AreaRating:
    """Area is satisfied iff all rated goals are and no skip marked it unsatisfied."""
    if disposition == "unsatisfied":
        satisfied = "no"
    elif all(g.satisfied == "not_rated" for g in goal_ratings):
        satisfied = "not_rated"
    elif any(g.satisfied == "no" for g in goal_ratings):
        satisfied = "no"
    else:
        satisfied = "yes"
    return AreaRating(
        area_id=area_id,
        satisfied=satisfied,
        goal_ratings=tuple(goal_ratings),
        disposition=disposition,
    )


# Staged model scope by level: process-area codes expected at each level.
# Only codes, no model text; override via the `staged_scope` argument when
# assessing against a different constellation.
DEFAULT_STAGED_SCOPE: dict[int, tuple[str, ...]] = {
    2: ("CM", "MA", "PMC", "PP", "PPQA", "REQM", "SAM"),
    3: ("DAR", "IPM", "OPD", "OPF", "OT", "PI", "RD", "RSKM", "TS", "VAL", "VER"),
    4: ("OPP", "QPM"),
    5: ("CAR", "OPM"),
}


@dataclass(frozen=True)
class MaturityAssessment:
    level: int | None
    label: str = "unofficial"
    notes: tuple[str, ...] = ()


def maturity_level(
    catalog_area_ids: list[str],
    area_ratings: dict[str, AreaRating],
    staged_scope: dict[int, tuple[str, ...]] | None = None,
) -> MaturityAssessment:
    """Highest staged level whose areas are all present in scope and satisfied.

    Withheld (level None) when the catalog does not cover every area of
    level 2; an unrated in-scope area stops the climb at the level below.
    """
    scope = staged_scope or DEFAULT_STAGED_SCOPE
    present = set(catalog_area_ids)
    notes: list[str] = []
    level = 1
    for tier in sorted(scope):
        codes = scope[tier]
        missing = [c for c in codes if c not in present]
        if missing:
            if tier == 2:
                notes.append(
                    f"level withheld: catalog does not cover level {tier} areas {', '.join(missing)}"
                )
                return MaturityAssessment(level=None, notes=tuple(notes))
            notes.append(f"level {tier} not evaluated: catalog omits {', '.join(missing)}")
            break
        not_rated = [c for c in codes if area_ratings[c].satisfied == "not_rated"]
        if not_rated:
            notes.append(f"level {tier} not evaluated: areas not rated: {', '.join(not_rated)}")
            break
        if any(area_ratings[c].satisfied == "no" for c in codes):
            unsat = [c for c in codes if area_ratings[c].satisfied == "no"]
            notes.append(f"level {tier} not reached: unsatisfied areas: {', '.join(unsat)}")
            break
        level = tier
    return MaturityAssessment(level=level, notes=tuple(notes))
