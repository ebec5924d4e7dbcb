"""Real-time facilitation service for documentless, card-vote process assessments."""

from .catalog import Catalog, StoryCard, load_catalog, render_story, scope_report
from .rating import PracticeRating, classify_votes, dispersion, maturity_level, rate_area, rate_goal
from .session import SessionConfig, SessionEngine
from .voting import VoteCard, VoteDistribution

__all__ = [
    "Catalog",
    "StoryCard",
    "load_catalog",
    "render_story",
    "scope_report",
    "PracticeRating",
    "classify_votes",
    "dispersion",
    "maturity_level",
    "rate_area",
    "rate_goal",
    "SessionConfig",
    "SessionEngine",
    "VoteCard",
    "VoteDistribution",
]
