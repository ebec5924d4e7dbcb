"""Card votes: the five-value scale, ballots, and revealed distributions."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class VoteCard(str, Enum):
    ALWAYS = "Always"
    MOST_OF_THE_TIME = "MostOfTheTime"
    SELDOM = "Seldom"
    NEVER = "Never"
    DONT_KNOW = "DontKnow"


# Fixed bijection to the agreement labels used on the recording forms.
AGREEMENT_LABEL = {
    VoteCard.ALWAYS: "StronglyAgree",
    VoteCard.MOST_OF_THE_TIME: "Agree",
    VoteCard.SELDOM: "Disagree",
    VoteCard.NEVER: "StronglyDisagree",
    VoteCard.DONT_KNOW: "DontKnow",
}
CARD_FOR_LABEL = {v: k for k, v in AGREEMENT_LABEL.items()}

# Fixed serialization column order for all distribution exports.
SERIALIZATION_ORDER = (
    VoteCard.NEVER,
    VoteCard.SELDOM,
    VoteCard.MOST_OF_THE_TIME,
    VoteCard.ALWAYS,
    VoteCard.DONT_KNOW,
)

POSITIVE_CARDS = frozenset({VoteCard.ALWAYS, VoteCard.MOST_OF_THE_TIME})
NEGATIVE_CARDS = frozenset({VoteCard.SELDOM, VoteCard.NEVER})


class VotingError(ValueError):
    pass


@dataclass(frozen=True)
class VoteDistribution:
    """Unattributed per-value counts for one revealed round."""

    always: int = 0
    most_of_the_time: int = 0
    seldom: int = 0
    never: int = 0
    dont_know: int = 0

    @classmethod
    def from_cards(cls, cards) -> "VoteDistribution":
        counts = {card: 0 for card in VoteCard}
        for card in cards:
            counts[VoteCard(card)] += 1
        return cls(
            always=counts[VoteCard.ALWAYS],
            most_of_the_time=counts[VoteCard.MOST_OF_THE_TIME],
            seldom=counts[VoteCard.SELDOM],
            never=counts[VoteCard.NEVER],
            dont_know=counts[VoteCard.DONT_KNOW],
        )

    @classmethod
    def from_counts(cls, counts: dict) -> "VoteDistribution":
        """Accepts card names or agreement labels as keys."""
        by_card = {card: 0 for card in VoteCard}
        for key, n in counts.items():
            card = CARD_FOR_LABEL.get(key) if key in CARD_FOR_LABEL else VoteCard(key)
            by_card[card] += int(n)
        return cls.from_cards(card for card, n in by_card.items() for _ in range(n))

    def count(self, card: VoteCard) -> int:
        return {
            VoteCard.ALWAYS: self.always,
            VoteCard.MOST_OF_THE_TIME: self.most_of_the_time,
            VoteCard.SELDOM: self.seldom,
            VoteCard.NEVER: self.never,
            VoteCard.DONT_KNOW: self.dont_know,
        }[card]

    @property
    def total(self) -> int:
        return self.always + self.most_of_the_time + self.seldom + self.never + self.dont_know

    @property
    def positive(self) -> int:
        return self.always + self.most_of_the_time

    @property
    def negative(self) -> int:
        return self.seldom + self.never

    def to_labels(self) -> dict[str, int]:
        """Serialize in the fixed column order, keyed by agreement label."""
        return {AGREEMENT_LABEL[card]: self.count(card) for card in SERIALIZATION_ORDER}


class VoteRound:
    """One private-cast, simultaneous-reveal ballot round.

    Ballots are keyed by per-round random tokens; the token-to-participant
    mapping lives only in the session engine's transient memory and is
    never part of this record or the journal.
    """

    def __init__(self, round_id: str, story_id: str, kind: str, expected: int):
        self.round_id = round_id
        self.story_id = story_id
        self.kind = kind  # "preliminary" | "definitive"
        self.expected = expected
        self.status = "open"
        self.ballots: dict[str, VoteCard] = {}
        self.cast_participants: list[str] = []  # discarded at reveal
        self.distribution: VoteDistribution | None = None

    def cast(self, token: str, card: VoteCard) -> None:
        if self.status != "open":
            raise VotingError(f"round {self.round_id} already revealed; late vote rejected")
        self.ballots[token] = VoteCard(card)

    def mark_cast(self, participant_id: str) -> bool:
        """Record that a participant has cast; returns True on first cast."""
        if participant_id in self.cast_participants:
            return False
        self.cast_participants.append(participant_id)
        return True

    @property
    def cast_count(self) -> int:
        if self.status == "revealed":
            return self.distribution.total if self.distribution else 0
        return len(self.cast_participants)

    def outstanding(self, active_practitioners: list[str]) -> list[str]:
        return [p for p in active_practitioners if p not in self.cast_participants]

    def reveal(self, distribution: VoteDistribution) -> None:
        self.status = "revealed"
        self.distribution = distribution
        # The transient cast-set is discarded at reveal.
        self.cast_participants = []

    def compute_distribution(self) -> VoteDistribution:
        return VoteDistribution.from_cards(self.ballots.values())
