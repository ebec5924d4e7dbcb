import pytest
from hypothesis import given, strategies as st

from storypoker.voting import (
    AGREEMENT_LABEL,
    CARD_FOR_LABEL,
    SERIALIZATION_ORDER,
    VoteCard,
    VoteDistribution,
    VoteRound,
    VotingError,
)

CARD_NAMES = [card.value for card in VoteCard]


def test_label_bijection():
    assert len(AGREEMENT_LABEL) == 5
    assert len(set(AGREEMENT_LABEL.values())) == 5
    for card, label in AGREEMENT_LABEL.items():
        assert CARD_FOR_LABEL[label] is card
    assert AGREEMENT_LABEL[VoteCard.ALWAYS] == "StronglyAgree"
    assert AGREEMENT_LABEL[VoteCard.NEVER] == "StronglyDisagree"
    assert AGREEMENT_LABEL[VoteCard.DONT_KNOW] == "DontKnow"


def test_serialization_column_order():
    d = VoteDistribution(always=1, most_of_the_time=2, seldom=3, never=4, dont_know=5)
    labels = d.to_labels()
    assert list(labels) == ["StronglyDisagree", "Disagree", "Agree", "StronglyAgree", "DontKnow"]
    assert labels == {
        "StronglyDisagree": 4,
        "Disagree": 3,
        "Agree": 2,
        "StronglyAgree": 1,
        "DontKnow": 5,
    }
    assert list(labels) == [AGREEMENT_LABEL[c] for c in SERIALIZATION_ORDER]


def test_from_counts_accepts_both_key_sets():
    by_card = VoteDistribution.from_counts({"Always": 2, "Seldom": 1})
    by_label = VoteDistribution.from_counts({"StronglyAgree": 2, "Disagree": 1})
    assert by_card == by_label
    assert by_card.positive == 2 and by_card.negative == 1


@given(st.lists(st.sampled_from(CARD_NAMES), min_size=0, max_size=20))
def test_from_cards_conserves_counts(cards):
    d = VoteDistribution.from_cards(cards)
    assert d.total == len(cards)
    assert d.positive + d.negative + d.dont_know == len(cards)
    for card in VoteCard:
        assert d.count(card) == cards.count(card.value)


def test_round_recast_replaces_until_reveal():
    rnd = VoteRound("r1", "s1", "preliminary", expected=2)
    rnd.cast("tok-a", VoteCard.ALWAYS)
    rnd.cast("tok-b", VoteCard.NEVER)
    rnd.cast("tok-a", VoteCard.SELDOM)  # re-cast replaces, does not add
    d = rnd.compute_distribution()
    assert d.total == 2
    assert d.seldom == 1 and d.never == 1 and d.always == 0


def test_round_reveal_freezes_and_drops_identities():
    rnd = VoteRound("r1", "s1", "preliminary", expected=2)
    rnd.cast("tok-a", VoteCard.ALWAYS)
    assert rnd.mark_cast("p1") is True
    assert rnd.mark_cast("p1") is False  # second cast by same participant
    assert rnd.outstanding(["p1", "p2"]) == ["p2"]
    rnd.cast("tok-b", VoteCard.ALWAYS)
    rnd.mark_cast("p2")
    assert rnd.outstanding(["p1", "p2"]) == []

    rnd.reveal(rnd.compute_distribution())
    assert rnd.status == "revealed"
    assert rnd.cast_participants == []  # who-cast bookkeeping is discarded
    assert rnd.cast_count == rnd.distribution.total == 2
    with pytest.raises(VotingError):
        rnd.cast("tok-c", VoteCard.NEVER)


@given(
    st.lists(
        st.tuples(st.sampled_from(["tok-a", "tok-b", "tok-c"]), st.sampled_from(CARD_NAMES)),
        min_size=1,
        max_size=12,
    )
)
def test_last_cast_per_token_wins(casts):
    rnd = VoteRound("r1", "s1", "preliminary", expected=3)
    final = {}
    for token, card in casts:
        rnd.cast(token, VoteCard(card))
        final[token] = card
    d = rnd.compute_distribution()
    assert d == VoteDistribution.from_cards(final.values())
