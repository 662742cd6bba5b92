"""Consensus detection against a brute-force grouping oracle."""

from __future__ import annotations

import random
from collections import Counter
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from revbib.errors import ValidationError
from revbib.evaluation import (
    APPROVE,
    NONE,
    REJECT,
    ConsensusDecision,
    Evaluation,
    check_consensus,
)

NOW = datetime.now(timezone.utc)

PATHS = [("networks", "network-types"), ("networks", "network-protocols"), ("logic", "proofs")]


def ev(user, is_review=True, path=("networks", "network-types")):
    field_id, subfield_id = path if is_review else (None, None)
    return Evaluation(
        user_id=user,
        record_id="rec1",
        is_review=is_review,
        proposed_field_id=field_id,
        proposed_subfield_id=subfield_id,
        submitted_at=NOW,
    )


def brute_force_consensus(evaluations, threshold):
    """Independent oracle: count every grouping explicitly."""
    groups = {}
    for e in evaluations:
        key = ("not-review",) if not e.is_review else (
            "review",
            e.proposed_field_id,
            e.proposed_subfield_id,
        )
        groups[key] = groups.get(key, 0) + 1
    if not groups:
        return (NONE, 0, None, None)
    best = max(groups.values())
    winners = [k for k, v in groups.items() if v == best]
    if best < threshold or len(winners) != 1:
        return (NONE, best, None, None)
    key = winners[0]
    if key[0] == "review":
        return (APPROVE, best, key[1], key[2])
    return (REJECT, best, None, None)


class TestEvaluationValidation:
    def test_review_requires_path(self):
        bad = Evaluation("u", "r", True, None, None, NOW)
        with pytest.raises(ValidationError):
            bad.validate()

    def test_not_review_must_not_propose_path(self):
        bad = Evaluation("u", "r", False, "networks", "network-types", NOW)
        with pytest.raises(ValidationError):
            bad.validate()

    def test_valid_variants(self):
        ev("u1").validate()
        ev("u2", is_review=False).validate()


class TestCheckConsensus:
    def test_no_evaluations(self):
        assert check_consensus([], 10) == ConsensusDecision(outcome=NONE, supporting_count=0)

    def test_below_threshold_waits(self):
        evaluations = [ev(f"u{i}") for i in range(9)]
        decision = check_consensus(evaluations, 10)
        assert decision.outcome == NONE
        assert decision.supporting_count == 9

    def test_tenth_matching_approves(self):
        evaluations = [ev(f"u{i}") for i in range(10)]
        decision = check_consensus(evaluations, 10)
        assert decision.outcome == APPROVE
        assert decision.supporting_count == 10
        assert (decision.field_id, decision.subfield_id) == ("networks", "network-types")

    def test_ten_not_review_rejects(self):
        evaluations = [ev(f"u{i}", is_review=False) for i in range(10)]
        decision = check_consensus(evaluations, 10)
        assert decision.outcome == REJECT
        assert decision.supporting_count == 10

    def test_majority_group_wins(self):
        evaluations = [ev(f"a{i}") for i in range(10)]
        evaluations += [ev(f"b{i}", path=PATHS[1]) for i in range(3)]
        decision = check_consensus(evaluations, 10)
        assert decision.outcome == APPROVE
        assert decision.subfield_id == "network-types"

    def test_tie_between_qualifying_groups_waits(self):
        evaluations = [ev(f"a{i}") for i in range(10)]
        evaluations += [ev(f"b{i}", path=PATHS[1]) for i in range(10)]
        decision = check_consensus(evaluations, 10)
        assert decision.outcome == NONE
        assert decision.supporting_count == 10

    def test_larger_group_beats_tied_threshold(self):
        evaluations = [ev(f"a{i}") for i in range(11)]
        evaluations += [ev(f"b{i}", path=PATHS[1]) for i in range(10)]
        decision = check_consensus(evaluations, 10)
        assert decision.outcome == APPROVE
        assert decision.supporting_count == 11

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValidationError):
            check_consensus([], 0)

    def test_matches_brute_force_on_random_sets(self):
        rng = random.Random(1234)
        for _ in range(400):
            n = rng.randint(0, 50)
            evaluations = []
            for i in range(n):
                if rng.random() < 0.3:
                    evaluations.append(ev(f"u{i}", is_review=False))
                else:
                    evaluations.append(ev(f"u{i}", path=rng.choice(PATHS)))
            threshold = rng.randint(1, 15)
            got = check_consensus(evaluations, threshold)
            outcome, count, f, s = brute_force_consensus(evaluations, threshold)
            assert got.outcome == outcome
            assert got.supporting_count == count
            assert got.field_id == f
            assert got.subfield_id == s


verdicts = st.lists(
    st.one_of(
        st.just(("not",)),
        st.tuples(st.just("rev"), st.sampled_from(PATHS)),
    ),
    max_size=60,
)


class TestConsensusProperties:
    @given(verdicts, st.integers(min_value=1, max_value=20))
    def test_agrees_with_oracle(self, raw, threshold):
        evaluations = []
        for i, v in enumerate(raw):
            if v[0] == "not":
                evaluations.append(ev(f"u{i}", is_review=False))
            else:
                evaluations.append(ev(f"u{i}", path=v[1]))
        got = check_consensus(evaluations, threshold)
        expected = brute_force_consensus(evaluations, threshold)
        assert (got.outcome, got.supporting_count, got.field_id, got.subfield_id) == expected

    @given(verdicts, st.integers(min_value=1, max_value=20))
    def test_monotone_largest_group(self, raw, threshold):
        evaluations = []
        for i, v in enumerate(raw):
            if v[0] == "not":
                evaluations.append(ev(f"u{i}", is_review=False))
            else:
                evaluations.append(ev(f"u{i}", path=v[1]))
        before = check_consensus(evaluations, threshold).supporting_count
        evaluations.append(ev("extra", path=PATHS[0]))
        after = check_consensus(evaluations, threshold).supporting_count
        assert after >= before

    def test_decision_requires_threshold_support(self):
        counts = Counter()
        rng = random.Random(7)
        for trial in range(200):
            evaluations = [
                ev(f"u{i}", path=rng.choice(PATHS)) for i in range(rng.randint(0, 30))
            ]
            decision = check_consensus(evaluations, 10)
            counts[decision.outcome] += 1
            if decision.outcome != NONE:
                assert decision.supporting_count >= 10
        assert counts[NONE] > 0
