"""Rating scales and overall-score computation against a brute-force oracle."""

from __future__ import annotations

import random
from datetime import datetime, timezone
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from revbib.errors import ValidationError
from revbib.ratings import (
    FamiliarityLevel,
    QualityLevel,
    Rating,
    ScorePercent,
    nrs,
    overall_score,
    overall_score_exact,
    parse_familiarity,
    parse_quality,
)

NOW = datetime.now(timezone.utc)


def brute_force_percent(pairs: list[tuple[int, int]]) -> float | None:
    """Independent oracle: normalize each rating, sum, divide by rater count."""
    if not pairs:
        return None
    total = 0.0
    for q, f in pairs:
        total += (q * f) / 9
    return total / len(pairs) * 100


def make_rating(q, f, user="u", record="r"):
    return Rating(
        user_id=user,
        record_id=record,
        quality=QualityLevel(q),
        familiarity=FamiliarityLevel(f),
        rated_at=NOW,
    )


class TestNrs:
    # All nine grid values substituting Table-style points into the formula.
    EXPECTED = {
        (1, 1): Fraction(1, 9),
        (1, 2): Fraction(2, 9),
        (1, 3): Fraction(3, 9),
        (2, 1): Fraction(2, 9),
        (2, 2): Fraction(4, 9),
        (2, 3): Fraction(6, 9),
        (3, 1): Fraction(3, 9),
        (3, 2): Fraction(6, 9),
        (3, 3): Fraction(1, 1),
    }

    def test_all_nine_pairs(self):
        for (q, f), expected in self.EXPECTED.items():
            assert nrs(QualityLevel(q), FamiliarityLevel(f)) == expected

    def test_extremes(self):
        assert nrs(QualityLevel.HIGH, FamiliarityLevel.EXPERT) == 1
        assert nrs(QualityLevel.LOW, FamiliarityLevel.LOW) == Fraction(1, 9)

    def test_medium_moderate(self):
        assert float(nrs(QualityLevel.MEDIUM, FamiliarityLevel.MODERATE)) == pytest.approx(
            4 / 9, abs=1e-12
        )


class TestOverallScore:
    def test_single_maximal_rating_is_100(self):
        score = overall_score([make_rating(3, 3)])
        assert score.value == pytest.approx(100.0, abs=1e-9)
        assert score.rating_count == 1

    def test_high_expert_plus_medium_expert(self):
        score = overall_score([make_rating(3, 3, user="a"), make_rating(2, 3, user="b")])
        assert score.value == pytest.approx(((9 + 6) / 9) / 2 * 100, abs=1e-9)
        assert score.display == "83.33"

    def test_empty_input_has_no_value(self):
        score = overall_score([])
        assert score.value is None
        assert score.rating_count == 0
        assert score.display is None

    def test_mixed_record_ids_refused(self):
        with pytest.raises(ValidationError):
            overall_score([make_rating(1, 1, record="a"), make_rating(1, 1, record="b")])

    def test_against_brute_force_oracle_randomized(self):
        rng = random.Random(20240817)
        for _ in range(1000):
            pairs = [
                (rng.randint(1, 3), rng.randint(1, 3)) for _ in range(rng.randint(0, 20))
            ]
            ratings = [
                make_rating(q, f, user=f"u{i}") for i, (q, f) in enumerate(pairs)
            ]
            got = overall_score(ratings)
            expected = brute_force_percent(pairs)
            if expected is None:
                assert got.value is None
            else:
                assert got.value == pytest.approx(expected, abs=1e-9)
            assert got.rating_count == len(pairs)


level = st.integers(min_value=1, max_value=3)
pair_lists = st.lists(st.tuples(level, level), min_size=1, max_size=50)


class TestScoreProperties:
    @given(pair_lists)
    def test_bounds(self, pairs):
        exact, count = overall_score_exact(
            (QualityLevel(q), FamiliarityLevel(f)) for q, f in pairs
        )
        assert count == len(pairs)
        assert Fraction(100, 9) <= exact <= 100

    @given(pair_lists)
    def test_permutation_invariance(self, pairs):
        shuffled = list(reversed(pairs))
        a, _ = overall_score_exact((QualityLevel(q), FamiliarityLevel(f)) for q, f in pairs)
        b, _ = overall_score_exact(
            (QualityLevel(q), FamiliarityLevel(f)) for q, f in shuffled
        )
        assert a == b

    def test_boundaries_hit_exactly(self):
        low, _ = overall_score_exact([(QualityLevel.LOW, FamiliarityLevel.LOW)] * 7)
        high, _ = overall_score_exact([(QualityLevel.HIGH, FamiliarityLevel.EXPERT)] * 7)
        assert low == Fraction(100, 9)
        assert high == 100


class TestLevelParsing:
    def test_accepts_ints_and_names(self):
        assert parse_quality(2) is QualityLevel.MEDIUM
        assert parse_quality("high") is QualityLevel.HIGH
        assert parse_familiarity("Moderate") is FamiliarityLevel.MODERATE
        assert parse_familiarity(3) is FamiliarityLevel.EXPERT

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            parse_quality(0)
        with pytest.raises(ValidationError):
            parse_quality(4)
        with pytest.raises(ValidationError):
            parse_familiarity("guru")
        with pytest.raises(ValidationError):
            parse_quality(True)


def test_score_percent_serialization():
    assert ScorePercent(value=100 / 9 * 1, rating_count=1).to_dict()["score_display"] == "11.11"
    assert ScorePercent(value=None, rating_count=0).to_dict() == {
        "score_percent": None,
        "score_display": None,
        "rating_count": 0,
    }
