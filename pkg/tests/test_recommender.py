"""Collaborative filtering against an independently coded brute-force oracle."""

from __future__ import annotations

import math
import random

from revbib.recommender import build_matrix, recommend_from_matrix

NRS_VALUES = sorted({q * f / 9 for q in (1, 2, 3) for f in (1, 2, 3)})


def oracle_recommend(matrix, user_id, n, k=10):
    """Plain-loop user CF: cosine over co-rated items, weighted-mean prediction."""
    own = matrix.get(user_id, {})
    if not own:
        return []
    sims = []
    for other in sorted(matrix):
        if other == user_id or not matrix[other]:
            continue
        co = sorted(set(own) & set(matrix[other]))
        if not co:
            continue
        dot = 0.0
        norm_a = 0.0
        norm_b = 0.0
        for item in co:
            dot += own[item] * matrix[other][item]
            norm_a += own[item] ** 2
            norm_b += matrix[other][item] ** 2
        denom = math.sqrt(norm_a) * math.sqrt(norm_b)
        if denom == 0.0:
            continue
        sim = dot / denom
        if sim > 0.0:
            sims.append((sim, other))
    sims.sort(key=lambda pair: (-pair[0], pair[1]))
    neighbors = sims[:k]
    if not neighbors:
        return []
    all_items = sorted({item for ratings in matrix.values() for item in ratings})
    scored = []
    for item in all_items:
        if item in own:
            continue
        num = 0.0
        den = 0.0
        for sim, other in neighbors:
            if item in matrix[other]:
                num += sim * matrix[other][item]
                den += sim
        if den > 0.0:
            scored.append((item, num / den))
    scored.sort(key=lambda pair: (-round(pair[1], 9), pair[0]))
    return scored[:n]


def random_matrix(rng, n_users, n_items, density=0.5):
    matrix = {}
    for u in range(n_users):
        row = {}
        for i in range(n_items):
            if rng.random() < density:
                row[f"rec{i:02d}"] = rng.choice(NRS_VALUES)
        matrix[f"user{u}"] = row
    return matrix


class TestKnownCases:
    def test_shared_taste_promotes_unseen_article(self):
        # A and B agree on X; B also loved Y, so A should see Y first.
        matrix = {"A": {"X": 1.0}, "B": {"X": 1.0, "Y": 1.0}}
        got = recommend_from_matrix(matrix, "A", n=5)
        assert got == [("Y", 1.0)]

    def test_single_user_gets_nothing(self):
        assert recommend_from_matrix({"A": {"X": 1.0}}, "A", n=5) == []

    def test_user_without_ratings_gets_nothing(self):
        matrix = {"A": {}, "B": {"X": 1.0, "Y": 1.0}}
        assert recommend_from_matrix(matrix, "A", n=5) == []

    def test_unknown_user_gets_nothing(self):
        matrix = {"B": {"X": 1.0}}
        assert recommend_from_matrix(matrix, "ghost", n=5) == []

    def test_rated_items_are_excluded(self):
        matrix = {
            "A": {"X": 1.0, "Y": 4 / 9},
            "B": {"X": 1.0, "Y": 1.0, "Z": 6 / 9},
        }
        got = recommend_from_matrix(matrix, "A", n=5)
        assert [item for item, _ in got] == ["Z"]

    def test_no_co_rated_items_means_no_neighbors(self):
        matrix = {"A": {"X": 1.0}, "B": {"Y": 1.0}}
        assert recommend_from_matrix(matrix, "A", n=5) == []

    def test_ties_break_by_record_id(self):
        matrix = {
            "A": {"X": 1.0},
            "B": {"X": 1.0, "M": 6 / 9, "Z": 6 / 9, "C": 6 / 9},
        }
        got = recommend_from_matrix(matrix, "A", n=5)
        assert [item for item, _ in got] == ["C", "M", "Z"]


class TestOracleEquivalence:
    def test_exhaustive_small_and_random_matrices(self):
        rng = random.Random(99)
        cases = 0
        for trial in range(400):
            n_users = rng.randint(1, 5)
            n_items = rng.randint(1, 10)
            matrix = random_matrix(rng, n_users, n_items, density=rng.uniform(0.1, 0.9))
            user = f"user{rng.randrange(n_users)}"
            n = rng.randint(1, n_items)
            got = recommend_from_matrix(matrix, user, n)
            expected = oracle_recommend(matrix, user, n)
            assert [item for item, _ in got] == [item for item, _ in expected]
            for (_, a), (_, b) in zip(got, expected):
                assert abs(a - b) <= 1e-9
            cases += 1
        assert cases == 400

    def test_permutation_invariance(self):
        rng = random.Random(7)
        for _ in range(50):
            matrix = random_matrix(rng, 4, 8)
            got = recommend_from_matrix(matrix, "user0", n=8)
            mapping = {f"rec{i:02d}": f"xx{(i * 7) % 100:02d}" for i in range(8)}
            renamed = {
                u: {mapping[i]: v for i, v in row.items()} for u, row in matrix.items()
            }
            got_renamed = recommend_from_matrix(renamed, "user0", n=8)
            # same multiset of scores; items map through the relabeling
            assert sorted(s for _, s in got) == sorted(s for _, s in got_renamed)
            assert {mapping[i] for i, _ in got} == {i for i, _ in got_renamed}


def test_build_matrix_normalizes():
    rows = [("rec1", "u1", 3, 3), ("rec2", "u1", 2, 2), ("rec1", "u2", 1, 1)]
    matrix = build_matrix(rows)
    assert matrix == {"u1": {"rec1": 1.0, "rec2": 4 / 9}, "u2": {"rec1": 1 / 9}}
