"""Ratings-based collaborative filtering over approved articles.

User-based CF on the normalized-rating matrix: cosine similarity restricted
to co-rated articles, up to ``K_NEIGHBORS`` positively similar neighbors,
and similarity-weighted mean prediction.  Predicted scores are quantized to
nine decimals before ordering so that ties (broken by ascending record id)
are well defined under floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

K_NEIGHBORS = 10
SIMILARITY_FLOOR = 0.0  # neighbors need similarity strictly above this
SCORE_DECIMALS = 9


@dataclass(frozen=True)
class RecommendationList:
    user_id: str
    items: list[tuple[str, float]]
    generated_at: datetime

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "items": [
                {"record_id": rid, "predicted_score": score} for rid, score in self.items
            ],
            "generated_at": self.generated_at.isoformat(),
        }


def build_matrix(rows: list[tuple[str, str, int, int]]) -> dict[str, dict[str, float]]:
    """(record_id, user_id, quality, familiarity) rows -> user -> item -> NRS."""
    matrix: dict[str, dict[str, float]] = {}
    for record_id, user_id, quality, familiarity in rows:
        matrix.setdefault(user_id, {})[record_id] = quality * familiarity / 9
    return matrix


def recommend_from_matrix(
    matrix: dict[str, dict[str, float]],
    user_id: str,
    n: int,
    k: int = K_NEIGHBORS,
    similarity_floor: float = SIMILARITY_FLOOR,
) -> list[tuple[str, float]]:
    """Top-n (record_id, predicted score) for the user; [] without ratings."""
    own = matrix.get(user_id)
    if not own:
        return []
    other_ids = sorted(u for u in matrix if u != user_id and matrix[u])
    if not other_ids:
        return []
    item_ids = sorted({i for ratings in matrix.values() for i in ratings})
    item_index = {item: idx for idx, item in enumerate(item_ids)}

    def to_vec(ratings: dict[str, float]) -> tuple[np.ndarray, np.ndarray]:
        vec = np.zeros(len(item_ids))
        mask = np.zeros(len(item_ids), dtype=bool)
        for item, value in ratings.items():
            vec[item_index[item]] = value
            mask[item_index[item]] = True
        return vec, mask

    own_vec, own_mask = to_vec(own)
    sims: list[tuple[float, str, np.ndarray, np.ndarray]] = []
    for other in other_ids:
        vec, mask = to_vec(matrix[other])
        co = own_mask & mask
        if not co.any():
            continue
        dot = float(np.dot(own_vec[co], vec[co]))
        denom = float(np.linalg.norm(own_vec[co]) * np.linalg.norm(vec[co]))
        if denom == 0.0:
            continue
        sim = dot / denom
        if sim > similarity_floor:
            sims.append((sim, other, vec, mask))
    sims.sort(key=lambda entry: (-entry[0], entry[1]))
    neighbors = sims[:k]
    if not neighbors:
        return []

    predictions: dict[str, float] = {}
    for idx, item in enumerate(item_ids):
        if own_mask[idx]:
            continue
        num = 0.0
        den = 0.0
        for sim, _, vec, mask in neighbors:
            if mask[idx]:
                num += sim * vec[idx]
                den += sim
        if den > 0.0:
            predictions[item] = num / den
    ranked = sorted(
        predictions.items(), key=lambda kv: (-round(kv[1], SCORE_DECIMALS), kv[0])
    )
    return ranked[:n]
