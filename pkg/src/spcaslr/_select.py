from __future__ import annotations

import numpy as np


def top_k_indices(scores, k: int) -> np.ndarray:
    """Indices of the ``k`` largest scores, ties resolved toward the lower index.

    Returned in increasing index order.
    """
    scores = np.asarray(scores, dtype=float)
    k = max(0, min(int(k), scores.size))
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:k])
