"""Optimal bipartite assignment on dense cost matrices."""

from __future__ import annotations

import numpy as np

from .errors import EgoHoiError


def hungarian(cost) -> list[tuple[int, int]]:
    """Minimum-cost assignment of size min(n, m) on an (n, m) cost matrix.

    O(n^2 m) potentials-and-augmenting-path algorithm. Scanning is in
    ascending index order, so ties resolve toward the lowest row and column
    and the result is deterministic. Pairs are returned sorted by row.
    """
    matrix = np.asarray(cost, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise EgoHoiError(f"cost matrix must be 2-d and non-empty, got shape {matrix.shape}")
    if np.isnan(matrix).any():
        raise EgoHoiError("cost matrix contains NaN")
    if not np.isfinite(matrix).all():
        raise EgoHoiError("cost matrix contains infinite values")

    transposed = matrix.shape[0] > matrix.shape[1]
    if transposed:
        matrix = matrix.T
    n, m = matrix.shape

    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    match_col = [0] * (m + 1)  # match_col[j] = row matched to column j (1-based, 0 = free)
    way = [0] * (m + 1)

    for i in range(1, n + 1):
        match_col[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            delta = INF
            j1 = -1
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = matrix[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1

    pairs = []
    for j in range(1, m + 1):
        if match_col[j] != 0:
            row, col = match_col[j] - 1, j - 1
            pairs.append((col, row) if transposed else (row, col))
    pairs.sort()
    return pairs


def assignment_cost(cost, pairs) -> float:
    matrix = np.asarray(cost, dtype=np.float64)
    return float(sum(matrix[r, c] for r, c in pairs))
