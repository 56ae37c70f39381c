"""Index bookkeeping for symmetric third-order tensors.

Canonical triples are stored 0-based with i <= j <= k, sorted lexicographically.
Every public interface of the package speaks 1-based indices; conversion happens
at the boundary (schemas, repositories, commands) only.
"""
from functools import lru_cache

import numpy as np

_PERMUTATIONS = np.array([[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]])


def multiplicity(i: int, j: int, k: int) -> int:
    """Orbit size of a triple under index permutation."""
    distinct = len({i, j, k})
    return {1: 1, 2: 3, 3: 6}[distinct]


def multiplicities(triples: np.ndarray) -> np.ndarray:
    triples = np.asarray(triples)
    if triples.size == 0:
        return np.zeros(0, dtype=np.int64)
    i, j, k = triples[:, 0], triples[:, 1], triples[:, 2]
    equal_pairs = (i == j).astype(np.int64) + (j == k) + (i == k)
    # 0 equal pairs -> 6, 1 -> 3, 3 -> 1
    return np.where(equal_pairs == 0, 6, np.where(equal_pairs == 1, 3, 1)).astype(np.int64)


def count_canonical(d: int) -> int:
    return d * (d + 1) * (d + 2) // 6


@lru_cache(maxsize=8)
def _canonical_triples_cached(d: int) -> np.ndarray:
    i, j, k = np.meshgrid(np.arange(d), np.arange(d), np.arange(d), indexing='ij')
    mask = (i <= j) & (j <= k)
    triples = np.stack([i[mask], j[mask], k[mask]], axis=1).astype(np.int64)
    triples.setflags(write=False)
    return triples


def canonical_triples(d: int) -> np.ndarray:
    """All C(d+2, 3) canonical triples (0-based) in lexicographic order."""
    return _canonical_triples_cached(int(d))


def linear_keys(triples: np.ndarray, d: int) -> np.ndarray:
    triples = np.asarray(triples, dtype=np.int64)
    return (triples[:, 0] * d + triples[:, 1]) * d + triples[:, 2]


def symmetric_closure(triples: np.ndarray, values: np.ndarray = None):
    """Expands canonical triples into every distinct permutation, each listed once.

    Returns (I, J, K, values, source) where ``source`` maps each ordered triple back
    to the row of the canonical triple it came from. The output order is a fixed
    function of the input order, so reductions over it are reproducible.
    """
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    n = triples.shape[0]
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, np.zeros(0), empty
    permuted = triples[:, _PERMUTATIONS]
    d = int(triples.max()) + 1
    keys = (permuted[:, :, 0] * d + permuted[:, :, 1]) * d + permuted[:, :, 2]
    keep = np.ones((n, 6), dtype=bool)
    for a in range(1, 6):
        for b in range(a):
            keep[:, a] &= keys[:, a] != keys[:, b]
    rows, cols = np.nonzero(keep)
    ordered = permuted[rows, cols]
    closure_values = np.zeros(rows.shape[0]) if values is None else np.asarray(values, dtype=float)[rows]
    return ordered[:, 0], ordered[:, 1], ordered[:, 2], closure_values, rows
