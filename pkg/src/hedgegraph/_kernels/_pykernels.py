"""Pure numpy fallback for the compiled kernels.

Same contracts as ``_ckernels``; used when the extension is unbuilt or when
``HEDGEGRAPH_PURE_PYTHON=1`` forces it.
"""

from __future__ import annotations

import itertools

import numpy as np

# Quads are streamed in chunks so enumeration over large graphs stays
# memory-bounded. 2^18 quads * 4 int64 = 8 MiB per chunk.
_CHUNK = 1 << 18


def b2_count(sigma: np.ndarray) -> int:
    """Count apex patterns (one all-negative vertex over a positive triangle)
    among all 4-vertex subsets of a generic edge-sign matrix.

    ``sigma`` is a symmetric matrix with entries +1/-1 off the diagonal.
    """
    sigma = np.asarray(sigma)
    k = sigma.shape[0]
    if k < 4:
        return 0
    total = 0
    quads_iter = itertools.combinations(range(k), 4)
    while True:
        chunk = list(itertools.islice(quads_iter, _CHUNK))
        if not chunk:
            break
        quads = np.array(chunk, dtype=np.intp)
        a, b, c, d = quads.T
        neg = np.stack([
            sigma[a, b] < 0, sigma[a, c] < 0, sigma[a, d] < 0,
            sigma[b, c] < 0, sigma[b, d] < 0, sigma[c, d] < 0,
        ]).astype(np.int8)
        count = neg.sum(axis=0)
        # An apex pattern has exactly three negative edges, all at one vertex.
        deg_a = neg[0] + neg[1] + neg[2]
        deg_b = neg[0] + neg[3] + neg[4]
        deg_c = neg[1] + neg[3] + neg[5]
        deg_d = neg[2] + neg[4] + neg[5]
        star = (deg_a == 3) | (deg_b == 3) | (deg_c == 3) | (deg_d == 3)
        total += int(((count == 3) & star).sum())
    return total


def neg_degree_totals(signs: np.ndarray) -> np.ndarray:
    """Per-asset negative degree summed over days.

    ``signs`` is an N x T matrix of +1/-1 day signs; on each day every
    vertex is adjacent to all others, negatively to those of opposite sign.
    """
    signs = np.asarray(signs)
    n = signs.shape[0]
    pos = signs > 0
    n_pos = pos.sum(axis=0)
    per_day = np.where(pos, n - n_pos, n_pos)
    return per_day.sum(axis=1, dtype=np.int64)
