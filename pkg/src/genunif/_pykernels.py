"""Pure numpy implementations of the sampling/counting kernels.

Each function mirrors one in ``_ckernels.pyx`` and must return bit-identical
results for alias tables, alias lookups and collision scans.  Falling-factorial
sums may differ from the compiled version in the last ulp (summation order).
"""

import numpy as np

BACKEND = "python"


def build_alias(p):
    """Vose alias tables for probability vector ``p`` (must sum to 1)."""
    p = np.asarray(p, dtype=np.float64)
    k = p.shape[0]
    scaled = p * k
    prob = np.zeros(k, dtype=np.float64)
    alias = np.zeros(k, dtype=np.int64)
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    while small and large:
        lo = small.pop()
        hi = large.pop()
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        if scaled[hi] < 1.0:
            small.append(hi)
        else:
            large.append(hi)
    # leftovers are 1 up to rounding
    for i in large:
        prob[i] = 1.0
        alias[i] = i
    for i in small:
        prob[i] = 1.0
        alias[i] = i
    return prob, alias


def alias_lookup(prob, alias, u):
    """Map uniforms in [0, 1) to table indices (one uniform per draw)."""
    k = prob.shape[0]
    x = np.asarray(u, dtype=np.float64) * k
    idx = x.astype(np.int64)
    np.minimum(idx, k - 1, out=idx)
    frac = x - idx
    return np.where(frac < prob[idx], idx, alias[idx])


def scan_first_collision(ids, counts, r):
    """Scan dense ids, incrementing ``counts`` in place, until some id reaches ``r``.

    Returns the number of ids consumed (the colliding one included), or -1 when
    the chunk is exhausted first.  ``counts`` only reflects consumed ids.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        return -1
    order = np.argsort(ids, kind="stable")
    sorted_ids = ids[order]
    starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
    group_len = np.diff(np.r_[starts, sorted_ids.size])
    rank_sorted = np.arange(sorted_ids.size) - np.repeat(starts, group_len) + 1
    rank = np.empty_like(rank_sorted)
    rank[order] = rank_sorted
    hit = counts[ids] + rank >= r
    if hit.any():
        j = int(np.argmax(hit))
        np.add.at(counts, ids[: j + 1], 1)
        return j + 1
    np.add.at(counts, ids, 1)
    return -1


def _falling(c, r):
    c = np.asarray(c, dtype=np.float64)
    out = c.copy()
    for j in range(1, r):
        out *= c - j
    return out


def falling_factorial_sum(counts, r):
    """Sum over bins of n (n-1) ... (n-r+1), in float64."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size == 0:
        return 0.0
    return float(np.sum(_falling(counts, r)))


def segment_falling_factorials(ids, lengths, n_ids, rs):
    """Per-segment falling-factorial sums for consecutive segments of ``ids``.

    ``ids`` are dense in [0, n_ids); ``lengths`` partitions them into segments.
    Returns an array of shape (len(lengths), len(rs)).
    """
    ids = np.asarray(ids, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    n_seg = lengths.shape[0]
    out = np.zeros((n_seg, len(rs)), dtype=np.float64)
    if ids.size == 0:
        return out
    seg = np.repeat(np.arange(n_seg, dtype=np.int64), lengths)
    keys, cnt = np.unique(seg * n_ids + ids, return_counts=True)
    key_seg = keys // n_ids
    for col, r in enumerate(rs):
        out[:, col] = np.bincount(key_seg, weights=_falling(cnt, r), minlength=n_seg)
    return out
