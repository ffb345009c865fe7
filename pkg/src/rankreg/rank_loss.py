"""Wilcoxon rank loss: sorted evaluation, proximal map, block Jacobian.

The loss is the mean absolute pairwise difference

    L(u) = (1/(n(n-1))) * sum_{i != j} |u_i - u_j|,

which equals the inner product of the sorted (descending) vector with a
fixed, strictly decreasing weight vector, so a single sort evaluates it.
Its proximal map is the isotonic projection of the sorted input shifted
by those weights, and the generalized Jacobian of the prox averages
within each tied block of the projection.
"""

import numpy as np
from scipy.optimize import isotonic_regression

# adjacent projected values closer than this (relative) are fused into
# one Jacobian block
_BLOCK_TOL = 1e-12


def rho_weights(n):
    """Sorted-evaluation weight vector of length n.

    Entry k (1-based) is (2n - 4k + 2) / (n(n-1)): strictly decreasing,
    antisymmetric, summing to zero.
    """
    if n < 2:
        raise ValueError("need n >= 2, got n=%d" % n)
    k = np.arange(1, n + 1, dtype=float)
    return (2.0 * n - 4.0 * k + 2.0) / (n * (n - 1.0))


def eval_rank_loss(u):
    """Evaluate the rank loss in O(n log n) via a descending sort."""
    u = np.asarray(u, dtype=float)
    rho = rho_weights(u.size)
    return float(np.dot(rho, np.sort(u)[::-1]))


def project_monotone(z):
    """Euclidean projection onto the nonincreasing cone, by PAVA."""
    z = np.asarray(z, dtype=float)
    if z.size <= 1:
        return z.copy()
    return isotonic_regression(z, increasing=False).x


class MonotoneBlocks:
    """Tied-block structure of a monotone projection.

    Attributes
    ----------
    perm : int array, shape (n,)
        Descending stable sort order of the prox input: input[perm] is
        nonincreasing.
    block_starts : int array
        Start offsets (into sorted coordinates) of the maximal tied
        blocks of the projected vector; first entry is 0.
    block_values : float array
        Projected value of each block, strictly decreasing.
    """

    def __init__(self, perm, block_starts, block_values):
        self.perm = perm
        self.block_starts = block_starts
        self.block_values = block_values
        self.n = int(perm.size)
        self.block_sizes = np.diff(np.append(block_starts, self.n))

    def reconstruct(self):
        """The projected vector in original coordinates."""
        v = np.repeat(self.block_values, self.block_sizes)
        out = np.empty(self.n)
        out[self.perm] = v
        return out


def _tied_blocks(v):
    """Start offsets of maximal runs of (numerically) equal values."""
    if v.size == 0:
        return np.zeros(1, dtype=np.intp)
    drop = v[:-1] - v[1:]
    ref = np.maximum(1.0, np.maximum(np.abs(v[:-1]), np.abs(v[1:])))
    breaks = np.nonzero(drop > _BLOCK_TOL * ref)[0] + 1
    return np.concatenate(([0], breaks)).astype(np.intp)


def prox_rank_loss(s, scale=1.0):
    """Proximal map of scale * L, with its tied-block structure.

    Returns the pair (value, blocks) where value minimizes
    scale * L(v) + ||v - s||^2 / 2 and blocks records the descending
    sort permutation plus the tied blocks of the sorted projection
    (the data the prox Jacobian needs).
    """
    s = np.asarray(s, dtype=float)
    if not scale > 0:
        raise ValueError("scale must be positive")
    n = s.size
    rho = rho_weights(n)
    perm = np.argsort(-s, kind="stable")
    z = s[perm] - scale * rho
    v = isotonic_regression(z, increasing=False).x
    starts = _tied_blocks(v)
    blocks = MonotoneBlocks(perm, starts, v[starts])
    value = np.empty(n)
    value[perm] = v
    return value, blocks


def jacobian_rank_apply(blocks, d):
    """Apply the prox Jacobian encoded by ``blocks`` to ``d``.

    In sorted coordinates the map averages d within each tied block and
    leaves singleton blocks unchanged; it is symmetric, idempotent, and
    nonexpansive. O(n).
    """
    d = np.asarray(d, dtype=float)
    if d.size != blocks.n:
        raise ValueError(
            "stale blocks: expected length %d, got %d" % (blocks.n, d.size))
    ds = d[blocks.perm]
    sums = np.add.reduceat(ds, blocks.block_starts)
    means = sums / blocks.block_sizes
    out = np.empty(blocks.n)
    out[blocks.perm] = np.repeat(means, blocks.block_sizes)
    return out
