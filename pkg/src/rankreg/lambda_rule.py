"""Simulation-based, tuning-free choice of the regularization level.

The gradient of the rank loss at the true coefficients is a pivotal
statistic: it depends on the data only through a uniformly random
permutation of the ranks. Simulating that permutation K times and
taking an upper quantile of the regularizer's dual norm gives a
regularization level that dominates the noise with high probability,
with no cross-validation.
"""

import numpy as np
from dataclasses import dataclass


@dataclass
class LambdaConfig:
    """Parameters of the selection rule.

    Attributes
    ----------
    c0 : float
        Multiplier (> 1) applied to the simulated quantile.
    alpha0 : float
        Upper tail mass in (0, 1); the rule uses the (1 - alpha0)
        empirical quantile.
    reps : int
        Number of simulated permutations K.
    seed : int or numpy.random.SeedSequence
        Seed of the permutation stream.
    """

    c0: float = 1.01
    alpha0: float = 0.1
    reps: int = 500
    seed: object = 0

    def __post_init__(self):
        if not self.c0 > 1:
            raise ValueError("c0 must exceed 1")
        if not 0 < self.alpha0 < 1:
            raise ValueError("alpha0 must lie in (0, 1)")
        if not self.reps >= 1:
            raise ValueError("reps must be >= 1")


def simulate_Sn(X, r):
    """Pivotal score vector for one permutation of the ranks.

    Given ranks r (a permutation of 1..n), returns
    S_n = -(2/(n(n-1))) X^T xi with xi = 2 r - (n + 1).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    r = np.asarray(r)
    if r.size != n or not np.array_equal(np.sort(r), np.arange(1, n + 1)):
        raise ValueError("r must be a permutation of 1..n")
    xi = 2.0 * r - (n + 1.0)
    return -(2.0 / (n * (n - 1.0))) * (X.T @ xi)


def _dual_norms_batch(S, G):
    """Dual norm of each column of the p-by-k matrix S."""
    sq = S[G.order] ** 2
    gn = np.sqrt(np.add.reduceat(sq, G.seg_starts[:-1], axis=0))
    return (gn / G.weights[:, None]).max(axis=0)


def quantile_index(alpha0, reps):
    """0-based order-statistic index of the (1 - alpha0) quantile.

    Convention: the ceil((1 - alpha0) * K)-th smallest of K values,
    clamped to a valid order statistic.
    """
    idx = int(np.ceil((1.0 - alpha0) * reps))
    return min(max(idx, 1), reps) - 1


def select_lambda(X, G, cfg=None):
    """Simulate K rank permutations and return the scaled quantile.

    Deterministic in (X, G, cfg): replicate k draws its permutation
    from the k-th spawned child of the seed, so any parallel execution
    order yields the same result. Returns
    c0 * (empirical (1 - alpha0)-quantile of the K dual norms).
    """
    if cfg is None:
        cfg = LambdaConfig()
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n < 2:
        raise ValueError("need n >= 2, got n=%d" % n)
    vals = simulate_dual_norms(X, G, cfg)
    vals.sort()
    return float(cfg.c0 * vals[quantile_index(cfg.alpha0, cfg.reps)])


def simulate_dual_norms(X, G, cfg):
    """The K simulated dual-norm values behind select_lambda, unsorted."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    root = cfg.seed
    if not isinstance(root, np.random.SeedSequence):
        root = np.random.SeedSequence(root)
    children = root.spawn(cfg.reps)
    scale = -2.0 / (n * (n - 1.0))
    vals = np.empty(cfg.reps)
    # batch the X^T multiplications; keep each slab around 64 MB
    chunk = max(1, min(cfg.reps, int(8e6 // max(p, 1)) or 1))
    for lo in range(0, cfg.reps, chunk):
        hi = min(lo + chunk, cfg.reps)
        Xi = np.empty((n, hi - lo))
        for k in range(lo, hi):
            rng = np.random.default_rng(children[k])
            ranks = rng.permutation(n) + 1
            Xi[:, k - lo] = 2.0 * ranks - (n + 1.0)
        S = scale * (X.T @ Xi)
        vals[lo:hi] = _dual_norms_batch(S, G)
    return vals
