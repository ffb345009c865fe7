"""Problem data, group structure, and solver configuration types."""

import numpy as np
from dataclasses import dataclass, field


class GroupStructure:
    """Disjoint index groups covering all coefficients, with positive weights.

    Parameters
    ----------
    groups : sequence of array-like
        Nonempty, pairwise-disjoint sets of 0-based coefficient indices
        whose union is {0, ..., p-1}.
    weights : array-like, optional
        Positive weight per group; defaults to all ones.

    Notes
    -----
    Two access patterns are precomputed: ``group_id`` maps a coefficient
    to its group, and ``order``/``seg_starts`` lay all groups out
    contiguously so groupwise reductions run as single vectorized passes.
    """

    def __init__(self, groups, weights=None):
        if len(groups) == 0:
            raise ValueError("at least one group is required")
        self.groups = [np.asarray(g, dtype=np.intp).ravel() for g in groups]
        for l, g in enumerate(self.groups):
            if g.size == 0:
                raise ValueError("group %d is empty" % l)
        self.g = len(self.groups)
        self.sizes = np.array([g.size for g in self.groups], dtype=np.intp)
        self.order = np.concatenate(self.groups)
        self.p = int(self.order.size)
        sorted_idx = np.sort(self.order)
        expected = np.arange(self.p)
        if not np.array_equal(sorted_idx, expected):
            dup = sorted_idx[:-1][np.diff(sorted_idx) == 0]
            if dup.size:
                raise ValueError(
                    "overlapping groups: index %d appears more than once"
                    % int(dup[0]))
            bad = sorted_idx[(sorted_idx < 0) | (sorted_idx >= self.p)]
            raise ValueError(
                "uncovered index: groups must partition 0..%d (got stray "
                "index %d)" % (self.p - 1, int(bad[0])))
        if weights is None:
            self.weights = np.ones(self.g)
        else:
            self.weights = np.asarray(weights, dtype=float).ravel()
        if self.weights.size != self.g:
            raise ValueError(
                "dimension mismatch: %d weights for %d groups"
                % (self.weights.size, self.g))
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite entry in weights")
        if np.any(self.weights <= 0):
            l = int(np.nonzero(self.weights <= 0)[0][0])
            raise ValueError("nonpositive weight for group %d" % l)
        self.seg_starts = np.concatenate(
            ([0], np.cumsum(self.sizes))).astype(np.intp)
        self.group_id = np.empty(self.p, dtype=np.intp)
        self.group_id[self.order] = np.repeat(np.arange(self.g), self.sizes)

    @classmethod
    def singletons(cls, p, weights=None):
        """One group per coefficient (the plain lasso specialization)."""
        return cls([[j] for j in range(p)], weights=weights)

    @classmethod
    def contiguous(cls, p, group_size, weights=None):
        """Consecutive groups of equal size; ``p`` must be a multiple."""
        if p % group_size != 0:
            raise ValueError("p=%d is not a multiple of group_size=%d"
                             % (p, group_size))
        groups = [np.arange(l, l + group_size)
                  for l in range(0, p, group_size)]
        return cls(groups, weights=weights)

    def norms(self, v):
        """Euclidean norm of each group's slice of ``v``, as a g-vector."""
        v = np.asarray(v, dtype=float)
        sq = v[self.order] ** 2
        return np.sqrt(np.add.reduceat(sq, self.seg_starts[:-1]))

    def columns(self, group_ids):
        """Concatenated coefficient indices of the given groups."""
        if len(group_ids) == 0:
            return np.empty(0, dtype=np.intp)
        return np.concatenate([self.groups[l] for l in group_ids])


class ProblemData:
    """A regression instance: design matrix, response, group structure.

    Parameters
    ----------
    X : array, shape (n, p)
        Design matrix; one row per observation.
    y : array, shape (n,)
        Response vector.
    groups : GroupStructure
        Partition of the p coefficients.
    """

    def __init__(self, X, y, groups):
        self.X = np.ascontiguousarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float).ravel()
        self.groups = groups
        validate_problem(self)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def validate_problem(data):
    """Check every ProblemData invariant; raise on the first violation.

    ``data`` needs attributes X, y, groups. Returns None when the
    instance is valid and raises ValueError naming the first violated
    invariant (with the offending index) otherwise.
    """
    X = np.asarray(data.X)
    y = np.asarray(data.y)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d matrix, got ndim=%d" % X.ndim)
    n, p = X.shape
    if n < 2:
        raise ValueError("need n >= 2 observations, got n=%d" % n)
    if p < 1:
        raise ValueError("need p >= 1 covariates, got p=%d" % p)
    if y.ndim != 1 or y.size != n:
        raise ValueError(
            "dimension mismatch: y has length %d, X has %d rows"
            % (y.size, n))
    if not np.all(np.isfinite(X)):
        i, j = np.argwhere(~np.isfinite(X))[0]
        raise ValueError("non-finite entry in X at (%d, %d)" % (i, j))
    if not np.all(np.isfinite(y)):
        i = int(np.nonzero(~np.isfinite(y))[0][0])
        raise ValueError("non-finite entry in y at %d" % i)
    G = data.groups
    if not isinstance(G, GroupStructure):
        # re-validate duck-typed structures through the real constructor
        G = GroupStructure(G.groups, getattr(G, "weights", None))
    if G.p != p:
        raise ValueError(
            "dimension mismatch: groups cover %d indices, X has %d columns"
            % (G.p, p))
    return None


@dataclass
class SolverOptions:
    """Configuration of the augmented Lagrangian solver.

    Attributes
    ----------
    lam : float or "auto"
        Regularization level, or "auto" for the simulation-based rule.
    sigma0, tau : float
        Initial penalty parameter and proximal weight.
    sigma_growth, sigma_max : float
        Geometric growth factor (>= 1) and cap for the penalty.
    tol : float
        Target relative KKT residual.
    max_outer : int
        Outer iteration cap.
    delta_exponent : float
        Inner inexactness sequence delta_k = min(0.5, (k+1)**-q) with
        q = delta_exponent; any q > 1 keeps the sequence summable.
    mu_bar, eta_bar, tau_bar, delta_bar : float
        Newton line-search slope, inexactness cap, inexactness exponent,
        and backtracking ratio.
    max_inner, cg_max_iters : int
        Newton iteration cap per subproblem and CG iteration cap.
    newton_strategy : str
        "auto", "direct", "cg", or "woodbury".
    seed : int
        Seed for the lambda selection rule when lam="auto".
    """

    lam: object = "auto"
    sigma0: float = 1.0
    tau: float = 1.0
    sigma_growth: float = 1.5
    sigma_max: float = 1e6
    tol: float = 1e-6
    max_outer: int = 100
    delta_exponent: float = 1.5
    mu_bar: float = 1e-3
    eta_bar: float = 0.1
    tau_bar: float = 0.1
    delta_bar: float = 0.5
    max_inner: int = 100
    cg_max_iters: int = 500
    newton_strategy: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if self.lam != "auto" and not float(self.lam) > 0:
            raise ValueError("lam must be positive or 'auto'")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.sigma_growth >= 1:
            raise ValueError("sigma_growth must be >= 1")
        if not self.sigma_max > 0:
            raise ValueError("sigma_max must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.mu_bar < 0.5:
            raise ValueError("mu_bar must lie in (0, 1/2)")
        if not 0 < self.eta_bar < 1:
            raise ValueError("eta_bar must lie in (0, 1)")
        if not 0 < self.tau_bar <= 1:
            raise ValueError("tau_bar must lie in (0, 1]")
        if not 0 < self.delta_bar < 1:
            raise ValueError("delta_bar must lie in (0, 1)")
        if not self.delta_exponent > 1:
            raise ValueError("delta_exponent must exceed 1 (summability)")
        if self.newton_strategy not in ("auto", "direct", "cg", "woodbury"):
            raise ValueError(
                "unknown newton_strategy %r" % (self.newton_strategy,))

    def delta_k(self, k):
        """Inner-tolerance sequence value at outer iteration k."""
        return min(0.5, float(k + 1) ** (-self.delta_exponent))


@dataclass
class Solution:
    """Solver output: primal/dual iterates, residuals, and counters."""

    beta: np.ndarray
    s: np.ndarray
    w: np.ndarray
    eta_kkt: float
    eta_p: float
    eta_d: float
    pobj: float
    dobj: float
    relgap: float
    dual_infeas: float
    lam: float
    outer_iters: int
    total_newton_iters: int
    wall_time: float
    converged: bool
    trace: list = field(default_factory=list)
