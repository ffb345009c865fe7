"""Independent reference implementations used only by the tests.

Everything here favors obviousness over speed: quadratic-time sums,
exhaustive enumeration over partitions or permutations, and generic
convex solvers. None of it shares code with the package.
"""

import itertools

import numpy as np

import rankreg


def pairwise_rank_loss(u):
    """O(n^2) double-sum definition of the rank loss."""
    u = np.asarray(u, dtype=float)
    n = u.size
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += abs(u[i] - u[j])
    return total / (n * (n - 1.0))


def monotone_project_bruteforce(z):
    """Exact projection onto the nonincreasing cone by enumeration.

    The projection is piecewise constant on contiguous blocks with each
    block at the mean of its entries, so trying every one of the
    2^(n-1) contiguous partitions and keeping the feasible candidate
    closest to z recovers it exactly.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    if n == 1:
        return z.copy()
    best = None
    best_dist = np.inf
    for mask in range(2 ** (n - 1)):
        cuts = [0] + [i + 1 for i in range(n - 1) if (mask >> i) & 1] + [n]
        cand = np.empty(n)
        means = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            m = z[a:b].mean()
            means.append(m)
            cand[a:b] = m
        feasible = all(means[i] >= means[i + 1] - 1e-12
                       for i in range(len(means) - 1))
        if not feasible:
            continue
        dist = float(np.dot(cand - z, cand - z))
        if dist < best_dist:
            best_dist = dist
            best = cand
    return best


def prox_rank_bruteforce(s, scale=1.0):
    """Prox of scale * rank loss via the sort + cone-projection identity,
    with the projection done by exhaustive enumeration."""
    s = np.asarray(s, dtype=float)
    n = s.size
    rho = rankreg.rho_weights(n)
    perm = np.argsort(-s, kind="stable")
    v = monotone_project_bruteforce(s[perm] - scale * rho)
    out = np.empty(n)
    out[perm] = v
    return out


def cvxpy_prox_rank(s, scale=1.0):
    """Prox of scale * rank loss through a generic convex solver."""
    import cvxpy as cp
    s = np.asarray(s, dtype=float)
    n = s.size
    v = cp.Variable(n)
    loss = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            loss += 2.0 * cp.abs(v[i] - v[j])
    loss = loss / (n * (n - 1.0))
    prob = cp.Problem(cp.Minimize(0.5 * cp.sum_squares(v - s)
                                  + scale * loss))
    prob.solve(solver=cp.CLARABEL)
    return np.asarray(v.value, dtype=float)


def cvxpy_objective(X, y, G, lam):
    """High-accuracy optimal objective of the penalized rank regression."""
    import cvxpy as cp
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    beta = cp.Variable(X.shape[1])
    u = X @ beta - y
    loss = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            loss += 2.0 * cp.abs(u[i] - u[j])
    loss = loss / (n * (n - 1.0))
    pen = sum(float(G.weights[l]) * cp.norm(beta[np.asarray(G.groups[l])])
              for l in range(G.g))
    prob = cp.Problem(cp.Minimize(loss + lam * pen))
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def exact_lambda_small_n(X, G, c0, alpha0):
    """The selection rule's population value by exhaustive enumeration.

    Enumerates all n! rank permutations (n small), computes the dual
    norm of each pivotal score, and returns c0 times the smallest value
    t with P(value <= t) >= 1 - alpha0.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    vals = []
    for perm in itertools.permutations(range(1, n + 1)):
        S = rankreg.simulate_Sn(X, np.array(perm))
        vals.append(rankreg.dual_norm(S, G))
    vals = np.sort(np.array(vals))
    k = vals.size
    cdf = np.arange(1, k + 1) / k
    idx = int(np.argmax(cdf >= 1.0 - alpha0))
    return float(c0 * vals[idx])


def dense_covariance_model_error(beta_hat, beta_star, X):
    """Model error through the explicit p-by-p sample covariance."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    sigma = (Xc.T @ Xc) / n
    d = np.asarray(beta_hat, dtype=float) - np.asarray(beta_star,
                                                       dtype=float)
    return float(d @ sigma @ d)
