"""Semismooth Newton solver for the augmented Lagrangian subproblem.

Each outer iteration minimizes over the dual variable w the function

    psi(w) = <y, w> + (sigma/2)||u||^2 - sigma * env_L(u)
           + (sigma lam^2 / 2)||b||^2 - sigma lam^2 * env_Psi(b)
           - (||s_k||^2 + ||beta_k||^2) / (2 sigma)
           + (tau / 2 sigma) ||w - w_k||^2,

with u = s_k/sigma + w, b = beta_k/(sigma lam) - X^T w / lam, and
env_f(x) = f(prox_f(x)) + ||prox_f(x) - x||^2 / 2. psi is strongly
convex and C^1; its gradient is assembled from the two proximal maps,
whose scaled outputs are exactly the multiplier updates of the outer
loop. The generalized Hessian is a positive diagonal plus a low-rank
term built from the tied residual blocks and the active groups, so the
Newton system is solved in one of three ways keyed to that rank:
dense factorization, preconditioned conjugate gradients, or a
diagonal-plus-low-rank inverse.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.linalg import cg as _cg, LinearOperator

from .model import SolverOptions
from .rank_loss import rho_weights, prox_rank_loss, jacobian_rank_apply
from .group_reg import prox_group, eval_group_norm


class Subproblem:
    """One inner minimization: data plus the anchor triple (s, beta, w).

    Parameters
    ----------
    X, y : data of the instance.
    G : GroupStructure
    lam : float
        Regularization level.
    s_k, beta_k, w_k : arrays
        Anchors from the current outer iterate.
    sigma, tau : float
        Penalty parameter and proximal weight.
    """

    def __init__(self, X, y, G, lam, s_k, beta_k, w_k, sigma, tau):
        if not sigma > 0 or not tau > 0:
            raise ValueError("sigma and tau must be positive")
        self.X = X
        self.y = y
        self.G = G
        self.lam = float(lam)
        self.s_k = s_k
        self.beta_k = beta_k
        self.w_k = w_k
        self.sigma = float(sigma)
        self.tau = float(tau)
        self.n = y.size
        self.rho = rho_weights(self.n)
        self.psi_const = -(np.dot(s_k, s_k) + np.dot(beta_k, beta_k)) \
            / (2.0 * self.sigma)


class GradInfo:
    """Everything grad_psi knows at one point w.

    Attributes include the gradient, the candidate multiplier updates
    s_candidate / beta_candidate (beta_candidate is group-sparse), the
    tied-block and active-group structures behind them, beta_tilde (the
    group prox input), psi, and the cached products X^T w and
    X beta_candidate.
    """

    __slots__ = ("w", "Xtw", "psi", "u", "v", "blocks", "s_candidate",
                 "beta_tilde", "active", "beta_candidate", "gradient",
                 "grad_norm", "Xbeta_cand", "cols", "Xact")

    def __iter__(self):
        # allow tuple-style unpacking of the documented quintuple
        return iter((self.gradient, self.s_candidate, self.beta_candidate,
                     self.blocks, self.active))


def _pack(sub, w, Xtw):
    """Prox-derived state and psi at w; no X products beyond Xtw."""
    info = GradInfo()
    info.w = w
    info.Xtw = Xtw
    sigma, lam, tau = sub.sigma, sub.lam, sub.tau
    u = sub.s_k / sigma + w
    v, blocks = prox_rank_loss(u, 1.0)
    loss_v = float(np.dot(sub.rho, v[blocks.perm]))
    beta_tilde = sub.beta_k / (sigma * lam) - Xtw / lam
    P, active = prox_group(beta_tilde, sub.G, 1.0)
    dw = w - sub.w_k
    psi = (np.dot(sub.y, w)
           + sigma * (0.5 * np.dot(u, u) - loss_v
                      - 0.5 * np.dot(v - u, v - u))
           + sigma * lam ** 2 * (0.5 * np.dot(beta_tilde, beta_tilde)
                                 - eval_group_norm(P, sub.G)
                                 - 0.5 * np.dot(P - beta_tilde,
                                                P - beta_tilde))
           + sub.psi_const
           + 0.5 * (tau / sigma) * np.dot(dw, dw))
    info.u = u
    info.v = v
    info.blocks = blocks
    info.s_candidate = sigma * v
    info.beta_tilde = beta_tilde
    info.active = active
    info.beta_candidate = (sigma * lam) * P
    info.psi = float(psi)
    return info


def _finish_gradient(sub, info):
    """Fill in the gradient (one sparse X product) on a packed point."""
    cols = sub.G.columns(info.active.indices)
    info.cols = cols
    if cols.size:
        info.Xact = sub.X[:, cols]
        info.Xbeta_cand = info.Xact @ info.beta_candidate[cols]
    else:
        info.Xact = np.empty((sub.n, 0))
        info.Xbeta_cand = np.zeros(sub.n)
    info.gradient = (sub.y + info.s_candidate - info.Xbeta_cand
                     + (sub.tau / sub.sigma) * (info.w - sub.w_k))
    info.grad_norm = float(np.linalg.norm(info.gradient))
    return info


def eval_psi(sub, w):
    """Value of the subproblem objective at w."""
    w = np.asarray(w, dtype=float)
    return _pack(sub, w, sub.X.T @ w).psi


def grad_psi(sub, w):
    """Gradient of psi at w, with the candidate updates it is built from.

    The result carries (gradient, s_candidate, beta_candidate, blocks,
    active) as attributes and unpacks as that tuple; s_candidate and
    beta_candidate are exactly the outer loop's multiplier update
    formulas evaluated at w, from a single prox evaluation.
    """
    w = np.asarray(w, dtype=float)
    return _finish_gradient(sub, _pack(sub, w, sub.X.T @ w))


class NewtonSystem:
    """The generalized Hessian at a point, in diagonal + low-rank form.

    H = (tau/sigma) I + sigma * B + sigma * (Xi Xi^T + Ups Ups^T),

    where B averages within each tied residual block (identity on
    singletons), Xi stacks the active groups' design columns scaled by
    sqrt(1 - w_l/||b_l||), and Ups has one column per active group,
    sqrt(w_l/||b_l||^3) X_l b_l. The low-rank width r counts the
    multi-entry tied blocks plus all Xi and Ups columns.
    """

    def __init__(self, sigma, tau, blocks, Xi, Ups, diag, r):
        self.sigma = sigma
        self.tau = tau
        self.blocks = blocks
        self.Xi = Xi
        self.Ups = Ups
        self.diag = diag
        self.r = int(r)
        self.n = int(diag.size)
        self.cg_fallbacks = 0
        # Levenberg shift added by the solver when plain Newton steps
        # overshoot; zero means the pure generalized Hessian
        self.shift = 0.0

    def matvec(self, d):
        sigma = self.sigma
        out = (self.tau / sigma + self.shift) * d
        out += sigma * jacobian_rank_apply(self.blocks, d)
        if self.Xi.shape[1]:
            out += sigma * (self.Xi @ (self.Xi.T @ d))
        if self.Ups.shape[1]:
            out += sigma * (self.Ups @ (self.Ups.T @ d))
        return out

    def true_diag(self):
        """Exact diagonal of H (used as the CG preconditioner)."""
        b = self.blocks
        avg = np.repeat(1.0 / b.block_sizes, b.block_sizes)
        d = np.empty(self.n)
        d[b.perm] = avg
        d = self.tau / self.sigma + self.shift + self.sigma * d
        if self.Xi.shape[1]:
            d += self.sigma * np.einsum("ij,ij->i", self.Xi, self.Xi)
        if self.Ups.shape[1]:
            d += self.sigma * np.einsum("ij,ij->i", self.Ups, self.Ups)
        return d

    def dense(self):
        """Materialize H (direct strategy only)."""
        n, sigma = self.n, self.sigma
        H = np.zeros((n, n))
        H[np.diag_indices(n)] = self.diag + self.shift
        b = self.blocks
        for i in range(b.block_sizes.size):
            size = b.block_sizes[i]
            if size > 1:
                st = b.block_starts[i]
                idx = b.perm[st:st + size]
                H[np.ix_(idx, idx)] += sigma / size
        if self.Xi.shape[1]:
            H += sigma * (self.Xi @ self.Xi.T)
        if self.Ups.shape[1]:
            H += sigma * (self.Ups @ self.Ups.T)
        return H

    def low_rank_factor(self):
        """The n-by-r factor U with H = Diag(diag) + sigma U U^T."""
        b = self.blocks
        multi = np.nonzero(b.block_sizes > 1)[0]
        Theta = np.zeros((self.n, multi.size))
        for j, i in enumerate(multi):
            st = b.block_starts[i]
            size = b.block_sizes[i]
            Theta[b.perm[st:st + size], j] = 1.0 / np.sqrt(size)
        return np.hstack([Theta, self.Xi, self.Ups])


def assemble_hessian(sub, blocks, active, beta_tilde, Xact=None, cols=None):
    """Build the NewtonSystem at the point the arguments came from.

    blocks/active/beta_tilde must come from grad_psi at the current w.
    Xact/cols (the active design columns) are reused when provided;
    assembling them dominates the cost at O(n * total active size).
    """
    G = sub.G
    sigma, tau = sub.sigma, sub.tau
    n = sub.n
    if cols is None:
        cols = G.columns(active.indices)
        Xact = sub.X[:, cols] if cols.size else np.empty((n, 0))
    sizes = G.sizes[active.indices]
    if active.indices.size:
        wl = G.weights[active.indices]
        xi_coef = np.sqrt(1.0 - wl / active.norms)
        Xi = Xact * np.repeat(xi_coef, sizes)
        ups_coef = np.sqrt(wl / active.norms ** 3)
        Ups = np.empty((n, active.indices.size))
        pos = 0
        for j, l in enumerate(active.indices):
            seg = slice(pos, pos + sizes[j])
            Ups[:, j] = Xact[:, seg] @ beta_tilde[G.groups[l]]
            pos += sizes[j]
        Ups *= ups_coef
    else:
        Xi = np.empty((n, 0))
        Ups = np.empty((n, 0))
    single = np.repeat(blocks.block_sizes == 1, blocks.block_sizes)
    theta = np.empty(n)
    theta[blocks.perm] = single.astype(float)
    diag = tau / sigma + sigma * theta
    n_multi = int(np.count_nonzero(blocks.block_sizes > 1))
    r = n_multi + Xi.shape[1] + Ups.shape[1]
    return NewtonSystem(sigma, tau, blocks, Xi, Ups, diag, r)


def hessian_matvec(sys, d):
    """H d in O(n r) using block sums and the low-rank factors."""
    return sys.matvec(np.asarray(d, dtype=float))


def _solve_woodbury(sys, b):
    U = sys.low_rank_factor()
    D = sys.diag + sys.shift
    binv = b / D
    if U.shape[1] == 0:
        return binv
    UD = U / D[:, None]
    K = np.eye(U.shape[1]) + sys.sigma * (U.T @ UD)
    c, low = cho_factor(K)
    return binv - sys.sigma * (UD @ cho_solve((c, low), U.T @ binv))


def _resolve_strategy(sys, strategy):
    if strategy != "auto":
        return strategy
    n, r = sys.n, sys.r
    # a dense factorization at this size costs about as much as a
    # handful of matvecs and is far more robust once sigma is large
    if n <= 800:
        return "direct"
    if r <= n / 4:
        return "woodbury"
    return "cg"


def solve_newton(sys, grad, strategy="auto", tol=1e-9, cg_max_iters=500):
    """Direction d with H d = -grad, to residual norm at most tol.

    direct and woodbury solve exactly (up to factorization roundoff);
    cg iterates with a diagonal preconditioner from the zero vector and
    falls back to the woodbury solve if the iteration cap is reached.
    """
    b = -np.asarray(grad, dtype=float)
    how = _resolve_strategy(sys, strategy)
    if how == "direct":
        c, low = cho_factor(sys.dense())
        return cho_solve((c, low), b)
    if how == "woodbury":
        return _solve_woodbury(sys, b)
    if how != "cg":
        raise ValueError("unknown strategy %r" % (strategy,))
    dpre = sys.true_diag()
    A = LinearOperator((sys.n, sys.n), matvec=sys.matvec)
    M = LinearOperator((sys.n, sys.n), matvec=lambda v: v / dpre)
    d, code = _cg(A, b, rtol=0.0, atol=tol, maxiter=cg_max_iters, M=M)
    if code == 0:
        # the recursion-based residual inside cg drifts from the true
        # one on ill-conditioned systems; trust only a direct check
        resid = float(np.linalg.norm(sys.matvec(d) - b))
        if resid <= max(tol, 1e-6 * np.linalg.norm(b)):
            return d
    sys.cg_fallbacks += 1
    if sys.n <= 4000:
        c, low = cho_factor(sys.dense())
        return cho_solve((c, low), b)
    return _solve_woodbury(sys, b)


class SsnResult:
    """Outcome of one subproblem solve."""

    __slots__ = ("w", "s_cand", "beta_cand", "iters", "last_grad_norm",
                 "info", "stop_reason", "grad_norms", "backtrack_failures")

    def __init__(self, info, iters, stop_reason, grad_norms, bt_failures):
        self.w = info.w
        self.s_cand = info.s_candidate
        self.beta_cand = info.beta_candidate
        self.iters = iters
        self.last_grad_norm = info.grad_norm
        self.info = info
        self.stop_reason = stop_reason
        self.grad_norms = grad_norms
        self.backtrack_failures = bt_failures


def ssn_solve(sub, w0, stop, opts=None):
    """Newton iterations with Armijo backtracking until ``stop`` fires.

    stop(info) inspects a GradInfo (gradient, candidates, cached
    products) and returns a truthy stop reason when the outer loop's
    inexactness rule accepts the point; it is checked before the first
    step, so a started-at-the-minimizer call returns with 0 iterations.
    Every accepted step decreases psi up to a roundoff allowance; deep
    in the tail, where the model decrease drops below the floating
    point resolution of psi, unit steps are accepted on gradient
    progress alone and the loop returns "stalled" once not even that
    is attainable.
    """
    if opts is None:
        opts = SolverOptions()
    w = np.asarray(w0, dtype=float).copy()
    Xtw = sub.X.T @ w
    info = _finish_gradient(sub, _pack(sub, w, Xtw))
    grad_norms = [info.grad_norm]
    iters = 0
    bt_failures = 0
    lm = 0.0
    while True:
        reason = stop(info)
        if reason:
            return SsnResult(info, iters, reason, grad_norms, bt_failures)
        if iters >= opts.max_inner:
            return SsnResult(info, iters, "max_inner", grad_norms,
                             bt_failures)
        sys = assemble_hessian(sub, info.blocks, info.active,
                               info.beta_tilde, info.Xact, info.cols)
        # Levenberg shift proportional to the gradient norm: the
        # generalized Hessian has only tau/sigma curvature across tied
        # residual blocks, so undamped steps can overshoot far past the
        # kinks of psi; scaling with |g| keeps the local superlinear
        # rate intact while the backtracking feedback sizes the factor
        sys.shift = lm * info.grad_norm
        tol_j = max(min(opts.eta_bar,
                        info.grad_norm ** (1.0 + opts.tau_bar)), 1e-14)
        d = solve_newton(sys, info.gradient, opts.newton_strategy, tol_j,
                         opts.cg_max_iters)
        gd = float(info.gradient @ d)
        if not gd < 0:
            if not d.any():
                # zero step: the gradient already sits below the linear
                # solver's tolerance, nothing left to gain
                return SsnResult(info, iters, "stalled", grad_norms,
                                 bt_failures)
            raise RuntimeError(
                "Newton direction is not a descent direction "
                "(<g,d> = %.3e); the system should be positive definite"
                % gd)
        # psi values carry O(eps * |psi|) noise, so sufficient-decrease
        # tests finer than that are meaningless
        slack = 32.0 * np.finfo(float).eps * max(1.0, abs(info.psi))
        at_noise_floor = -opts.mu_bar * gd <= slack
        Xtd = sub.X.T @ d
        alpha = 1.0
        accepted = None
        best = None
        backtracks = 0
        for _ in range(50):
            w_t = w + alpha * d
            trial = _pack(sub, w_t, Xtw + alpha * Xtd)
            if best is None or trial.psi < best.psi:
                best = trial
            if trial.psi <= info.psi + opts.mu_bar * alpha * gd + slack:
                accepted = trial
                break
            alpha *= opts.delta_bar
            backtracks += 1
        if accepted is None:
            # wildly unlikely with a PD system; take the best trial
            bt_failures += 1
            accepted = best
        if backtracks == 0:
            lm *= 0.25
        elif backtracks >= 3:
            lm = max(4.0 * lm, 0.01)
        new_info = _finish_gradient(sub, accepted)
        if at_noise_floor and new_info.grad_norm >= info.grad_norm:
            # the step was accepted only through the roundoff allowance
            # and did not reduce the gradient either: keep the better
            # point, no further numerical progress is possible
            return SsnResult(info, iters, "stalled", grad_norms,
                             bt_failures)
        w = accepted.w
        Xtw = accepted.Xtw
        info = new_info
        iters += 1
        grad_norms.append(info.grad_norm)
