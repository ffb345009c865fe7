"""Proximal augmented Lagrangian outer loop with KKT-residual stopping.

The solver works on the dual of the constrained form

    min_{beta, s}  L(s) + lam * Psi(beta)   s.t.  X beta - s = y,

keeping a primal-dual triple (w; s, beta). Each outer iteration
minimizes the proximal augmented Lagrangian in w by a semismooth
Newton method, updates the multipliers through the same proximal maps
the gradient was built from, and grows the penalty parameter
geometrically. Convergence is declared on the relative KKT residual

    eta_p = ||X beta - s - y|| / (1 + ||y||),
    eta_d = max( ||s - prox_L(w + s)|| / (1 + ||s||),
                 ||beta - prox_{lam Psi}(beta - X^T w)|| / (1 + ||beta||) ).
"""

import os
import sys as _sys
import time

import numpy as np

from .model import SolverOptions, Solution
from .rank_loss import eval_rank_loss, prox_rank_loss
from .group_reg import eval_group_norm, prox_group
from .ssn import Subproblem, ssn_solve
from .lambda_rule import LambdaConfig, select_lambda


def _log_enabled():
    flag = os.environ.get("RANKREG_LOG", "")
    return flag not in ("", "0")


def kkt_residual(data, lam, w, s, beta, Xtw=None, Xbeta=None):
    """Relative KKT residuals (eta_p, eta_d, eta_kkt) of a triple.

    Xtw and Xbeta are optional cached products; when omitted they are
    recomputed from the data.
    """
    X, y, G = data.X, data.y, data.groups
    if Xbeta is None:
        Xbeta = X @ beta
    eta_p = np.linalg.norm(Xbeta - s - y) / (1.0 + np.linalg.norm(y))
    prox_s, _ = prox_rank_loss(w + s, 1.0)
    eta_d = np.linalg.norm(s - prox_s) / (1.0 + np.linalg.norm(s))
    if Xtw is None:
        Xtw = X.T @ w
    prox_b, _ = prox_group(beta - Xtw, G, lam)
    eta_d = max(eta_d,
                np.linalg.norm(beta - prox_b) / (1.0 + np.linalg.norm(beta)))
    return float(eta_p), float(eta_d), float(max(eta_p, eta_d))


def objectives(data, lam, w, beta, Xtw=None, Xbeta=None):
    """Primal/dual objectives, relative gap, and dual infeasibility.

    pobj = L(X beta - y) + lam * Psi(beta). The dual objective is
    -<y, w> with the two conjugate indicator terms treated as zero;
    dual_infeas measures how far w is from their domains (prox of the
    rank loss at w must vanish, and every group of X^T w / lam must fit
    its weight ball). A dual_infeas above 1e-8 flags dobj as untrusted
    but is not fatal.
    """
    X, y, G = data.X, data.y, data.groups
    if Xbeta is None:
        Xbeta = X @ beta
    pobj = eval_rank_loss(Xbeta - y) + lam * eval_group_norm(beta, G)
    prox_w, _ = prox_rank_loss(w, 1.0)
    infeas_rank = np.max(np.abs(prox_w)) if prox_w.size else 0.0
    if Xtw is None:
        Xtw = X.T @ w
    excess = G.norms(Xtw) / lam - G.weights
    infeas_group = float(max(0.0, excess.max()))
    dual_infeas = float(max(infeas_rank, infeas_group))
    dobj = -float(np.dot(y, w))
    relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return float(pobj), dobj, float(relgap), dual_infeas


def palm_solve(data, lam=None, opts=None):
    """Solve one instance to the target KKT residual.

    Parameters
    ----------
    data : ProblemData
    lam : float or "auto", optional
        Regularization level; defaults to opts.lam. "auto" runs the
        simulation-based selection rule seeded by opts.seed.
    opts : SolverOptions, optional

    Returns
    -------
    Solution
        Final triple, residuals, objectives, counters, and an
        iteration trace (one dict per outer iteration).
    """
    if opts is None:
        opts = SolverOptions()
    if lam is None:
        lam = opts.lam
    X, y, G = data.X, data.y, data.groups
    if lam == "auto":
        lam = select_lambda(X, G, LambdaConfig(seed=opts.seed))
    lam = float(lam)
    if not lam > 0:
        raise ValueError("lam must be positive")
    n, p = X.shape
    t0 = time.perf_counter()
    w = np.zeros(n)
    beta = np.zeros(p)
    s = -y.copy()
    sigma = opts.sigma0
    tau = opts.tau
    sqrt_tau = np.sqrt(tau)
    total_newton = 0
    trace = []
    converged = False
    log = _log_enabled()
    eta_p = eta_d = eta_kkt = np.inf
    pobj = dobj = relgap = dual_infeas = np.nan
    prev_eta = np.inf
    k = -1
    for k in range(opts.max_outer):
        sub = Subproblem(X, y, G, lam, s, beta, w, sigma, tau)
        thresh = opts.delta_k(k) * min(1.0, sqrt_tau) / sigma

        def stop(info, _thresh=thresh, _sub=sub):
            dw = info.w - _sub.w_k
            move = np.sqrt(tau * np.dot(dw, dw)
                           + np.sum((info.s_candidate - _sub.s_k) ** 2)
                           + np.sum((info.beta_candidate - _sub.beta_k) ** 2))
            if info.grad_norm <= _thresh * min(1.0, move):
                return "inexact"
            # cheap primal check first; the full residual only when it
            # could already certify outer convergence
            res_p = np.linalg.norm(info.Xbeta_cand - info.s_candidate - y)
            if res_p / (1.0 + np.linalg.norm(y)) <= opts.tol:
                _, _, ek = kkt_residual(
                    data, lam, info.w, info.s_candidate,
                    info.beta_candidate, Xtw=info.Xtw,
                    Xbeta=info.Xbeta_cand)
                if ek <= opts.tol:
                    _, _, gap, _ = objectives(
                        data, lam, info.w, info.beta_candidate,
                        Xtw=info.Xtw, Xbeta=info.Xbeta_cand)
                    if gap <= 10.0 * opts.tol:
                        return "kkt"
            return False

        res = ssn_solve(sub, w, stop, opts)
        w = res.w
        s = res.s_cand
        beta = res.beta_cand
        total_newton += res.iters
        eta_p, eta_d, eta_kkt = kkt_residual(
            data, lam, w, s, beta, Xtw=res.info.Xtw,
            Xbeta=res.info.Xbeta_cand)
        pobj, dobj, relgap, dual_infeas = objectives(
            data, lam, w, beta, Xtw=res.info.Xtw, Xbeta=res.info.Xbeta_cand)
        if not np.isfinite(pobj):
            raise RuntimeError(
                "non-finite objective at outer iteration %d "
                "(pobj=%r); the instance is likely ill-posed" % (k, pobj))
        trace.append(dict(k=k, sigma=sigma, eta_p=eta_p, eta_d=eta_d,
                          eta_kkt=eta_kkt, pobj=pobj, dobj=dobj,
                          relgap=relgap, newton_iters=res.iters,
                          ssn_stop=res.stop_reason))
        if log:
            print("palm k=%d sigma=%.6e eta_p=%.6e eta_d=%.6e "
                  "eta_kkt=%.6e relgap=%.6e ssn_iters=%d"
                  % (k, sigma, eta_p, eta_d, eta_kkt, relgap, res.iters),
                  file=_sys.stderr)
        if eta_kkt <= opts.tol and relgap <= 10.0 * opts.tol:
            converged = True
            break
        # enlarge the penalty only when the residual stagnates; the
        # subproblem conditioning degrades like sigma^2/tau, so sigma
        # should stay as small as the outer progress allows
        if eta_kkt > 0.6 * prev_eta:
            sigma = min(sigma * opts.sigma_growth, opts.sigma_max)
        prev_eta = eta_kkt
    return Solution(
        beta=beta, s=s, w=w, eta_kkt=eta_kkt, eta_p=eta_p, eta_d=eta_d,
        pobj=pobj, dobj=dobj, relgap=relgap, dual_infeas=dual_infeas,
        lam=lam, outer_iters=k + 1, total_newton_iters=total_newton,
        wall_time=time.perf_counter() - t0, converged=converged,
        trace=trace)
