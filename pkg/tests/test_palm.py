import numpy as np
import pytest

from rankreg import (GroupStructure, ProblemData, SolverOptions, palm_solve,
                     kkt_residual, objectives, rho_weights, dual_norm,
                     prox_rank_loss, prox_group, eval_rank_loss,
                     eval_group_norm, select_lambda, LambdaConfig)
from oracles import cvxpy_objective


def make_problem(seed=0, n=30, p=9, group_size=3, noise=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    G = GroupStructure.contiguous(p, group_size)
    beta_star = np.zeros(p)
    beta_star[:group_size] = 1.5
    y = X @ beta_star + noise * rng.standard_normal(n)
    return ProblemData(X, y, G), beta_star


class TestKktResidual:

    def test_matches_solution_fields(self):
        data, _ = make_problem(seed=0)
        sol = palm_solve(data, 0.3, SolverOptions(tol=1e-8))
        eta_p, eta_d, eta_kkt = kkt_residual(data, 0.3, sol.w, sol.s,
                                             sol.beta)
        assert eta_p == pytest.approx(sol.eta_p, abs=1e-12)
        assert eta_d == pytest.approx(sol.eta_d, abs=1e-12)
        assert eta_kkt == pytest.approx(sol.eta_kkt, abs=1e-12)

    def test_detects_primal_violation(self):
        data, _ = make_problem(seed=1)
        n, p = data.X.shape
        w = np.zeros(n)
        s = data.X @ np.ones(p) - data.y + 1.0
        eta_p, _, eta_kkt = kkt_residual(data, 0.3, w, s, np.ones(p))
        want = np.sqrt(n) / (1.0 + np.linalg.norm(data.y))
        assert eta_p == pytest.approx(want, rel=1e-12)
        assert eta_kkt >= eta_p


class TestObjectives:

    def test_zero_multiplier_is_feasible(self):
        data, _ = make_problem(seed=2)
        pobj, dobj, relgap, infeas = objectives(data, 0.5, np.zeros(data.n),
                                                np.zeros(data.p))
        assert dobj == 0.0
        assert infeas <= 1e-15
        assert pobj == pytest.approx(eval_rank_loss(-data.y), rel=1e-12)

    def test_weak_duality_at_feasible_point(self):
        data, _ = make_problem(seed=3)
        lam = 0.4
        sol = palm_solve(data, lam, SolverOptions(tol=1e-9))
        # the rank-loss dual ball lives in the zero-sum hyperplane, so
        # center before shrinking toward its interior
        w0 = sol.w - sol.w.mean()
        for shrink in (0.999, 0.99, 0.9):
            w = shrink * w0
            pobj, dobj, _, infeas = objectives(data, lam, w, sol.beta)
            if infeas <= 1e-12:
                assert dobj <= pobj + 1e-9
                break
        else:
            pytest.fail("no feasible scaling of the converged multiplier")

    def test_penalty_term_included(self):
        data, _ = make_problem(seed=4)
        beta = np.ones(data.p)
        base, _, _, _ = objectives(data, 1.0, np.zeros(data.n), beta)
        more, _, _, _ = objectives(data, 2.0, np.zeros(data.n), beta)
        assert more - base == pytest.approx(eval_group_norm(beta,
                                                            data.groups),
                                            rel=1e-12)


class TestPalmSolve:

    def test_zero_response(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((20, 6))
        G = GroupStructure.contiguous(6, 3)
        data = ProblemData(X, np.zeros(20), G)
        sol = palm_solve(data, 0.5)
        assert sol.converged
        assert np.allclose(sol.beta, 0.0, atol=1e-10)
        assert sol.pobj == pytest.approx(0.0, abs=1e-12)
        assert sol.outer_iters <= 2

    def test_zero_certificate_lambda(self):
        # above the dual norm of the loss subgradient at beta = 0 the
        # zero vector is optimal
        rng = np.random.default_rng(6)
        for n, p in ((5, 3), (6, 4)):
            X = rng.standard_normal((n, p))
            y = rng.standard_normal(n)
            G = GroupStructure.contiguous(p, 1)
            v = np.empty(n)
            v[np.argsort(-(-y), kind="stable")] = rho_weights(n)
            lam = 1.05 * dual_norm(X.T @ v, G)
            sol = palm_solve(ProblemData(X, y, G), lam,
                             SolverOptions(tol=1e-9))
            assert sol.converged
            assert np.allclose(sol.beta, 0.0, atol=1e-8)

    def test_matches_convex_reference(self):
        for seed, n, p, gs in ((7, 4, 2, 1), (8, 6, 4, 2), (9, 10, 6, 3)):
            data, _ = make_problem(seed=seed, n=n, p=p, group_size=gs)
            lam = 0.3
            sol = palm_solve(data, lam, SolverOptions(tol=1e-9))
            ref = cvxpy_objective(data.X, data.y, data.groups, lam)
            assert sol.converged
            assert sol.pobj == pytest.approx(ref, rel=1e-6, abs=1e-8)

    def test_converged_meets_tolerances(self):
        data, _ = make_problem(seed=10, n=40, p=12)
        sol = palm_solve(data, 0.25, SolverOptions(tol=1e-7))
        assert sol.converged
        assert sol.eta_kkt <= 1e-7
        assert sol.relgap <= 1e-5
        assert sol.dual_infeas <= 1e-6

    def test_row_permutation_invariance(self):
        data, _ = make_problem(seed=11)
        rng = np.random.default_rng(12)
        perm = rng.permutation(data.n)
        data2 = ProblemData(data.X[perm], data.y[perm], data.groups)
        opts = SolverOptions(tol=1e-9)
        b1 = palm_solve(data, 0.3, opts).beta
        b2 = palm_solve(data2, 0.3, opts).beta
        assert np.allclose(b1, b2, atol=1e-8)

    def test_response_shift_invariance(self):
        # the loss only sees pairwise gaps, so a constant added to y
        # cannot move the estimate
        data, _ = make_problem(seed=13)
        shifted = ProblemData(data.X, data.y + 7.5, data.groups)
        opts = SolverOptions(tol=1e-9)
        b1 = palm_solve(data, 0.3, opts).beta
        b2 = palm_solve(shifted, 0.3, opts).beta
        assert np.allclose(b1, b2, atol=1e-8)

    def test_trace_records_progress(self):
        data, _ = make_problem(seed=14, n=50, p=15)
        sol = palm_solve(data, 0.2, SolverOptions(tol=1e-10))
        assert len(sol.trace) == sol.outer_iters
        assert sol.trace[-1]["eta_kkt"] < sol.trace[0]["eta_kkt"]
        ks = [t["k"] for t in sol.trace]
        assert ks == list(range(sol.outer_iters))
        assert sol.total_newton_iters == sum(t["newton_iters"]
                                             for t in sol.trace)

    def test_outer_cap_returns_best_effort(self):
        data, _ = make_problem(seed=15)
        sol = palm_solve(data, 0.3, SolverOptions(max_outer=1, tol=1e-12))
        assert not sol.converged
        assert sol.outer_iters == 1
        assert np.isfinite(sol.eta_kkt)
        assert sol.beta.shape == (data.p,)

    def test_multiplier_updates_are_prox_candidates(self):
        # one outer iteration: the returned s and beta must be bitwise
        # the prox candidates at the accepted w with the initial anchors
        data, _ = make_problem(seed=16)
        opts = SolverOptions(max_outer=1, tol=1e-13, sigma0=1.0)
        sol = palm_solve(data, 0.3, opts)
        sigma, lam = opts.sigma0, 0.3
        u = (-data.y) / sigma + sol.w
        v, _ = prox_rank_loss(u, 1.0)
        want_s = sigma * v
        beta_tilde = np.zeros(data.p) / (sigma * lam) \
            - (data.X.T @ sol.w) / lam
        P, _ = prox_group(beta_tilde, data.groups, 1.0)
        want_beta = (sigma * lam) * P
        assert np.array_equal(sol.s, want_s)
        # beta goes through the line search's incremental X^T w cache,
        # so recomputing the product fresh costs a few ulps
        assert np.allclose(sol.beta, want_beta, atol=1e-12)

    def test_auto_lambda_uses_seeded_rule(self):
        data, _ = make_problem(seed=17, n=25, p=8, group_size=2)
        opts = SolverOptions(lam="auto", seed=17, tol=1e-6)
        sol = palm_solve(data, None, opts)
        want = select_lambda(data.X, data.groups, LambdaConfig(seed=17))
        assert sol.lam == want

    def test_rejects_bad_lambda(self):
        data, _ = make_problem(seed=18)
        with pytest.raises(ValueError, match="positive"):
            palm_solve(data, -0.5)
        with pytest.raises(ValueError, match="positive"):
            palm_solve(data, 0.0)

    def test_sigma_growth_capped(self):
        data, _ = make_problem(seed=19)
        sol = palm_solve(data, 0.3, SolverOptions(tol=1e-6, sigma0=2.0,
                                                  sigma_growth=3.0,
                                                  sigma_max=50.0))
        assert sol.converged
        assert max(t["sigma"] for t in sol.trace) <= 50.0
        assert any(t["sigma"] > 2.0 for t in sol.trace)

    def test_solution_reports_wall_time(self):
        data, _ = make_problem(seed=20)
        sol = palm_solve(data, 0.3)
        assert sol.wall_time > 0
        assert sol.outer_iters >= 1
