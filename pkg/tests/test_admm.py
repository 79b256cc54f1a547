import numpy as np
import pytest

from triplesplit import admm, operators as ops, problems, splitting as sp

from oracles import central_difference_gradient, grid_prox, numerical_conjugate


def scalar_quadratic_problem():
    """Three scalar quadratic blocks with A_i = 1 and b = 3."""
    blocks = [
        admm.QuadraticBlock(1.0, [1.0], [[1.0]]),
        admm.QuadraticBlock(2.0, [0.5], [[1.0]]),
        admm.QuadraticBlock(0.7, [-1.0], [[1.0]]),
    ]
    return admm.SeparableProblem(blocks=blocks, b=[3.0])


# ---------------------------------------------------------------------------
# ADMM primal iteration
# ---------------------------------------------------------------------------

def test_admm_fixed_at_kkt_point():
    problem = admm.random_quadratic_problem(4, seed=0)
    xs, w = admm.solve_kkt(problem)
    state = admm.AdmmState(x1=xs[0], x2=xs[1], x3=xs[2], w=w, gamma=0.9)
    nxt = admm.admm3_step(problem, state)
    for a, b in ((nxt.x1, xs[0]), (nxt.x2, xs[1]), (nxt.x3, xs[2]), (nxt.w, w)):
        assert np.linalg.norm(a - b) <= 1e-12 * (1 + np.linalg.norm(b))


def test_admm_scalar_blocks_reach_kkt_limit():
    problem = scalar_quadratic_problem()
    xs, w_star = admm.solve_kkt(problem)
    # independent 4x4 KKT system: alpha_i x_i - w = alpha_i u_i, sum x_i = b
    K = np.array([
        [1.0, 0, 0, -1.0],
        [0, 2.0, 0, -1.0],
        [0, 0, 0.7, -1.0],
        [1.0, 1.0, 1.0, 0.0],
    ])
    rhs = np.array([1.0 * 1.0, 2.0 * 0.5, 0.7 * -1.0, 3.0])
    direct = np.linalg.solve(K, rhs)
    assert np.allclose(np.concatenate([np.concatenate(xs), w_star]), direct, atol=1e-12)

    state = admm.initial_state(problem, gamma=0.8)
    for _ in range(2000):
        state = admm.admm3_step(problem, state)
    total = state.x1[0] + state.x2[0] + state.x3[0]
    assert abs(total - 3.0) <= 1e-10
    for alpha, u, x in ((1.0, 1.0, state.x1), (2.0, 0.5, state.x2), (0.7, -1.0, state.x3)):
        assert abs(alpha * (x[0] - u) - state.w[0]) <= 1e-9


def test_admm_multiplier_is_first_dual_prox():
    # w^{k+1} = prox_d3(z^k) with z^k = w^k - gamma*(A1 x1^{k+1} + A2 x2^{k+1})
    problem = admm.random_quadratic_problem(3, seed=1)
    dual = admm.build_dual(problem)
    gamma = 0.6
    state = admm.initial_state(problem, gamma)
    for _ in range(4):
        prev_w = state.w
        state = admm.admm3_step(problem, state)
        A1, A2 = problem.blocks[0].A, problem.blocks[1].A
        z = prev_w - gamma * (A1 @ state.x1 + A2 @ state.x2)
        assert np.linalg.norm(state.w - dual.prox3(gamma, z)) <= 1e-12


# ---------------------------------------------------------------------------
# dual construction
# ---------------------------------------------------------------------------

def test_quadratic_conjugate_against_numerical_sup():
    alpha, u = 1.7, 0.4
    block = admm.QuadraticBlock(alpha, [u], [[1.0]])
    f = lambda x: 0.5 * alpha * (x - u) ** 2
    for y in (-2.0, -0.3, 0.0, 1.1, 3.0):
        expected = y * u + y**2 / (2 * alpha)
        assert block.conjugate_value(np.array([y])) == pytest.approx(expected, abs=1e-12)
        assert numerical_conjugate(f, y) == pytest.approx(expected, abs=1e-6)


def test_quadratic_conjugate_gradient_finite_differences():
    rng = np.random.default_rng(2)
    block = admm.QuadraticBlock(1.3, rng.standard_normal(3), rng.standard_normal((4, 3)))
    w = rng.standard_normal(4)
    fd = central_difference_gradient(lambda y: block.conjugate_value(y), w)
    assert np.linalg.norm(fd - block.conjugate_grad(w)) <= 1e-6 * (
        1 + np.linalg.norm(block.conjugate_grad(w))
    )


def test_quadratic_conjugate_prox_defining_inclusion():
    rng = np.random.default_rng(3)
    block = admm.QuadraticBlock(0.8, rng.standard_normal(2), rng.standard_normal((3, 2)))
    gamma, v = 0.7, rng.standard_normal(3)
    w = block.conjugate_prox(gamma, v)
    assert np.linalg.norm(w + gamma * block.conjugate_grad(w) - v) <= 1e-12


def test_subspace_indicator_conjugate_is_complement_projection():
    # f = indicator of the subspace {x : E x = 0}: the conjugate prox steps
    # orthogonally toward the complement, staying a projection in each call
    E = np.array([[1.0, 1.0, 0.0]])
    block = admm.AffineBlock(E, [0.0], np.eye(3))
    v = np.array([1.0, 2.0, 3.0])
    out = block.conjugate_prox(0.9, v)
    # the moved part lands in range(E^T) = span(1,1,0)
    moved = out
    assert abs(moved[0] - moved[1]) <= 1e-12
    assert moved[2] == pytest.approx(0.0, abs=1e-12)  # complement handled by prox
    assert block.conjugate_value(out) == pytest.approx(0.0, abs=1e-12)


def test_affine_conjugate_prox_scalar_bruteforce():
    # d(w) = f*(w) with f = indicator of {x = x_hat}: f*(y) = y * x_hat;
    # prox_gamma(v) = v - gamma*x_hat, checked against 1-d grid minimization
    x_hat = 0.7
    block = admm.AffineBlock([[1.0]], [x_hat], [[1.0]])
    gamma, v = 0.8, np.array([1.9])
    out = block.conjugate_prox(gamma, v)
    bf = grid_prox(lambda y: y * x_hat, gamma, v, -5.0, 5.0)
    assert np.allclose(out, v - gamma * x_hat, atol=1e-12)
    assert np.allclose(out, bf, atol=1e-7)


def test_box_conjugate_prox_scalar_bruteforce():
    lo, hi = -1.0, 1.0
    block = admm.BoxBlock(lo, hi, [[1.0]])
    support = lambda y: hi * np.maximum(y, 0.0) + lo * np.minimum(y, 0.0)
    gamma = 0.6
    for v in (-2.3, -0.4, 0.0, 0.5, 3.1):
        out = block.conjugate_prox(gamma, np.array([v]))
        bf = grid_prox(support, gamma, np.array([v]), -6.0, 6.0)
        assert np.allclose(out, bf, atol=1e-7)
        assert block.conjugate_value(np.array([v])) == pytest.approx(
            float(support(np.array([v]))[0]), abs=1e-12
        )


def test_d3_tilt_shifts_the_prox_argument():
    problem = scalar_quadratic_problem()
    dual = admm.build_dual(problem)
    gamma, v = 0.5, np.array([1.3])
    untilted = problem.blocks[2].conjugate_prox(gamma, v + gamma * problem.b)
    assert np.allclose(dual.prox3(gamma, v), untilted, atol=0)
    # brute force on the tilted objective f3*(y) - y*b
    blk = problem.blocks[2]
    tilted = lambda y: blk.conjugate_value(np.atleast_1d(0)) * 0 + (
        y * blk.u[0] + y**2 / (2 * blk.alpha) - y * problem.b[0]
    )
    bf = grid_prox(tilted, gamma, v, -10.0, 10.0)
    assert np.allclose(dual.prox3(gamma, v), bf, atol=1e-6)


def test_unsupported_blocks_rejected():
    with pytest.raises(admm.UnsupportedBlockError):
        admm.BoxBlock(-1, 1, np.array([[1.0, 0.5], [0.0, 1.0]]))  # not c-isometric
    blocks = [
        admm.QuadraticBlock(1.0, [0.0], [[1.0]]),
        admm.BoxBlock(-1, 1, [[1.0]]),
        admm.QuadraticBlock(1.0, [0.0], [[1.0]]),
    ]
    with pytest.raises(admm.UnsupportedBlockError):
        admm.SeparableProblem(blocks=blocks, b=[0.0])


# ---------------------------------------------------------------------------
# equivalence harness
# ---------------------------------------------------------------------------

def test_equivalence_one_step_scalar():
    problem = scalar_quadratic_problem()
    report = admm.equivalence_harness(problem, gamma=0.8, iters=1)
    assert report.max_deviation <= 1e-10


@pytest.mark.parametrize("m,seed", [(1, 5), (5, 6), (20, 7)])
def test_equivalence_fifty_iterations(m, seed):
    problem = admm.random_quadratic_problem(m, seed=seed)
    report = admm.equivalence_harness(problem, gamma=0.7, iters=50)
    assert report.max_deviation <= 1e-8


def test_equivalence_degenerate_zero_data():
    blocks = [
        admm.QuadraticBlock(1.0, np.zeros(2), np.eye(2)),
        admm.QuadraticBlock(2.0, np.zeros(2), np.eye(2)),
        admm.QuadraticBlock(0.5, np.zeros(2), np.eye(2)),
    ]
    problem = admm.SeparableProblem(blocks=blocks, b=np.zeros(2))
    report = admm.equivalence_harness(problem, gamma=1.0, iters=10)
    assert report.max_deviation == 0.0
    assert float(report.literal_gradient_gap.max()) == 0.0


def test_gradient_point_gap_decays_on_convergent_run():
    # the derivation's grad-d2-at-w reading differs from the certified element
    # along the trajectory and coincides in the limit
    problem = admm.random_quadratic_problem(4, seed=8)
    report = admm.equivalence_harness(problem, gamma=0.5, iters=400)
    early = float(report.literal_gradient_gap[:10].max())
    late = float(report.literal_gradient_gap[-10:].max())
    assert early > 1e-4
    assert late <= 1e-3 * early
    assert float(report.algorithm2_drift[-1]) <= 1e-3 * float(
        report.algorithm2_drift.max()
    )


# ---------------------------------------------------------------------------
# per-step identities of the dual iteration
# ---------------------------------------------------------------------------

def test_dual_identities_at_fixed_point():
    problem = admm.random_quadratic_problem(3, seed=9)
    dual = admm.build_dual(problem)
    A_op, B_op, C_op = dual.splitting_operators()
    gamma = 0.8
    cfg = sp.SplitConfig(gamma=gamma, max_iters=100_000, residual_tol=1e-14)
    trace = sp.km_iterate(
        lambda z: sp.proposed_step(A_op, B_op, C_op, gamma, z), cfg, np.zeros(problem.m)
    )
    report = admm.dual_step_identities(dual, trace.final_z, gamma)
    assert report.governing_delta <= 1e-12
    assert report.max_residual <= 1e-12


def test_dual_identities_randomized():
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(100):
        problem = admm.random_quadratic_problem(int(rng.integers(1, 7)),
                                                seed=int(rng.integers(10_000)))
        dual = admm.build_dual(problem)
        gamma = float(np.exp(rng.uniform(np.log(0.1), np.log(3.0))))
        z = rng.standard_normal(problem.m) * 2
        rep = admm.dual_step_identities(dual, z, gamma)
        worst = max(worst, rep.max_residual / (1.0 + float(np.linalg.norm(z))))
    assert worst <= 1e-10


def test_dual_identities_affine_d2_collapses_reflected_and_smooth_points():
    # constant grad d2 (affine d2): the reflected-prox point equals the
    # smooth-prox point exactly
    g = np.array([0.4, -1.1])

    class AffineD2Dual:
        def prox1(self, gamma, v):
            return v / (1.0 + gamma)  # prox of |w|^2/2

        def prox3(self, gamma, v):
            return v / (1.0 + 0.5 * gamma)

        def prox2(self, gamma, v):
            return v - gamma * g

        def grad2(self, w):
            return g

    rep = admm.dual_step_identities(AffineD2Dual(), np.array([1.0, 2.0]), 0.7)
    assert rep.max_residual <= 1e-14
    dual = AffineD2Dual()
    z = np.array([1.0, 2.0])
    w3 = dual.prox3(0.7, z)
    w1 = dual.prox1(0.7, 2 * w3 - z - 0.7 * g)
    w2 = dual.prox2(0.7, w1 + 0.7 * g)
    assert np.linalg.norm(w1 - w2) <= 1e-15


# ---------------------------------------------------------------------------
# objective gap and the sandwich inequalities
# ---------------------------------------------------------------------------

def test_gap_zero_at_optimum_and_nonnegative_along_run():
    problem = admm.random_quadratic_problem(4, seed=11)
    dual = admm.build_dual(problem)
    xs, w_star = admm.solve_kkt(problem)
    at_opt = admm.objective_gap_trace(
        dual, [admm.DualWitness(z=w_star, w_d3=w_star, w_d1=w_star, w_d2=w_star,
                                z_next=w_star)], w_star
    )
    assert at_opt[0] == 0.0
    witnesses = admm.run_dual_splitting(dual, 0.6, np.zeros(problem.m), 300)
    gaps = admm.objective_gap_trace(dual, witnesses, w_star)
    assert gaps.min() >= -1e-10
    assert gaps[-1] <= 1e-9


def test_dual_optimum_matches_negative_primal_value():
    problem = admm.random_quadratic_problem(5, seed=12)
    dual = admm.build_dual(problem)
    xs, w_star = admm.solve_kkt(problem)
    primal = sum(
        0.5 * blk.alpha * float((x - blk.u) @ (x - blk.u))
        for blk, x in zip(problem.blocks, xs)
    )
    assert dual.total_value(w_star) == pytest.approx(-primal, abs=1e-10)


def test_gap_trend_on_unit_step_run():
    problem = admm.random_quadratic_problem(4, seed=13)
    dual = admm.build_dual(problem)
    _, w_star = admm.solve_kkt(problem)
    gamma = 1.0 / dual.lipschitz2
    witnesses = admm.run_dual_splitting(dual, gamma, np.zeros(problem.m), 2000)
    scaled = admm.scaled_gap_trace(admm.objective_gap_trace(dual, witnesses, w_star))
    finite = scaled[np.isfinite(scaled)]
    q2 = finite[len(finite) // 4 : len(finite) // 2]
    q4 = finite[3 * len(finite) // 4 :]
    slack = 1e-10 * (1 + float(np.abs(finite).max()))
    assert float(np.abs(q4).mean()) <= float(np.abs(q2).mean()) + slack


def test_gap_sandwich_on_dual_run():
    problem = admm.random_quadratic_problem(5, seed=14)
    dual = admm.build_dual(problem)
    xs, w_star = admm.solve_kkt(problem)
    grad_d1_star = problem.blocks[0].A @ xs[0]
    gamma = 0.8 / dual.lipschitz2
    witnesses = admm.run_dual_splitting(dual, gamma, np.zeros(problem.m), 200)
    report = admm.objective_gap_sandwich(dual, witnesses, gamma, w_star, grad_d1_star)
    scale = 1.0 + float(np.abs(report.middle).max())
    assert np.all(report.middle <= report.upper + 1e-9 * scale)
    assert np.all(report.lower <= report.middle + 1e-9 * scale)


# ---------------------------------------------------------------------------
# the consensus dual of the bound-projection instance
# ---------------------------------------------------------------------------

def test_consensus_dual_strong_duality():
    inst = problems.build_figure2_instance(n=40, seed=3)
    cert = problems.kkt_oracle(inst)
    problem = admm.consensus_dual_problem(inst)
    dual = admm.build_dual(problem)
    w_star, grad_d1_star = admm.consensus_dual_optimum(inst, cert)
    primal = inst.objective(cert.x_star)
    assert dual.total_value(w_star) == pytest.approx(-primal, abs=1e-10 * (1 + primal))
    assert dual.lipschitz2 == pytest.approx(2.0 / inst.alpha)


def test_consensus_dual_run_converges_to_dual_value():
    inst = problems.build_figure2_instance(n=30, seed=4)
    cert = problems.kkt_oracle(inst)
    problem = admm.consensus_dual_problem(inst)
    dual = admm.build_dual(problem)
    w_star, _ = admm.consensus_dual_optimum(inst, cert)
    gamma = 1.0 / dual.lipschitz2
    witnesses = admm.run_dual_splitting(dual, gamma, np.zeros(problem.m), 3000)
    gaps = admm.objective_gap_trace(dual, witnesses, w_star)
    assert gaps[-1] <= 1e-9 * (1 + abs(dual.total_value(w_star)))
    assert gaps.min() >= -1e-9


def test_consensus_dual_unit_step_gap_trend():
    # gap * sqrt(k+1) is bounded and eventually decreasing on the unit-step run
    inst = problems.build_figure2_instance(n=30, seed=4)
    cert = problems.kkt_oracle(inst)
    problem = admm.consensus_dual_problem(inst)
    dual = admm.build_dual(problem)
    w_star, _ = admm.consensus_dual_optimum(inst, cert)
    gamma = 1.0 / dual.lipschitz2
    witnesses = admm.run_dual_splitting(dual, gamma, np.zeros(problem.m), 2000)
    scaled = admm.scaled_gap_trace(admm.objective_gap_trace(dual, witnesses, w_star))
    assert np.all(np.isfinite(scaled))
    q2 = scaled[len(scaled) // 4 : len(scaled) // 2]
    q4 = scaled[3 * len(scaled) // 4 :]
    slack = 1e-10 * (1 + float(np.abs(scaled).max()))
    assert float(np.abs(q4).mean()) <= float(np.abs(q2).mean()) + slack


def test_gap_sandwich_on_consensus_dual():
    inst = problems.build_figure2_instance(n=25, seed=8)
    cert = problems.kkt_oracle(inst)
    problem = admm.consensus_dual_problem(inst)
    dual = admm.build_dual(problem)
    w_star, grad_d1_star = admm.consensus_dual_optimum(inst, cert)
    gamma = 0.5 / dual.lipschitz2
    witnesses = admm.run_dual_splitting(dual, gamma, np.zeros(problem.m), 300)
    report = admm.objective_gap_sandwich(dual, witnesses, gamma, w_star, grad_d1_star)
    scale = 1.0 + float(np.abs(report.middle).max())
    assert np.all(report.middle <= report.upper + 1e-9 * scale)
    assert np.all(report.lower <= report.middle + 1e-9 * scale)


def test_consensus_dual_step_identities():
    inst = problems.build_figure2_instance(n=20, seed=5)
    problem = admm.consensus_dual_problem(inst)
    dual = admm.build_dual(problem)
    rng = np.random.default_rng(6)
    for _ in range(25):
        z = rng.standard_normal(problem.m) * 2
        gamma = float(rng.uniform(0.1, 2.0))
        rep = admm.dual_step_identities(dual, z, gamma)
        assert rep.max_residual <= 1e-10 * (1 + np.linalg.norm(z))


def test_consensus_primal_feasibility_at_convergence():
    # reconstructed primal iterates satisfy the coupling constraint in the limit
    inst = problems.build_figure2_instance(n=25, seed=7)
    problem = admm.consensus_dual_problem(inst)
    gamma = 0.4
    state = admm.initial_state(problem, gamma)
    for _ in range(4000):
        state = admm.admm3_step(problem, state)
    assert problem.constraint_residual([state.x1, state.x2, state.x3]) <= 1e-8
    cert = problems.kkt_oracle(inst)
    assert np.linalg.norm(state.x2 - cert.x_star) <= 1e-6
