import numpy as np
import pytest

from triplesplit import operators as ops
from triplesplit import problems
from triplesplit import splitting as sp

from oracles import bound_projection_bruteforce


# ---------------------------------------------------------------------------
# instance construction
# ---------------------------------------------------------------------------

def test_figure2_instance_shape():
    inst = problems.build_figure2_instance()
    assert inst.n == 100
    assert inst.b == pytest.approx(inst.u.sum(), abs=0)
    above = int((inst.u > inst.upper).sum())
    below = int((inst.u < inst.lower).sum())
    assert 15 <= above <= 25
    assert 15 <= below <= 25


def test_figure2_determinism():
    a = problems.build_figure2_instance(seed=12)
    b = problems.build_figure2_instance(seed=12)
    assert np.array_equal(a.u, b.u) and a.b == b.b
    c = problems.build_figure2_instance(seed=13)
    assert not np.array_equal(a.u, c.u)


def test_figure2_noiseless_profile():
    inst = problems.build_figure2_instance(noise_scale=0.0)
    assert np.all(np.abs(inst.u) <= 1.0)
    cert = problems.kkt_oracle(inst)
    # profile already satisfies both constraints (up to rounding in b)
    assert np.linalg.norm(cert.x_star - inst.u) <= 1e-10


def test_instance_roundtrip(tmp_path):
    inst = problems.build_figure2_instance(n=17, seed=5)
    path = tmp_path / "inst.txt"
    problems.save_instance(inst, path)
    back = problems.load_instance(path)
    assert back.n == inst.n and back.seed == inst.seed
    assert back.b == inst.b and back.alpha == inst.alpha
    assert np.array_equal(back.u, inst.u)


def test_instance_file_consistency_check(tmp_path):
    inst = problems.build_figure2_instance(n=5, seed=1)
    path = tmp_path / "inst.txt"
    problems.save_instance(inst, path)
    lines = path.read_text().splitlines()
    head = lines[0].split()
    head[4] = repr(float(head[4]) + 1.0)  # corrupt b
    path.write_text("\n".join([" ".join(head)] + lines[1:]) + "\n")
    with pytest.raises(ValueError):
        problems.load_instance(path)


# ---------------------------------------------------------------------------
# KKT oracle
# ---------------------------------------------------------------------------

def test_kkt_oracle_unconstrained_optimum():
    u = np.array([0.1, -0.5, 0.3])
    inst = problems.BoundProjectionInstance(
        n=3, lower=-1, upper=1, alpha=2.0, u=u, b=float(u.sum())
    )
    cert = problems.kkt_oracle(inst)
    cert.validate()
    assert np.linalg.norm(cert.x_star - u) <= 1e-12
    assert abs(cert.multiplier) <= 1e-12


def test_kkt_oracle_two_dim_against_bruteforce():
    inst = problems.BoundProjectionInstance(
        n=2, lower=-1, upper=1, alpha=1.0, u=np.array([2.0, 0.0]), b=1.0
    )
    cert = problems.kkt_oracle(inst)
    cert.validate()
    bf = bound_projection_bruteforce(inst)
    assert np.allclose(cert.x_star, [1.0, 0.0], atol=1e-12)
    assert np.linalg.norm(cert.x_star - bf) <= 1e-6


def test_kkt_oracle_three_dim_against_bruteforce():
    # grid+polish puts the minimizer of u=(2,2,-4), b=0 at (0.5, 0.5, -1)
    inst = problems.BoundProjectionInstance(
        n=3, lower=-1, upper=1, alpha=1.0, u=np.array([2.0, 2.0, -4.0]), b=0.0
    )
    cert = problems.kkt_oracle(inst)
    cert.validate()
    bf = bound_projection_bruteforce(inst)
    assert np.allclose(bf, [0.5, 0.5, -1.0], atol=1e-6)
    assert np.linalg.norm(cert.x_star - bf) <= 1e-6


def test_kkt_oracle_infeasible():
    inst = problems.BoundProjectionInstance(
        n=2, lower=-1, upper=1, alpha=1.0, u=np.zeros(2), b=5.0
    )
    with pytest.raises(problems.InfeasibleInstanceError):
        problems.kkt_oracle(inst)


def test_kkt_oracle_corner_cases():
    u = np.array([0.3, -0.8, 2.0])
    for b, corner in ((-3.0, -1.0), (3.0, 1.0)):
        inst = problems.BoundProjectionInstance(
            n=3, lower=-1, upper=1, alpha=1.0, u=u, b=b
        )
        cert = problems.kkt_oracle(inst)
        assert np.allclose(cert.x_star, corner)


def test_kkt_oracle_randomized_self_validation():
    rng = np.random.default_rng(10)
    for _ in range(60):
        n = int(rng.integers(1, 40))
        lo = float(rng.uniform(-2, -0.1))
        hi = float(rng.uniform(0.1, 2))
        u = rng.uniform(-3, 3, n)
        frac = float(rng.uniform(0.02, 0.98))
        b = n * lo + frac * n * (hi - lo)
        inst = problems.BoundProjectionInstance(
            n=n, lower=lo, upper=hi, alpha=float(rng.uniform(0.3, 3.0)), u=u, b=b
        )
        problems.kkt_oracle(inst).validate()


def test_multiplier_map_is_nondecreasing():
    rng = np.random.default_rng(11)
    inst = problems.build_figure2_instance(n=30, seed=2)
    ts = np.sort(rng.uniform(-5, 5, 200))
    vals = [
        np.clip(inst.u + t / inst.alpha, inst.lower, inst.upper).sum() for t in ts
    ]
    assert np.all(np.diff(vals) >= -1e-12)


# ---------------------------------------------------------------------------
# operator assembly and the explicit updates
# ---------------------------------------------------------------------------

def test_assembled_operators_match_explicit_derived_updates():
    inst = problems.build_figure2_instance(n=40, seed=4)
    A_op, B_op, C_op = problems.assemble_splitting_operators(inst)
    gamma = 0.8 / inst.lipschitz
    rng = np.random.default_rng(5)
    for method, stepfn in (("proposed", sp.proposed_step), ("dys", sp.dys_step)):
        explicit = problems.explicit_figure2_stepper(inst, gamma, method=method)
        for _ in range(10):
            z = rng.standard_normal(inst.n)
            a = stepfn(A_op, B_op, C_op, gamma, z)
            e = explicit(z)
            assert np.linalg.norm(a.x_B - e.x_B) <= 1e-14
            assert np.linalg.norm(a.Tz - e.Tz) <= 1e-13


def test_explicit_hyperplane_step_is_the_displayed_projection():
    # x^{half} = A^+(b - A z) + z for the all-ones row
    inst = problems.build_figure2_instance(n=25, seed=6)
    step = problems.explicit_figure2_stepper(inst, 1.0)(np.arange(25.0))
    z = np.arange(25.0)
    manual = z + (inst.b - z.sum()) / 25.0
    assert np.allclose(step.x_B, manual, atol=0)


def test_sign_check_derived_converges_display_does_not():
    # the derived (minus) gradient correction reaches the KKT minimizer; the
    # printed (plus) variant drives the iteration to a different fixed point
    inst = problems.build_figure2_instance()
    cert = problems.kkt_oracle(inst)
    gamma = 1.0 / inst.lipschitz
    results = {}
    for variant in ("derived", "display"):
        stepper = problems.explicit_figure2_stepper(inst, gamma, "proposed", variant)
        cfg = sp.SplitConfig(gamma=gamma, max_iters=30_000, residual_tol=1e-12)
        trace = sp.km_iterate(stepper, cfg, np.zeros(inst.n), reference=cert.x_star)
        results[variant] = trace
    assert results["derived"].status == sp.CONVERGED
    assert results["derived"].errors[-1] <= 1e-6
    assert np.nanmin(results["display"].errors) > 1e-2


def test_display_variant_dys_also_misses_oracle():
    inst = problems.build_figure2_instance()
    cert = problems.kkt_oracle(inst)
    gamma = 1.0 / inst.lipschitz
    stepper = problems.explicit_figure2_stepper(inst, gamma, "dys", "display")
    cfg = sp.SplitConfig(gamma=gamma, max_iters=20_000, residual_tol=1e-12)
    trace = sp.km_iterate(stepper, cfg, np.zeros(inst.n), reference=cert.x_star)
    assert np.nanmin(trace.errors) > 1e-2


def test_solver_matches_oracle_across_instances():
    rng = np.random.default_rng(12)
    for _ in range(5):
        inst = problems.build_figure2_instance(
            n=int(rng.integers(10, 60)), seed=int(rng.integers(1000))
        )
        cert = problems.kkt_oracle(inst)
        A_op, B_op, C_op = problems.assemble_splitting_operators(inst)
        gamma = 1.0 / inst.lipschitz
        cfg = sp.SplitConfig(gamma=gamma, max_iters=200_000, residual_tol=1e-10)
        trace = sp.km_iterate(
            lambda z: sp.proposed_step(A_op, B_op, C_op, gamma, z),
            cfg, np.zeros(inst.n), reference=cert.x_star,
        )
        assert trace.status == sp.CONVERGED
        assert trace.errors[-1] <= 1e-6


# ---------------------------------------------------------------------------
# composite (linear-map) instances
# ---------------------------------------------------------------------------

def test_composite_rejects_nonsquare():
    with pytest.raises(ValueError):
        problems.build_composite_instance(3, np.ones((2, 3)))


def test_composite_identity_map_recovers_composite_minimizer():
    inst = problems.build_composite_instance(5, np.eye(5), seed=7)
    xtrue = inst.composite_minimizer()
    weighted = (
        inst.alpha_f * inst.u_f + inst.alpha_g * inst.u_g + inst.alpha_h * inst.u_h
    ) / (inst.alpha_f + inst.alpha_g + inst.alpha_h)
    assert np.linalg.norm(xtrue - weighted) <= 1e-12
    cfg = sp.SplitConfig(gamma=0.5 * inst.gamma_max, max_iters=100_000,
                         residual_tol=1e-13)
    trace = sp.km_iterate(inst.stepper(cfg.gamma), cfg, np.zeros(5))
    assert trace.status == sp.CONVERGED
    assert np.linalg.norm(trace.final_step.x_B - xtrue) <= 1e-10


def test_composite_gamma_range_shrinks_with_map_norm():
    base = problems.build_composite_instance(4, np.eye(4), seed=8)
    scaled = problems.CompositeInstance(
        L=2.0 * np.eye(4),
        alpha_f=base.alpha_f, u_f=base.u_f,
        alpha_g=base.alpha_g, u_g=base.u_g,
        alpha_h=base.alpha_h, u_h=base.u_h,
    )
    assert scaled.norm_L == pytest.approx(2.0)
    assert scaled.gamma_max == pytest.approx(base.gamma_max / 4.0)


def test_composite_limit_solves_its_own_stationarity_system():
    # dense affine fixed-point solve is the oracle for the iteration limit
    inst = problems.build_composite_instance(5, 2.0 * np.eye(5), seed=11)
    gamma = 0.4 * inst.gamma_max
    zfix = inst.scheme_fixed_point(gamma)
    cfg = sp.SplitConfig(gamma=gamma, max_iters=200_000, residual_tol=1e-14)
    trace = sp.km_iterate(inst.stepper(gamma), cfg, np.zeros(5))
    assert trace.status == sp.CONVERGED
    assert np.linalg.norm(trace.final_z - zfix) <= 1e-8
    # recorded ambiguity: with L != I the limit is NOT the composite minimizer
    step = inst.stepper(gamma)(zfix)
    assert np.linalg.norm(step.x_B - inst.composite_minimizer()) > 1e-2


def test_quadratic_sum_instance():
    inst = problems.build_quadratic_sum_instance(6, blocks=4, seed=3)
    xstar = inst.minimizer()
    grad = sum(a * (xstar - u) for a, u in zip(inst.alphas, inst.us))
    assert np.linalg.norm(grad) <= 1e-12
    assert inst.smooth_lipschitz_sum() == pytest.approx(float(inst.alphas[1:3].sum()))
