"""Randomized verification suites behind the ``verify`` CLI subcommand.

Each suite draws instances from fixed seeds, evaluates one family of
contracts (step identities, special-case reductions, the ADMM lockstep
correspondence, residual-rate diagnostics), and returns per-check results
with the measured worst deviation against its bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import admm, operators as ops, problems, splitting as sp


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    bound: float
    passed: bool


def _result(name, value, bound, larger_is_fail=True) -> CheckResult:
    ok = value <= bound if larger_is_fail else value >= bound
    return CheckResult(name=name, value=float(value), bound=float(bound), passed=bool(ok))


def _bool_result(name, flag) -> CheckResult:
    return CheckResult(name=name, value=float(bool(flag)), bound=1.0, passed=bool(flag))


def random_operator_triple(rng, n):
    """A random (A, B, C) draw from the shipped operator catalog."""
    choices_a = ("box", "zero", "quadratic")
    choices_b = ("affine", "zero", "quadratic")
    kind_a = choices_a[rng.integers(len(choices_a))]
    kind_b = choices_b[rng.integers(len(choices_b))]
    if kind_a == "box":
        lo = float(rng.uniform(-2.0, 0.0))
        A_op = ops.box_operator(lo, lo + float(rng.uniform(0.5, 3.0)))
    elif kind_a == "zero":
        A_op = ops.zero_operator()
    else:
        A_op = ops.quadratic_operator(float(rng.uniform(0.3, 3.0)), rng.standard_normal(n))
    if kind_b == "affine" and n >= 2:
        p = int(rng.integers(1, n))
        B_op = ops.affine_operator(rng.standard_normal((p, n)), rng.standard_normal(p))
    elif kind_b == "zero":
        B_op = ops.zero_operator()
    else:
        B_op = ops.quadratic_operator(float(rng.uniform(0.3, 3.0)), rng.standard_normal(n))
    if rng.uniform() < 0.15:
        C_op = ops.zero_cocoercive()
    else:
        C_op = ops.quadratic_cocoercive(float(rng.uniform(0.3, 3.0)), rng.standard_normal(n))
    return A_op, B_op, C_op


def suite_identities(seed: int = 0, samples: int = 1000) -> List[CheckResult]:
    """Step-identity residuals over randomized instances and points."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, 9))
        A_op, B_op, C_op = random_operator_triple(rng, n)
        gamma = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
        z = rng.standard_normal(n) * float(np.exp(rng.uniform(0.0, 2.0)))
        step = sp.proposed_step(A_op, B_op, C_op, gamma, z)
        report = sp.step_identity_diagnostics(step, A_op, B_op, C_op, gamma)
        worst = max(worst, report.max_violation / (1.0 + float(np.linalg.norm(z))))
    return [_result("step-identities (relative, randomized)", worst, 1e-10)]


def suite_reductions(seed: int = 0, samples: int = 100) -> List[CheckResult]:
    """Special-case collapses of the proposed map onto Douglas-Rachford."""
    rng = np.random.default_rng(seed)
    zero = ops.zero_operator()
    worst_a0 = worst_c0 = worst_dys = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, 9))
        A_op, B_op, _ = random_operator_triple(rng, n)
        alpha = float(rng.uniform(0.3, 3.0))
        u = rng.standard_normal(n)
        C_op = ops.quadratic_cocoercive(alpha, u)
        C_as_resolvent = ops.quadratic_operator(alpha, u)
        gamma = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
        z = rng.standard_normal(n) * 2.0

        lhs = sp.proposed_step(zero, B_op, C_op, gamma, z).Tz
        rhs = sp.drs_step(C_as_resolvent, B_op, gamma, z).Tz
        worst_a0 = max(worst_a0, float(np.linalg.norm(lhs - rhs)))

        lhs = sp.proposed_step(A_op, B_op, ops.zero_cocoercive(), gamma, z).Tz
        rhs = sp.drs_step(A_op, B_op, gamma, z).Tz
        worst_c0 = max(worst_c0, float(np.linalg.norm(lhs - rhs)))

        rhs = sp.dys_step(A_op, B_op, ops.zero_cocoercive(), gamma, z).Tz
        worst_dys = max(worst_dys, float(np.linalg.norm(lhs - rhs)))
    return [
        _result("reduction A=0 -> DRS(C,B)", worst_a0, 1e-12),
        _result("reduction C=0 -> DRS(A,B)", worst_c0, 1e-12),
        _result("reduction C=0: proposed == Davis-Yin", worst_dys, 1e-12),
    ]


def suite_admm_equivalence(seed: int = 0, iters: int = 50) -> List[CheckResult]:
    """Lockstep identity deviations on random quadratic problems, m in {1,5,20}."""
    out = []
    for j, m in enumerate((1, 5, 20)):
        problem = admm.random_quadratic_problem(m, seed=seed + j)
        gamma = 0.7
        report = admm.equivalence_harness(problem, gamma, iters)
        out.append(
            _result(f"admm lockstep identities (m={m}, {iters} iters)",
                    report.max_deviation, 1e-8)
        )
    return out


def suite_rates(seed: int = 0) -> List[CheckResult]:
    """Residual-decay diagnostics on the bound-projection benchmark."""
    inst = problems.build_figure2_instance(seed=seed)
    cert = problems.kkt_oracle(inst)
    A_op, B_op, C_op = problems.assemble_splitting_operators(inst)
    beta = C_op.beta
    out = []
    for gfrac in (0.3, 1.0, 1.8):
        gamma = gfrac / inst.lipschitz
        stepper = lambda z: sp.proposed_step(A_op, B_op, C_op, gamma, z)
        tight = sp.km_iterate(
            stepper, sp.SplitConfig(gamma=gamma, max_iters=200_000, residual_tol=1e-13),
            np.zeros(inst.n),
        )
        z_star = tight.final_z
        trace = sp.km_iterate(
            stepper, sp.SplitConfig(gamma=gamma, max_iters=200_000, residual_tol=1e-10),
            np.zeros(inst.n), reference=cert.x_star, z_reference=z_star,
        )
        report = sp.rate_report(trace)
        alpha_avg = sp.averaged_parameter(beta, gamma)
        tau = sp.km_tau(1.0, alpha_avg)
        bound = float(np.linalg.norm(z_star) ** 2) / tau
        fejer = float(np.nanmax(np.diff(trace.z_dists))) if len(trace) > 1 else 0.0
        out.append(_bool_result(f"residual nonincreasing (gamma={gfrac}/L)",
                                report.residual_monotone))
        out.append(_result(f"residual^2*(k+1) within KM bound (gamma={gfrac}/L)",
                           report.sup_scaled_residual_sq, bound))
        out.append(_result(f"distance to z* nonincreasing (gamma={gfrac}/L)",
                           fejer, 1e-10))
    # the over-stepped Davis-Yin regime must be flagged as non-monotone
    gamma = 40.0 / inst.lipschitz
    dys = sp.km_iterate(
        lambda z: sp.dys_step(A_op, B_op, C_op, gamma, z),
        sp.SplitConfig(gamma=gamma, max_iters=3000, residual_tol=1e-10),
        np.zeros(inst.n),
    )
    out.append(_bool_result("Davis-Yin gamma=40/L flagged non-monotone",
                            not sp.rate_report(dys).residual_monotone))
    return out


SUITES: dict[str, Callable[[], List[CheckResult]]] = {
    "identities": suite_identities,
    "reductions": suite_reductions,
    "admm-equivalence": suite_admm_equivalence,
    "rates": suite_rates,
}


def run_suites(which: str) -> List[CheckResult]:
    if which == "all":
        results = []
        for fn in SUITES.values():
            results.extend(fn())
        return results
    if which not in SUITES:
        raise KeyError(which)
    return SUITES[which]()
