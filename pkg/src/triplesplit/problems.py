"""Benchmark instances, the KKT ground-truth oracle, and operator assembly.

The flagship instance is the bound-constrained projection problem

    min_x  alpha/2 ||x - u||^2   s.t.  lower <= x_i <= upper,  sum(x) = b

with u a noisy sine profile and b = sum(u).  Its exact minimizer is computed
independently of any splitting code by a one-dimensional active-set
root-find on the equality multiplier, which gives every solver run a
ground truth to report errors against.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import operators as ops
from . import splitting as sp

DEFAULT_SEED = 0


class InfeasibleInstanceError(ValueError):
    """The box and the equality constraint have empty intersection."""


@dataclass
class BoundProjectionInstance:
    """One instance of the bound-constrained projection problem."""

    n: int
    lower: float
    upper: float
    alpha: float
    u: np.ndarray
    b: float
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ops.InvalidBoundsError(
                f"need lower < upper, got [{self.lower}, {self.upper}]"
            )
        self.u = ops.as_point(self.u)
        if self.u.shape[0] != self.n:
            raise ValueError("u has wrong dimension")

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of the smooth term's gradient (= alpha)."""
        return self.alpha

    def objective(self, x: np.ndarray) -> float:
        """Smooth part alpha/2 ||x - u||^2 (indicator terms excluded)."""
        d = x - self.u
        return 0.5 * self.alpha * float(d @ d)


def build_figure2_instance(
    n: int = 100,
    seed: int = DEFAULT_SEED,
    lower: float = -1.0,
    upper: float = 1.0,
    alpha: float = 1.0,
    noise_scale: float = 0.8,
) -> BoundProjectionInstance:
    """Noisy-sine profile instance: u_i = sin(2*pi*i/n) + noise_scale*N(0,1).

    The normal draws come from ``numpy.random.default_rng(seed)`` (PCG64, one
    ``standard_normal(n)`` call), so a given seed reproduces u bit-for-bit
    across platforms.  b is set to sum(u).
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    i = np.arange(1, n + 1, dtype=float)
    u = np.sin(2.0 * np.pi * i / n) + noise_scale * rng.standard_normal(n)
    return BoundProjectionInstance(
        n=n, lower=lower, upper=upper, alpha=alpha, u=u, b=float(u.sum()), seed=seed
    )


# ---------------------------------------------------------------------------
# instance file format: one header line "n lower upper alpha b seed",
# then the entries of u, one per line
# ---------------------------------------------------------------------------

def save_instance(instance: BoundProjectionInstance, path) -> None:
    """Write an instance in the flat replayable text format."""
    with open(path, "w", encoding="ascii") as fh:
        _write_instance(instance, fh)


def _write_instance(instance, fh) -> None:
    seed = "none" if instance.seed is None else str(instance.seed)
    fh.write(
        f"{instance.n} {float(instance.lower)!r} {float(instance.upper)!r} "
        f"{float(instance.alpha)!r} {float(instance.b)!r} {seed}\n"
    )
    for value in instance.u:
        fh.write(f"{float(value)!r}\n")


def dumps_instance(instance: BoundProjectionInstance) -> str:
    buf = io.StringIO()
    _write_instance(instance, buf)
    return buf.getvalue()


def load_instance(path) -> BoundProjectionInstance:
    """Read an instance written by :func:`save_instance`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 6:
            raise ValueError(f"malformed instance header: {header}")
        n = int(header[0])
        lower, upper, alpha, b = (float(tok) for tok in header[1:5])
        seed = None if header[5] == "none" else int(header[5])
        u = np.array([float(line) for line in fh if line.strip()], dtype=float)
    if u.shape[0] != n:
        raise ValueError(f"instance file declares n={n} but carries {u.shape[0]} entries")
    inst = BoundProjectionInstance(
        n=n, lower=lower, upper=upper, alpha=alpha, u=u, b=b, seed=seed
    )
    if abs(b - u.sum()) > 1e-9 * (1.0 + abs(b)):
        raise ValueError("instance file is inconsistent: b differs from sum(u)")
    return inst


# ---------------------------------------------------------------------------
# KKT oracle
# ---------------------------------------------------------------------------

@dataclass
class KktCertificate:
    """Exact solution of a bound-projection instance with its multipliers.

    ``multiplier`` is the scalar t for the equality constraint; the minimizer
    is x*_i = clamp(u_i + t/alpha, lower, upper).  The bound multipliers are
    recoverable as t - alpha*(x* - u).
    """

    x_star: np.ndarray
    multiplier: float
    active_lower: np.ndarray
    active_upper: np.ndarray
    instance: BoundProjectionInstance

    def bound_multipliers(self) -> np.ndarray:
        inst = self.instance
        return self.multiplier - inst.alpha * (self.x_star - inst.u)

    def validate(self, tol: float = 1e-10) -> None:
        """Raise AssertionError unless feasibility, stationarity, and
        complementarity all hold at the given tolerance."""
        inst = self.instance
        x = self.x_star
        assert np.all(x >= inst.lower - tol) and np.all(x <= inst.upper + tol)
        assert abs(x.sum() - inst.b) <= 1e-12 * (1.0 + abs(inst.b)), "equality constraint violated"
        nu = self.bound_multipliers()
        inactive = ~(self.active_lower | self.active_upper)
        assert np.all(np.abs(nu[inactive]) <= tol), "stationarity violated off the bounds"
        assert np.all(nu[self.active_upper] >= -tol), "upper multiplier sign violated"
        assert np.all(nu[self.active_lower] <= tol), "lower multiplier sign violated"
        assert np.all(x[self.active_lower] == inst.lower)
        assert np.all(x[self.active_upper] == inst.upper)


def kkt_oracle(instance: BoundProjectionInstance) -> KktCertificate:
    """Solve the instance exactly by active-set root-finding on the multiplier.

    The map t -> sum_i clamp(u_i + t/alpha, lower, upper) is nondecreasing and
    piecewise linear with breakpoints at alpha*(lower - u_i) and
    alpha*(upper - u_i); the solver sweeps the sorted breakpoints, maintaining
    the linear form of the current segment, and solves for t on the segment
    that brackets b.  Independent of every splitting code path.
    """
    inst = instance
    n, lo, hi, alpha, u, b = inst.n, inst.lower, inst.upper, inst.alpha, inst.u, inst.b
    total_lo, total_hi = n * lo, n * hi
    if b < total_lo or b > total_hi:
        raise InfeasibleInstanceError(
            f"b={b} outside attainable range [{total_lo}, {total_hi}]"
        )

    t_lo = alpha * (lo - u)  # coordinate i sits at the lower bound for t <= t_lo[i]
    t_hi = alpha * (hi - u)  # coordinate i sits at the upper bound for t >= t_hi[i]
    events = np.concatenate([np.stack([t_lo, np.zeros(n)], 1), np.stack([t_hi, np.ones(n)], 1)])
    events = events[np.argsort(events[:, 0], kind="stable")]

    # state on the current segment: S(t) = lo*n_lo + hi*n_hi + sum_free_u + (n_free/alpha)*t
    n_lo, n_free, n_hi = n, 0, 0
    sum_free_u = 0.0
    t_solution = None
    for te, kind in events:
        seg_const = lo * n_lo + hi * n_hi + sum_free_u
        s_end = seg_const + (n_free / alpha) * te
        if s_end >= b:
            t_solution = te if n_free == 0 else (b - seg_const) * alpha / n_free
            break
        if kind == 0.0:  # a coordinate leaves the lower bound
            n_lo -= 1
            n_free += 1
            sum_free_u += lo - te / alpha  # u_i recovered from t_lo[i]
        else:  # a coordinate reaches the upper bound
            n_free -= 1
            n_hi += 1
            sum_free_u -= hi - te / alpha
    if t_solution is None:
        # b == n*hi up to the feasibility check; everything at the upper bound
        t_solution = float(events[-1, 0])

    t = float(t_solution)
    x = np.clip(u + t / alpha, lo, hi)
    active_lower = u + t / alpha <= lo
    active_upper = u + t / alpha >= hi
    x[active_lower] = lo
    x[active_upper] = hi
    return KktCertificate(
        x_star=x,
        multiplier=t,
        active_lower=active_lower,
        active_upper=active_upper,
        instance=inst,
    )


# ---------------------------------------------------------------------------
# operator assembly
# ---------------------------------------------------------------------------

def assemble_splitting_operators(instance: BoundProjectionInstance):
    """Operators (A, B, C) for the bound-projection instance.

    A is the box-indicator subdifferential, B the normal cone of the
    sum-equality hyperplane (resolved first by every scheme here), and C the
    quadratic gradient alpha*(x - u) with beta = 1/alpha and an exact prox.
    """
    A_op = ops.box_operator(instance.lower, instance.upper)
    B_op = ops.affine_operator(np.ones((1, instance.n)), [instance.b])
    C_op = ops.quadratic_cocoercive(instance.alpha, instance.u)
    return A_op, B_op, C_op


def explicit_figure2_stepper(
    instance: BoundProjectionInstance,
    gamma: float,
    method: str = "proposed",
    variant: str = "derived",
) -> Callable[[np.ndarray], sp.StepOutput]:
    """Closed-form per-iteration updates for the bound-projection instance.

    ``variant="derived"`` carries the forward-gradient correction with the
    minus sign that the operator form dictates and converges to the KKT
    minimizer.  ``variant="display"`` reproduces the printed explicit
    iteration, whose correction enters with the opposite sign (and whose
    final prox drops the gradient term); it is retained for comparison but
    drives the iteration to a different fixed point.  See the sign-check
    unit test.
    """
    if method not in ("proposed", "dys"):
        raise ValueError(f"unknown method {method!r}")
    if variant not in ("derived", "display"):
        raise ValueError(f"unknown variant {variant!r}")
    n = instance.n
    lo, hi, alpha, u, b = (
        instance.lower,
        instance.upper,
        instance.alpha,
        instance.u,
        instance.b,
    )
    ag = alpha * gamma

    def step(z: np.ndarray) -> sp.StepOutput:
        x_half = z + (b - z.sum()) / n  # projection onto the hyperplane
        c = alpha * (x_half - u)
        if variant == "derived":
            p = np.clip(2.0 * x_half - z - gamma * c, lo, hi)
            if method == "proposed":
                x_next = (p + ag * x_half) / (1.0 + ag)
            else:
                x_next = p
        else:
            p = np.clip(2.0 * x_half - z + gamma * c, lo, hi)
            if method == "proposed":
                x_next = (p + ag * u) / (1.0 + ag)
            else:
                x_next = p
        return sp.StepOutput(
            z=z, x_B=x_half, x_A=p, x_C=x_next, Tz=z + (x_next - x_half), c_at_xB=c
        )

    return step


# ---------------------------------------------------------------------------
# sum-of-quadratics instance (multiblock benchmark)
# ---------------------------------------------------------------------------

@dataclass
class QuadraticSumInstance:
    """min_x sum_i alphas[i]/2 ||x - us[i]||^2; minimizer is the weighted mean."""

    alphas: np.ndarray
    us: list
    seed: Optional[int] = None

    @property
    def blocks(self) -> int:
        return len(self.alphas)

    @property
    def n(self) -> int:
        return self.us[0].shape[0]

    def minimizer(self) -> np.ndarray:
        weighted = sum(a * u for a, u in zip(self.alphas, self.us))
        return weighted / self.alphas.sum()

    def smooth_lipschitz_sum(self) -> float:
        """Sum of the gradient Lipschitz constants of the interior blocks."""
        return float(np.sum(self.alphas[1:-1]))


def build_quadratic_sum_instance(
    n: int, blocks: int = 4, seed: int = DEFAULT_SEED
) -> QuadraticSumInstance:
    """Seeded random quadratics with weights in [0.5, 2.5] and N(0,1) centers."""
    if blocks < 3:
        raise ValueError("need at least 3 blocks")
    rng = np.random.default_rng(seed)
    alphas = rng.uniform(0.5, 2.5, size=blocks)
    us = [rng.standard_normal(n) for _ in range(blocks)]
    return QuadraticSumInstance(alphas=alphas, us=us, seed=seed)


# ---------------------------------------------------------------------------
# composite instance for the linear-map variant (square L only)
# ---------------------------------------------------------------------------

@dataclass
class CompositeInstance:
    """Quadratic f, g, h for min f(x) + g(Lx) + h(x) with square L.

    Carries the oracles consumed by ``splitting.composite_smooth_step`` plus
    the derived step-size data: ``beta_g`` (cocoercivity of grad g) and
    ``gamma_max`` = 2*beta_g/||L||^2.
    """

    L: np.ndarray
    alpha_f: float
    u_f: np.ndarray
    alpha_g: float
    u_g: np.ndarray
    alpha_h: float
    u_h: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        self.L = np.atleast_2d(np.asarray(self.L, dtype=float))
        if self.L.shape[0] != self.L.shape[1]:
            raise ValueError("only square L is supported")

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @property
    def beta_g(self) -> float:
        return 1.0 / self.alpha_g

    @property
    def norm_L(self) -> float:
        return float(np.linalg.norm(self.L, 2))

    @property
    def gamma_max(self) -> float:
        """Admissible step-size cap 2*beta_g/||L||^2."""
        return 2.0 * self.beta_g / self.norm_L**2

    def prox_f(self, gamma, v):
        return ops.prox_quadratic(self.alpha_f, self.u_f, gamma, v)

    def prox_g(self, gamma, v):
        return ops.prox_quadratic(self.alpha_g, self.u_g, gamma, v)

    def prox_h(self, gamma, v):
        return ops.prox_quadratic(self.alpha_h, self.u_h, gamma, v)

    def grad_g(self, y):
        return ops.grad_quadratic(self.alpha_g, self.u_g, y)

    def stepper(self, gamma: float) -> Callable[[np.ndarray], sp.StepOutput]:
        return lambda z: sp.composite_smooth_step(
            self.prox_f, self.L, self.grad_g, self.prox_g, self.prox_h, gamma, z
        )

    def composite_minimizer(self) -> np.ndarray:
        """Stationary point of f(x) + g(Lx) + h(x) by a dense linear solve."""
        n = self.n
        lhs = (self.alpha_f + self.alpha_h) * np.eye(n) + self.alpha_g * self.L.T @ self.L
        rhs = self.alpha_f * self.u_f + self.alpha_g * self.L.T @ self.u_g + self.alpha_h * self.u_h
        return np.linalg.solve(lhs, rhs)

    def scheme_fixed_point(self, gamma: float) -> np.ndarray:
        """Fixed point of the (affine) step map by a dense solve.

        For quadratic f, g, h every prox is affine, hence z -> Tz is affine;
        the fixed point solves (I - M) z = c where M, c are probed columnwise.
        This is the independent oracle for what the iteration converges to.
        """
        n = self.n
        stepper = self.stepper(gamma)
        c = stepper(np.zeros(n)).Tz
        M = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            M[:, j] = stepper(e).Tz - c
        return np.linalg.solve(np.eye(n) - M, c)


def build_composite_instance(n: int, L, seed: int = DEFAULT_SEED) -> CompositeInstance:
    """Seeded random quadratic composite instance; rejects non-square L."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if L.shape[0] != L.shape[1] or L.shape[0] != n:
        raise ValueError("L must be square of size n (see design notes)")
    rng = np.random.default_rng(seed)
    alpha_f, alpha_g, alpha_h = rng.uniform(0.5, 2.0, size=3)
    return CompositeInstance(
        L=L,
        alpha_f=float(alpha_f),
        u_f=rng.standard_normal(n),
        alpha_g=float(alpha_g),
        u_g=rng.standard_normal(n),
        alpha_h=float(alpha_h),
        u_h=rng.standard_normal(n),
        seed=seed,
    )
