"""Three-block ADMM and its correspondence with the dual splitting iteration.

For the separable problem

    min f1(x1) + f2(x2) + f3(x3)   s.t.  A1 x1 + A2 x2 + A3 x3 = b

(with f2 strongly convex), the dual functions are d_i(w) = f_i^*(A_i^T w)
with a linear tilt -<w, b> folded into d3.  A Gauss-Seidel ADMM pass over
x1, x2, x3 followed by the multiplier update is, step for step, the
three-prox splitting iteration on (d1, d2, d3); the harness here certifies
that correspondence numerically, identity by identity.

The supported block catalog (quadratic, box indicator, affine-set indicator)
is exactly the set for which every ADMM subproblem and every dual prox has a
closed form, so the identities can be checked at machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import operators as ops
from . import splitting as sp


class UnsupportedBlockError(ValueError):
    """Block/coupling combination outside the closed-form catalog."""


# ---------------------------------------------------------------------------
# block catalog
# ---------------------------------------------------------------------------

class _Block:
    """Common interface: ADMM subproblem solve and conjugate-side oracles."""

    A: np.ndarray

    def argmin(self, gamma: float, r: np.ndarray) -> np.ndarray:
        """Exact solution of min_x f(x) + gamma/2 ||A x + r||^2."""
        raise NotImplementedError

    def conjugate_prox(self, gamma: float, y: np.ndarray) -> np.ndarray:
        """prox with step gamma of y -> f*(A^T y)."""
        raise NotImplementedError

    def conjugate_value(self, y: np.ndarray) -> float:
        """f*(A^T y)."""
        raise NotImplementedError


def _require_scaled_isometry(A: np.ndarray, what: str) -> float:
    gram = A.T @ A
    c = float(np.trace(gram)) / gram.shape[0]
    if c <= 0 or np.max(np.abs(gram - c * np.eye(gram.shape[0]))) > 1e-12 * max(1.0, c):
        raise UnsupportedBlockError(
            f"{what} blocks need a coupling matrix with A^T A = c*I"
        )
    return c


class QuadraticBlock(_Block):
    """f(x) = alpha/2 ||x - u||^2 coupled through any dense A."""

    def __init__(self, alpha: float, u, A):
        if alpha <= 0:
            raise UnsupportedBlockError("quadratic block needs alpha > 0")
        self.alpha = float(alpha)
        self.u = ops.as_point(u)
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        if self.A.shape[1] != self.u.shape[0]:
            raise ValueError("A and u dimensions disagree")
        self._primal_factors: dict[float, tuple] = {}
        self._dual_factors: dict[float, tuple] = {}

    @property
    def strong_convexity(self) -> float:
        return self.alpha

    def argmin(self, gamma, r):
        fac = self._primal_factors.get(gamma)
        if fac is None:
            n = self.A.shape[1]
            fac = cho_factor(self.alpha * np.eye(n) + gamma * self.A.T @ self.A)
            self._primal_factors[gamma] = fac
        return cho_solve(fac, self.alpha * self.u - gamma * self.A.T @ r)

    def conjugate_prox(self, gamma, y):
        fac = self._dual_factors.get(gamma)
        if fac is None:
            m = self.A.shape[0]
            fac = cho_factor(np.eye(m) + (gamma / self.alpha) * self.A @ self.A.T)
            self._dual_factors[gamma] = fac
        return cho_solve(fac, y - gamma * (self.A @ self.u))

    def conjugate_value(self, y):
        s = self.A.T @ y
        return float(s @ self.u + 0.5 * (s @ s) / self.alpha)

    def conjugate_grad(self, y):
        """Gradient of w -> f*(A^T w); defined because f is strongly convex."""
        return self.A @ (self.u + (self.A.T @ y) / self.alpha)

    def primal_from_dual(self, y):
        """x attaining the conjugate sup at A^T y (= grad f*(A^T y))."""
        return self.u + (self.A.T @ y) / self.alpha


class BoxBlock(_Block):
    """f = indicator of [lower, upper]^n; coupling A must satisfy A^T A = c I."""

    def __init__(self, lower: float, upper: float, A):
        if not lower < upper:
            raise ops.InvalidBoundsError(f"need lower < upper, got [{lower}, {upper}]")
        self.lower, self.upper = float(lower), float(upper)
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.c = _require_scaled_isometry(self.A, "box")

    def argmin(self, gamma, r):
        return np.clip(-(self.A.T @ r) / self.c, self.lower, self.upper)

    def _support_prox(self, s, y):
        # Moreau: prox of s * (support function of the box)
        return y - s * np.clip(y / s, self.lower, self.upper)

    def conjugate_prox(self, gamma, y):
        inner = self.A.T @ y
        return y + (self.A @ (self._support_prox(self.c * gamma, inner) - inner)) / self.c

    def conjugate_value(self, y):
        s = self.A.T @ y
        return float(
            np.sum(self.upper * np.maximum(s, 0.0) + self.lower * np.minimum(s, 0.0))
        )


class AffineBlock(_Block):
    """f = indicator of {x : E x = e}; coupling A must satisfy A^T A = c I."""

    def __init__(self, E, e, A):
        self.E = np.atleast_2d(np.asarray(E, dtype=float))
        self.e = np.atleast_1d(np.asarray(e, dtype=float))
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.c = _require_scaled_isometry(self.A, "affine")
        self._projector = ops.AffineProjector(self.E, self.e)
        gram = self.E @ self.E.T
        self._gram_cho = cho_factor(gram)
        self.x_hat = self.E.T @ cho_solve(self._gram_cho, self.e)  # least-norm solution

    def argmin(self, gamma, r):
        return self._projector(-(self.A.T @ r) / self.c)

    def _range_project(self, y):
        return self.E.T @ cho_solve(self._gram_cho, self.E @ y)

    def conjugate_prox(self, gamma, y):
        # prox of s*f* with f*(y) = <y, x_hat> + indicator of range(E^T)
        inner = self.A.T @ y
        s = self.c * gamma
        moved = self._range_project(inner - s * self.x_hat)
        return y + (self.A @ (moved - inner)) / self.c

    def conjugate_value(self, y):
        s = self.A.T @ y
        return float(s @ self.x_hat)

    def conjugate_domain_distance(self, y):
        """Distance of A^T y from range(E^T); 0 on the domain of f*."""
        s = self.A.T @ y
        return float(np.linalg.norm(s - self._range_project(s)))


# ---------------------------------------------------------------------------
# separable problem and ADMM
# ---------------------------------------------------------------------------

@dataclass
class SeparableProblem:
    """Three blocks, their couplings, and the right-hand side.

    The middle block must be strongly convex (quadratic) because the dual
    iteration forward-evaluates grad d2; the catalog enforces that here.
    """

    blocks: Sequence[_Block]
    b: np.ndarray
    strongly_convex_index: int = 1

    def __post_init__(self):
        if len(self.blocks) != 3:
            raise ValueError("exactly three blocks required")
        self.b = ops.as_point(self.b)
        m = self.b.shape[0]
        for blk in self.blocks:
            if blk.A.shape[0] != m:
                raise ValueError("coupling matrices must share the constraint dimension")
        if self.strongly_convex_index != 1:
            raise UnsupportedBlockError(
                "the dual correspondence needs the middle block to be the strongly convex one"
            )
        if not isinstance(self.blocks[1], QuadraticBlock):
            raise UnsupportedBlockError("middle block must be quadratic (strongly convex)")

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def mu(self) -> float:
        return self.blocks[1].strong_convexity

    def constraint_residual(self, xs) -> float:
        acc = -self.b
        for blk, x in zip(self.blocks, xs):
            acc = acc + blk.A @ x
        return float(np.linalg.norm(acc))


@dataclass
class AdmmState:
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    w: np.ndarray
    gamma: float


def initial_state(problem: SeparableProblem, gamma: float, w0=None) -> AdmmState:
    """Zero primal blocks and multiplier (or a supplied w0)."""
    dims = [blk.A.shape[1] for blk in problem.blocks]
    w = np.zeros(problem.m) if w0 is None else ops.as_point(w0)
    return AdmmState(
        x1=np.zeros(dims[0]), x2=np.zeros(dims[1]), x3=np.zeros(dims[2]), w=w, gamma=gamma
    )


def admm3_step(problem: SeparableProblem, state: AdmmState) -> AdmmState:
    """One Gauss-Seidel pass x1 -> x2 -> x3 followed by the multiplier update."""
    b1, b2, b3 = problem.blocks
    g = state.gamma
    base = -problem.b - state.w / g
    x1 = b1.argmin(g, b2.A @ state.x2 + b3.A @ state.x3 + base)
    x2 = b2.argmin(g, b1.A @ x1 + b3.A @ state.x3 + base)
    x3 = b3.argmin(g, b1.A @ x1 + b2.A @ x2 + base)
    w = state.w - g * (b1.A @ x1 + b2.A @ x2 + b3.A @ x3 - problem.b)
    return AdmmState(x1=x1, x2=x2, x3=x3, w=w, gamma=g)


# ---------------------------------------------------------------------------
# dual construction
# ---------------------------------------------------------------------------

@dataclass
class DualFunctions:
    """Prox/value/gradient oracles of the dual triple (d1, d2, d3).

    d_i(w) = f_i^*(A_i^T w) for i = 1, 2 and d3(w) = f3^*(A3^T w) - <w, b>.
    (The tilt belongs to the block resolved first; its prox shifts the
    argument by gamma*b.)  ``lipschitz2`` = ||A2||^2 / mu bounds grad d2.
    """

    problem: SeparableProblem
    lipschitz2: float

    def prox1(self, gamma, v):
        return self.problem.blocks[0].conjugate_prox(gamma, v)

    def prox2(self, gamma, v):
        return self.problem.blocks[1].conjugate_prox(gamma, v)

    def prox3(self, gamma, v):
        # prox of a linearly tilted function: shift by gamma*b
        return self.problem.blocks[2].conjugate_prox(gamma, v + gamma * self.problem.b)

    def grad2(self, w):
        return self.problem.blocks[1].conjugate_grad(w)

    def value1(self, w):
        return self.problem.blocks[0].conjugate_value(w)

    def value2(self, w):
        return self.problem.blocks[1].conjugate_value(w)

    def value3(self, w):
        return self.problem.blocks[2].conjugate_value(w) - float(w @ self.problem.b)

    def total_value(self, w) -> float:
        return self.value1(w) + self.value2(w) + self.value3(w)

    def splitting_operators(self):
        """(A, B, C) wiring of the dual triple for the splitting steppers."""
        A_op = ops.MonotoneOperator(resolvent=self.prox1, kind="dual-d1")
        B_op = ops.MonotoneOperator(resolvent=self.prox3, kind="dual-d3")
        beta = np.inf if self.lipschitz2 == 0.0 else 1.0 / self.lipschitz2
        C_op = ops.CocoerciveOperator(
            forward=self.grad2,
            beta=beta,
            resolvent=self.prox2,
            kind="dual-d2",
        )
        return A_op, B_op, C_op


def build_dual(problem: SeparableProblem) -> DualFunctions:
    """Dual oracles for a catalog problem; fails fast on unsupported blocks."""
    a2 = problem.blocks[1].A
    lipschitz2 = float(np.linalg.norm(a2, 2) ** 2 / problem.mu)
    return DualFunctions(problem=problem, lipschitz2=lipschitz2)


@dataclass(frozen=True)
class DualWitness:
    """One dual-splitting step: governing point, the three prox points, z+."""

    z: np.ndarray
    w_d3: np.ndarray
    w_d1: np.ndarray
    w_d2: np.ndarray
    z_next: np.ndarray

    @classmethod
    def from_step(cls, step: sp.StepOutput) -> "DualWitness":
        return cls(z=step.z, w_d3=step.x_B, w_d1=step.x_A, w_d2=step.x_C, z_next=step.Tz)


def run_dual_splitting(
    dual: DualFunctions, gamma: float, z0, iters: int
) -> List[DualWitness]:
    """Plain (lambda = 1) dual-splitting run collecting one witness per step."""
    A_op, B_op, C_op = dual.splitting_operators()
    z = ops.as_point(z0)
    out = []
    for _ in range(iters):
        step = sp.proposed_step(A_op, B_op, C_op, gamma, z)
        out.append(DualWitness.from_step(step))
        z = step.Tz
    return out


# ---------------------------------------------------------------------------
# equivalence harness
# ---------------------------------------------------------------------------

@dataclass
class EquivalenceReport:
    """Worst-case deviations of the ADMM trajectory from the dual iteration.

    The four contract identities are checked with the d2 term carried as the
    subgradient element A2 x2^{k+1} that the ADMM pass itself certifies (it
    equals grad d2 at the previous smooth prox point, and at any fixed point
    equals grad d2(w^{k+1})).  ``literal_gradient_gap`` reports how far that
    element sits from grad d2(w^{k+1}) along the run — the quantity the
    derivation silently treats as zero — and ``algorithm2_drift`` the distance
    between the self-contained dual iteration and the ADMM-reconstructed
    governing sequence; both decay as the runs converge but are O(1) early.
    """

    resolvent_first: np.ndarray      # (a) w^{k+1} vs prox_d3(z^k)
    reflected: np.ndarray            # (b) p^{k+1} vs prox_d1(2w - z - gamma*g2)
    smooth: np.ndarray               # (c) v^{k+1} vs prox_d2(p + gamma*g2)
    governing_update: np.ndarray     # (d) z^{k+1} vs z^k + v - w
    literal_gradient_gap: np.ndarray
    algorithm2_drift: np.ndarray

    @property
    def max_deviation(self) -> float:
        return max(
            float(self.resolvent_first.max()),
            float(self.reflected.max()),
            float(self.smooth.max()),
            float(self.governing_update.max()),
        )


def equivalence_harness(
    problem: SeparableProblem, gamma: float, iters: int
) -> EquivalenceReport:
    """Run ADMM and the dual iteration in lockstep and measure the identities.

    The governing point is tied to the primal side by
    z^k = w^k - gamma*(A1 x1^{k+1} + A2 x2^{k+1}), seeded from one warm pass,
    and the dual points are reconstructed from the next pass as

        p^{k+1} = w^{k+1} - gamma*(A1 x1^{k+2} + A2 x2^{k+1} + A3 x3^{k+1} - b)
        v^{k+1} = w^{k+1} - gamma*(A1 x1^{k+2} + A2 x2^{k+2} + A3 x3^{k+1} - b).
    """
    dual = build_dual(problem)
    A1, A2, A3 = (blk.A for blk in problem.blocks)
    b = problem.b

    prev = initial_state(problem, gamma)
    w_prev = prev.w
    cur = admm3_step(problem, prev)                     # x^{1}, w^{1}
    z = w_prev - gamma * (A1 @ cur.x1 + A2 @ cur.x2)    # z^0

    z_alg = z.copy()
    A_op, B_op, C_op = dual.splitting_operators()

    dev_a = np.empty(iters)
    dev_b = np.empty(iters)
    dev_c = np.empty(iters)
    dev_d = np.empty(iters)
    grad_gap = np.empty(iters)
    drift = np.empty(iters)

    for k in range(iters):
        nxt = admm3_step(problem, cur)                  # x^{k+2}, w^{k+2}
        w = cur.w                                       # w^{k+1}
        g2 = A2 @ cur.x2                                # certified element of d2
        p = w - gamma * (A1 @ nxt.x1 + A2 @ cur.x2 + A3 @ cur.x3 - b)
        v = w - gamma * (A1 @ nxt.x1 + A2 @ nxt.x2 + A3 @ cur.x3 - b)
        z_next = w - gamma * (A1 @ nxt.x1 + A2 @ nxt.x2)

        dev_a[k] = np.linalg.norm(w - dual.prox3(gamma, z))
        dev_b[k] = np.linalg.norm(p - dual.prox1(gamma, 2.0 * w - z - gamma * g2))
        dev_c[k] = np.linalg.norm(v - dual.prox2(gamma, p + gamma * g2))
        dev_d[k] = np.linalg.norm(z_next - (z + v - w))
        grad_gap[k] = np.linalg.norm(dual.grad2(w) - g2)

        drift[k] = np.linalg.norm(z_alg - z)
        z_alg = sp.proposed_step(A_op, B_op, C_op, gamma, z_alg).Tz

        z = z_next
        cur = nxt

    return EquivalenceReport(
        resolvent_first=dev_a,
        reflected=dev_b,
        smooth=dev_c,
        governing_update=dev_d,
        literal_gradient_gap=grad_gap,
        algorithm2_drift=drift,
    )


# ---------------------------------------------------------------------------
# dual diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualIdentityReport:
    """Residuals of the five per-step identities of the dual iteration."""

    first_step: float        # (i)   w_d3 = z - gamma*grad d3(w_d3)
    reflected_sum: float     # (ii)  w_d1 - w_d3 = -gamma*(g1 + g2(w_d3) + g3)
    smooth_sum: float        # (iii) w_d2 - w_d3 = -gamma*(g1 + g2(w_d2) + g3)
    gradient_swap: float     # (iv)  w_d1 - w_d3 = w_d2 - w_d3 + gamma*(g2(w_d2) - g2(w_d3))
    governing_delta: float   # (v)   z+ - z = w_d2 - w_d3

    @property
    def max_residual(self) -> float:
        return max(
            self.first_step,
            self.reflected_sum,
            self.smooth_sum,
            self.gradient_swap,
            self.governing_delta,
        )


def dual_step_identities(dual: DualFunctions, z, gamma: float) -> DualIdentityReport:
    """Evaluate one dual step at z and check its five identities.

    Subgradient elements of the nonsmooth pieces are reconstructed from the
    prox outputs as (input - output)/gamma; the smooth piece d2 uses its
    gradient oracle where the identities evaluate it off the prox points.
    """
    z = ops.as_point(z)
    w_d3 = dual.prox3(gamma, z)
    g2_at_3 = dual.grad2(w_d3)
    arg1 = 2.0 * w_d3 - z - gamma * g2_at_3
    w_d1 = dual.prox1(gamma, arg1)
    arg2 = w_d1 + gamma * g2_at_3
    w_d2 = dual.prox2(gamma, arg2)
    z_next = z + w_d2 - w_d3

    g3 = (z - w_d3) / gamma
    g1 = (arg1 - w_d1) / gamma
    g2_at_2 = (arg2 - w_d2) / gamma

    norm = np.linalg.norm
    return DualIdentityReport(
        first_step=float(norm(w_d3 - (z - gamma * g3))),
        reflected_sum=float(norm((w_d1 - w_d3) + gamma * (g1 + g2_at_3 + g3))),
        smooth_sum=float(norm((w_d2 - w_d3) + gamma * (g1 + g2_at_2 + g3))),
        gradient_swap=float(
            norm((w_d1 - w_d3) - (w_d2 - w_d3 + gamma * (g2_at_2 - g2_at_3)))
        ),
        governing_delta=float(norm((z_next - z) - (w_d2 - w_d3))),
    )


def objective_gap_trace(
    dual: DualFunctions, witnesses: Sequence[DualWitness], w_star
) -> np.ndarray:
    """Objective gap (d1+d2+d3)(w_d3^k) - (d1+d2+d3)(w*) per iteration."""
    ref = dual.total_value(ops.as_point(w_star))
    return np.array([dual.total_value(wit.w_d3) - ref for wit in witnesses])


def scaled_gap_trace(gaps: np.ndarray) -> np.ndarray:
    """gap_k * sqrt(k+1), the quantity whose decay the sublinear rate predicts."""
    k = np.arange(len(gaps), dtype=float)
    return gaps * np.sqrt(k + 1.0)


@dataclass(frozen=True)
class SandwichReport:
    """Per-iteration lower bound, mixed-point gap, and upper bound.

    middle = 2*gamma*(d1(w_d1) + d2(w_d3) + d3(w_d3) - (d1+d2+d3)(w*)),
    bracketed below by the supporting-hyperplane bound at w* and above by
    the descent-style bound built from consecutive governing points.
    """

    lower: np.ndarray
    middle: np.ndarray
    upper: np.ndarray


def objective_gap_sandwich(
    dual: DualFunctions,
    witnesses: Sequence[DualWitness],
    gamma: float,
    w_star,
    grad_d1_star,
) -> SandwichReport:
    """Evaluate the upper/lower objective-gap inequalities along a dual run.

    ``grad_d1_star`` must be a subgradient element of d1 at w* chosen so the
    optimality condition grad_d1_star + grad d2(w*) + grad_d3 = 0 holds (the
    primal-optimal reconstruction A1 x1* provides it).
    """
    w_star = ops.as_point(w_star)
    ref = dual.total_value(w_star)
    g1s = ops.as_point(grad_d1_star)
    lower = np.empty(len(witnesses))
    middle = np.empty(len(witnesses))
    upper = np.empty(len(witnesses))
    for k, wit in enumerate(witnesses):
        z, zn = wit.z, wit.z_next
        g2_3 = dual.grad2(wit.w_d3)
        g2_2 = dual.grad2(wit.w_d2)
        mixed = dual.value1(wit.w_d1) + dual.value2(wit.w_d3) + dual.value3(wit.w_d3) - ref
        middle[k] = 2.0 * gamma * mixed
        dz = z - zn
        nz = np.linalg.norm
        upper[k] = (
            nz(z - w_star) ** 2
            - nz(dz) ** 2
            - nz(zn - w_star) ** 2
            + 2.0 * gamma * float((g2_3 - g2_2) @ (z - w_star))
            - 2.0 * gamma * float((g2_3 - g2_2) @ dz)
            + 2.0 * gamma * float(dz @ g2_2)
            + 2.0 * gamma**2 * float((g2_3 - g2_2) @ g2_2)
        )
        lower[k] = 2.0 * gamma * (
            float((wit.w_d2 - wit.w_d3) @ g1s)
            + gamma * float((g2_2 - g2_3) @ g1s)
        )
    return SandwichReport(lower=lower, middle=middle, upper=upper)


# ---------------------------------------------------------------------------
# ground truth for all-quadratic problems
# ---------------------------------------------------------------------------

def solve_kkt(problem: SeparableProblem):
    """Direct dense KKT solve for all-quadratic problems.

    Solves alpha_i (x_i - u_i) = A_i^T w (blockwise stationarity) together
    with sum_i A_i x_i = b; returns (xs, w).  Independent of every iterative
    path; the oracle for equivalence and gap tests.
    """
    blocks = problem.blocks
    if not all(isinstance(blk, QuadraticBlock) for blk in blocks):
        raise UnsupportedBlockError("direct KKT solve covers all-quadratic problems only")
    m = problem.m
    dims = [blk.A.shape[1] for blk in blocks]
    size = sum(dims) + m
    K = np.zeros((size, size))
    rhs = np.zeros(size)
    off = 0
    for blk, d in zip(blocks, dims):
        K[off : off + d, off : off + d] = blk.alpha * np.eye(d)
        K[off : off + d, -m:] = -blk.A.T
        K[-m:, off : off + d] = blk.A
        rhs[off : off + d] = blk.alpha * blk.u
        off += d
    rhs[-m:] = problem.b
    sol = np.linalg.solve(K, rhs)
    xs = []
    off = 0
    for d in dims:
        xs.append(sol[off : off + d])
        off += d
    return xs, sol[-m:]


def random_quadratic_problem(m: int, seed: int, dims=None) -> SeparableProblem:
    """Seeded random all-quadratic three-block instance with m constraints."""
    rng = np.random.default_rng(seed)
    if dims is None:
        dims = [int(d) for d in rng.integers(max(2, m // 2), m + 3, size=3)]
    blocks = []
    for d in dims:
        alpha = float(rng.uniform(0.5, 2.5))
        u = rng.standard_normal(d)
        A = rng.standard_normal((m, d))
        blocks.append(QuadraticBlock(alpha, u, A))
    return SeparableProblem(blocks=blocks, b=rng.standard_normal(m))


# ---------------------------------------------------------------------------
# the bound-projection instance as a separable problem (consensus form)
# ---------------------------------------------------------------------------

def consensus_dual_problem(instance) -> SeparableProblem:
    """Cast the bound-projection instance as a three-block separable problem.

    Blocks x1, x2, x3 in R^n are tied together by the 2n consensus equations
    x1 - x2 = 0 and x2 - x3 = 0; f1 is the box indicator, f2 the quadratic
    (the strongly convex middle block, mu = alpha), f3 the sum-equality
    indicator.  Its dual is the finite, Lipschitz-objective testbed for the
    objective-gap rate: d1 becomes a box support function (globally
    Lipschitz), which keeps the dual objective finite along the run and makes
    the sublinear gap-rate check meaningful.
    """
    n = instance.n
    eye = np.eye(n)
    zero = np.zeros((n, n))
    A1 = np.vstack([eye, zero])
    A2 = np.vstack([-eye, eye])
    A3 = np.vstack([zero, -eye])
    blocks = [
        BoxBlock(instance.lower, instance.upper, A1),
        QuadraticBlock(instance.alpha, instance.u, A2),
        AffineBlock(np.ones((1, n)), [instance.b], A3),
    ]
    return SeparableProblem(blocks=blocks, b=np.zeros(2 * n))


def consensus_dual_optimum(instance, certificate):
    """Dual optimum (w*, grad_d1(w*)) of the consensus dual from the primal KKT.

    w* = (rho, t*1) where t is the equality multiplier and rho the bound
    multipliers; the d1 subgradient element at w* is A1 x* (primal-optimal
    reconstruction).  Strong duality pins the optimal dual value at minus the
    primal optimum, which callers can (and the tests do) cross-check.
    """
    t = certificate.multiplier
    rho = certificate.bound_multipliers()
    n = instance.n
    w_star = np.concatenate([rho, np.full(n, t)])
    x_star = certificate.x_star
    grad_d1_star = np.concatenate([x_star, np.zeros(n)])  # A1 @ x*
    return w_star, grad_d1_star
