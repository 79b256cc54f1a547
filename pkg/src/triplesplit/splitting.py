"""Three-operator splitting steppers, baselines, and the KM fixed-point driver.

All steppers realize one application ``z -> Tz`` of a splitting map for the
inclusion 0 in (A + B + C)x, where A and B are maximal monotone (resolvent
oracles) and C is cocoercive (forward oracle).  The proposed map resolves B
first, then A against a reflected point corrected by a forward C-evaluation,
then C itself:

    x_B = J_gB(z)
    x_A = J_gA(2 x_B - z - gamma*C(x_B))
    x_C = J_gC(x_A + gamma*C(x_B))
    Tz  = z + x_C - x_B

Davis-Yin drops the third resolvent (Tz = z + x_A - x_B) and
Douglas-Rachford additionally drops the forward evaluation.  The governing
sequence z is auxiliary; solutions are read off as x* = J_gB(z*) at a fixed
point z*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .operators import CocoerciveOperator, MonotoneOperator, as_point


class NumericalBlowupError(RuntimeError):
    """A stepper produced a non-finite intermediate; carries the offending iterate."""

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


@dataclass(frozen=True)
class StepOutput:
    """One application of a splitting map with all intermediates retained."""

    z: np.ndarray
    x_B: np.ndarray
    x_A: np.ndarray
    x_C: np.ndarray
    Tz: np.ndarray
    c_at_xB: np.ndarray


def _check_finite(name: str, v: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise NumericalBlowupError(f"non-finite {name} in splitting step", iterate=v)
    return v


def proposed_step(
    A: MonotoneOperator,
    B: MonotoneOperator,
    C: CocoerciveOperator,
    gamma: float,
    z: np.ndarray,
) -> StepOutput:
    """One application of the three-resolvent splitting map.

    Requires a resolvent for C (the exact prox when C is a gradient); raises
    ``ValueError`` if the C operator supplies only a forward oracle.
    """
    if C.resolvent is None:
        raise ValueError("proposed_step needs a resolvent for the cocoercive operator")
    x_B = _check_finite("x_B", B.resolvent(gamma, z))
    c = _check_finite("C(x_B)", C.forward(x_B))
    x_A = _check_finite("x_A", A.resolvent(gamma, 2.0 * x_B - z - gamma * c))
    x_C = _check_finite("x_C", C.resolvent(gamma, x_A + gamma * c))
    return StepOutput(z=z, x_B=x_B, x_A=x_A, x_C=x_C, Tz=z + (x_C - x_B), c_at_xB=c)


def dys_step(
    A: MonotoneOperator,
    B: MonotoneOperator,
    C: CocoerciveOperator,
    gamma: float,
    z: np.ndarray,
) -> StepOutput:
    """One application of the Davis-Yin (forward Douglas-Rachford) map."""
    x_B = _check_finite("x_B", B.resolvent(gamma, z))
    c = _check_finite("C(x_B)", C.forward(x_B))
    x_A = _check_finite("x_A", A.resolvent(gamma, 2.0 * x_B - z - gamma * c))
    return StepOutput(z=z, x_B=x_B, x_A=x_A, x_C=x_A, Tz=z + (x_A - x_B), c_at_xB=c)


def drs_step(
    P: MonotoneOperator,
    Q: MonotoneOperator,
    gamma: float,
    z: np.ndarray,
) -> StepOutput:
    """One application of Douglas-Rachford for 0 in (P + Q)x; Q is resolved first."""
    x_B = _check_finite("x_B", Q.resolvent(gamma, z))
    x_A = _check_finite("x_A", P.resolvent(gamma, 2.0 * x_B - z))
    zeros = np.zeros_like(x_B)
    return StepOutput(z=z, x_B=x_B, x_A=x_A, x_C=x_A, Tz=z + (x_A - x_B), c_at_xB=zeros)


def fbs_variant_step(
    A: MonotoneOperator,
    C: CocoerciveOperator,
    gamma: float,
    z: np.ndarray,
) -> StepOutput:
    """The B = 0 special case: T = J_gC o (J_gA o (I - gamma*C) + gamma*C).

    Not forward-backward splitting, but shares its fixed points:
    Tz = z iff J_gA(z - gamma*C z) = z.
    """
    if C.resolvent is None:
        raise ValueError("fbs_variant_step needs a resolvent for the cocoercive operator")
    x_B = np.array(z, dtype=float, copy=True)
    c = _check_finite("C(z)", C.forward(x_B))
    x_A = _check_finite("x_A", A.resolvent(gamma, 2.0 * x_B - z - gamma * c))
    x_C = _check_finite("x_C", C.resolvent(gamma, x_A + gamma * c))
    return StepOutput(z=z, x_B=x_B, x_A=x_A, x_C=x_C, Tz=z + (x_C - x_B), c_at_xB=c)


def composite_smooth_step(
    prox_f: Callable[[float, np.ndarray], np.ndarray],
    L: np.ndarray,
    grad_g: Callable[[np.ndarray], np.ndarray],
    prox_g: Callable[[float, np.ndarray], np.ndarray],
    prox_h: Callable[[float, np.ndarray], np.ndarray],
    gamma: float,
    z: np.ndarray,
) -> StepOutput:
    """One pass of the composite variant for f(x) + g(Lx) + h(x) with square L.

    Step order: resolve h, push through L, prox f against the pulled-back
    gradient L^T grad_g, prox g (applied in the x-space, which is what pins L
    to be square), KM delta.  For L = I this coincides with ``proposed_step``
    on (A, B, C) = (df, dh, grad g).
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if L.shape[0] != L.shape[1]:
        raise ValueError("composite_smooth_step supports square L only")
    x = _check_finite("x", prox_h(gamma, z))
    gy = _check_finite("grad_g(Lx)", grad_g(L @ x))
    pulled = L.T @ gy
    p = _check_finite("p", prox_f(gamma, 2.0 * x - z - gamma * pulled))
    v = _check_finite("v", prox_g(gamma, p + gamma * gy))
    return StepOutput(z=z, x_B=x, x_A=p, x_C=v, Tz=z + (v - x), c_at_xB=pulled)


# ---------------------------------------------------------------------------
# KM iteration
# ---------------------------------------------------------------------------

CONVERGED = "converged"
MAX_ITERS = "max_iters"
DIVERGED = "diverged"


def averaged_parameter(beta: float, gamma: float) -> float:
    """Averagedness constant 2*beta/(4*beta - gamma) attributed to the proposed map."""
    if not math.isfinite(beta):
        return 0.5
    return 2.0 * beta / (4.0 * beta - gamma)


def admissible_relaxation_bound(beta: float, gamma: float) -> float:
    """Upper end (4*beta - gamma)/(2*beta) of the admissible relaxation range."""
    if not math.isfinite(beta):
        return 2.0
    return (4.0 * beta - gamma) / (2.0 * beta)


def km_tau(lmbda: float, alpha: float) -> float:
    """Per-step descent weight (lambda/alpha)*(1 - alpha*lambda) of the KM inequality."""
    return (lmbda / alpha) * (1.0 - alpha * lmbda)


@dataclass
class SplitConfig:
    """Step size, relaxation schedule, and stopping policy for ``km_iterate``.

    ``lambda_schedule`` may be a constant or a callable k -> lambda_k taking
    values in (0, 2).  In strict mode the schedule is additionally checked
    against the admissible bound (4*beta - gamma)/(2*beta), which requires
    ``beta``; the default leaves the bound unenforced because the step-size
    robustness experiment deliberately runs far outside it.
    """

    gamma: float
    lambda_schedule: float | Callable[[int], float] = 1.0
    max_iters: int = 100_000
    residual_tol: float = 1e-10
    divergence_threshold: float = 1e12
    strict_relaxation: bool = False
    beta: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.residual_tol < 0:
            raise ValueError("residual_tol must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.strict_relaxation and self.beta is None:
            raise ValueError("strict relaxation checking requires beta")

    def relaxation(self, k: int) -> float:
        lam = self.lambda_schedule(k) if callable(self.lambda_schedule) else self.lambda_schedule
        lam = float(lam)
        if not 0.0 < lam < 2.0:
            raise ValueError(f"lambda_{k} = {lam} outside (0, 2)")
        if self.strict_relaxation:
            bound = admissible_relaxation_bound(self.beta, self.gamma)
            if lam >= bound:
                raise ValueError(f"lambda_{k} = {lam} violates admissible bound {bound}")
        return lam


@dataclass
class Trace:
    """Per-iteration record stream of a KM run.

    ``iterations[j]`` is the iteration index of record j, ``residuals[j]`` the
    fixed-point residual ||Tz - z||, ``errors[j]`` the distance ||x_B - x*||
    to the supplied reference (NaN when none), ``z_dists[j]`` the distance
    ||z - z_ref|| to a supplied governing-point reference (NaN when none).
    """

    iterations: np.ndarray
    residuals: np.ndarray
    errors: np.ndarray
    z_norms: np.ndarray
    z_dists: np.ndarray
    status: str
    final_z: np.ndarray
    final_step: Optional[StepOutput] = None
    gaps: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.iterations)

    @property
    def final_x_B(self) -> Optional[np.ndarray]:
        return None if self.final_step is None else self.final_step.x_B

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1]) if len(self.residuals) else math.nan


def km_iterate(
    stepper: Callable[[np.ndarray], StepOutput],
    config: SplitConfig,
    z0: np.ndarray,
    reference: Optional[np.ndarray] = None,
    z_reference: Optional[np.ndarray] = None,
    on_step: Optional[Callable[[int, StepOutput], None]] = None,
) -> Trace:
    """Relaxed fixed-point loop z_{k+1} = z_k + lambda_k*(T z_k - z_k).

    Stops when the residual ||T z_k - z_k|| drops to ``config.residual_tol``
    (converged), after ``config.max_iters`` recorded iterations (max_iters),
    or when the governing point leaves the divergence ball or a stepper
    blows up (diverged; the partial trace is retained).

    Parameters
    ----------
    stepper : callable z -> StepOutput with operators already bound.
    config : SplitConfig
    z0 : initial governing point.
    reference : optional solution x*; records ||x_B^k - x*|| per iteration.
    z_reference : optional fixed point z*; records ||z_k - z*|| per iteration.
    on_step : optional callback invoked as on_step(k, step) for each step.
    """
    z = as_point(z0)
    cap = config.max_iters + 1
    iters = np.empty(cap, dtype=np.int64)
    residuals = np.empty(cap, dtype=float)
    errors = np.full(cap, np.nan)
    z_norms = np.empty(cap, dtype=float)
    z_dists = np.full(cap, np.nan)

    status = MAX_ITERS
    step: Optional[StepOutput] = None
    n_rec = 0
    k = 0
    while k <= config.max_iters:
        z_norm = float(np.linalg.norm(z))
        if not np.isfinite(z_norm) or z_norm > config.divergence_threshold:
            status = DIVERGED
            break
        try:
            step = stepper(z)
        except NumericalBlowupError:
            status = DIVERGED
            break
        residual = float(np.linalg.norm(step.Tz - z))
        iters[n_rec] = k
        residuals[n_rec] = residual
        z_norms[n_rec] = z_norm
        if reference is not None:
            errors[n_rec] = float(np.linalg.norm(step.x_B - reference))
        if z_reference is not None:
            z_dists[n_rec] = float(np.linalg.norm(z - z_reference))
        n_rec += 1
        if on_step is not None:
            on_step(k, step)
        if not np.isfinite(residual):
            status = DIVERGED
            break
        if residual <= config.residual_tol:
            status = CONVERGED
            break
        if k == config.max_iters:
            status = MAX_ITERS
            break
        lam = config.relaxation(k)
        z = z + lam * (step.Tz - z)
        k += 1

    return Trace(
        iterations=iters[:n_rec],
        residuals=residuals[:n_rec],
        errors=errors[:n_rec],
        z_norms=z_norms[:n_rec],
        z_dists=z_dists[:n_rec],
        status=status,
        final_z=z,
        final_step=step,
    )


def solution_from_fixed_point(
    z_star: np.ndarray, B: MonotoneOperator, gamma: float
) -> np.ndarray:
    """Recover a zero of A + B + C from an (approximate) fixed point: x* = J_gB(z*)."""
    return B.resolvent(gamma, z_star)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepIdentityReport:
    """Residuals of the step identities satisfied by every proposed step.

    With u_B = (z - x_B)/gamma, u_A = (2x_B - z - gamma*C(x_B) - x_A)/gamma and
    u_C = (x_A + gamma*C(x_B) - x_C)/gamma the step satisfies
    Tz - z = x_C - x_B = -gamma*(u_A + u_B + u_C) and Tz = x_C + gamma*u_B.
    """

    u_A: np.ndarray
    u_B: np.ndarray
    u_C: np.ndarray
    sum_identity_violation: float
    anchor_identity_violation: float

    @property
    def max_violation(self) -> float:
        return max(self.sum_identity_violation, self.anchor_identity_violation)


def step_identity_diagnostics(
    step: StepOutput,
    A: MonotoneOperator,
    B: MonotoneOperator,
    C: CocoerciveOperator,
    gamma: float,
) -> StepIdentityReport:
    """Reconstruct the operator elements of a proposed step and check its identities."""
    z, x_B, x_A, x_C, c = step.z, step.x_B, step.x_A, step.x_C, step.c_at_xB
    u_B = (z - x_B) / gamma
    u_A = (2.0 * x_B - z - gamma * c - x_A) / gamma
    u_C = (x_A + gamma * c - x_C) / gamma
    delta = step.Tz - z
    sum_violation = max(
        float(np.linalg.norm(delta - (x_C - x_B))),
        float(np.linalg.norm(delta + gamma * (u_A + u_B + u_C))),
    )
    anchor_violation = float(np.linalg.norm(step.Tz - (x_C + gamma * u_B)))
    return StepIdentityReport(
        u_A=u_A,
        u_B=u_B,
        u_C=u_C,
        sum_identity_violation=sum_violation,
        anchor_identity_violation=anchor_violation,
    )


@dataclass(frozen=True)
class RateReport:
    """Residual-decay summary of a trace.

    ``sup_scaled_residual_sq`` is sup_k residual_k^2 * (k+1); the KM descent
    inequality for averaged maps bounds it by ||z0 - z*||^2 / tau.  ``tail_slope`` is the log-log
    regression slope of residual vs (k+1) over the final half of the trace.
    """

    residual_monotone: bool
    sup_scaled_residual_sq: float
    tail_slope: float


def rate_report(trace: Trace, monotone_slack: float = 1e-12) -> RateReport:
    """Summarize residual monotonicity, the scaled-residual sup, and the tail slope."""
    r = np.asarray(trace.residuals, dtype=float)
    k = np.asarray(trace.iterations, dtype=float)
    if len(r) == 0:
        raise ValueError("rate_report needs a nonempty trace")
    monotone = bool(np.all(np.diff(r) <= monotone_slack))
    sup_scaled = float(np.max(r**2 * (k + 1.0)))
    half = len(r) // 2
    tail_r = r[half:]
    tail_k = k[half:] + 1.0
    mask = tail_r > 0
    if mask.sum() >= 2:
        slope = float(np.polyfit(np.log(tail_k[mask]), np.log(tail_r[mask]), 1)[0])
    else:
        slope = math.nan
    return RateReport(
        residual_monotone=monotone,
        sup_scaled_residual_sq=sup_scaled,
        tail_slope=slope,
    )
