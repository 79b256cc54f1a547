"""Proximal / resolvent toolbox.

Every splitting scheme in this package touches set-valued operators only
through their resolvents ``J = (I + gamma*Op)^{-1}`` and touches single-valued
cocoercive operators through forward evaluations (plus an optional resolvent
when a scheme needs one).  Points are plain 1-D float64 numpy arrays.

Resolvent oracles all share the calling convention ``oracle(gamma, v)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class InvalidBoundsError(ValueError):
    """Raised when box bounds satisfy lower >= upper."""


class SingularConstraintError(ValueError):
    """Raised when an affine constraint matrix is (numerically) rank deficient."""


class SingularOperatorError(ValueError):
    """Raised when a resolvent linear system cannot be factorized."""


def as_point(x) -> np.ndarray:
    """Coerce to a finite 1-D float64 vector."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"points must be 1-D vectors, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("point contains non-finite entries")
    return v


# ---------------------------------------------------------------------------
# prox catalog
# ---------------------------------------------------------------------------

def prox_box(lower: float, upper: float, gamma: float, v: np.ndarray) -> np.ndarray:
    """Prox of the box indicator: componentwise clamp to [lower, upper].

    Independent of ``gamma`` (indicator function).
    """
    if not lower < upper:
        raise InvalidBoundsError(f"need lower < upper, got [{lower}, {upper}]")
    return np.clip(v, lower, upper)


class AffineProjector:
    """Euclidean projection onto {x : A x = b} with A (p x n) of full row rank.

    The Gram matrix A A^T is Cholesky-factorized once at construction; each
    call costs one triangular solve.  The p == 1 case degenerates to scalar
    division and is special-cased since it sits in the hot loop of the
    bound-projection benchmark.
    """

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        self.A = A
        self.b = b
        gram = A @ A.T
        if A.shape[0] == 1:
            g = float(gram[0, 0])
            if g <= 0.0 or not np.isfinite(g):
                raise SingularConstraintError("constraint row is numerically zero")
            self._gram_scalar = g
            self._cho = None
        else:
            self._gram_scalar = None
            try:
                self._cho = cho_factor(gram)
            except np.linalg.LinAlgError as exc:
                raise SingularConstraintError(
                    "A A^T is not positive definite; A is rank deficient"
                ) from exc
            # cho_factor does not reject near-singular matrices reliably
            diag = np.abs(np.diag(self._cho[0]))
            if diag.min() <= 1e-13 * max(diag.max(), 1.0):
                raise SingularConstraintError("A A^T is numerically singular")

    def __call__(self, v: np.ndarray) -> np.ndarray:
        r = self.b - self.A @ v
        if self._gram_scalar is not None:
            return v + (r[0] / self._gram_scalar) * self.A[0]
        return v + self.A.T @ cho_solve(self._cho, r)


def prox_affine(A, b, v: np.ndarray) -> np.ndarray:
    """One-shot projection onto {x : A x = b}.

    Convenience wrapper; loops should build an :class:`AffineProjector` once.
    """
    return AffineProjector(A, b)(v)


def prox_quadratic(alpha: float, u: np.ndarray, gamma: float, v: np.ndarray) -> np.ndarray:
    """Prox of f(x) = alpha/2 ||x - u||^2 with step gamma: (v + alpha*gamma*u) / (1 + alpha*gamma)."""
    ag = alpha * gamma
    return (v + ag * u) / (1.0 + ag)


def grad_quadratic(alpha: float, u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient alpha*(x - u) of f(x) = alpha/2 ||x - u||^2 (Lipschitz constant alpha)."""
    return alpha * (x - u)


class LinearCompositeResolvent:
    """Resolvent of the composite gradient x -> L^T grad_g(L x) for quadratic g.

    With g(y) = inner_alpha/2 ||y - inner_u||^2 the resolvent at step gamma is
    the solution of (I + gamma*inner_alpha*L^T L) x = v + gamma*inner_alpha*L^T inner_u.
    Factorizations are cached per step size.
    """

    def __init__(self, L, inner_alpha: float, inner_u):
        L = np.atleast_2d(np.asarray(L, dtype=float))
        self.L = L
        self.inner_alpha = float(inner_alpha)
        inner_u = np.asarray(inner_u, dtype=float)
        if inner_u.ndim == 0:
            inner_u = np.full(L.shape[0], float(inner_u))
        self.inner_u = as_point(inner_u)
        if self.inner_u.shape[0] != L.shape[0]:
            raise ValueError("inner_u must live in the codomain of L")
        self._gram = L.T @ L
        self._tilt = L.T @ self.inner_u
        self._factors: dict[float, tuple] = {}

    def __call__(self, gamma: float, v: np.ndarray) -> np.ndarray:
        key = float(gamma)
        fac = self._factors.get(key)
        if fac is None:
            system = np.eye(self._gram.shape[0]) + key * self.inner_alpha * self._gram
            try:
                fac = cho_factor(system)
            except np.linalg.LinAlgError as exc:  # cannot occur for gamma, alpha > 0
                raise SingularOperatorError("composite resolvent system not SPD") from exc
            self._factors[key] = fac
        return cho_solve(fac, v + key * self.inner_alpha * self._tilt)


def resolvent_linear_composite(L, inner_alpha, inner_u, gamma, v):
    """One-shot evaluation of :class:`LinearCompositeResolvent`."""
    return LinearCompositeResolvent(L, inner_alpha, inner_u)(gamma, v)


# ---------------------------------------------------------------------------
# operator wrappers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotoneOperator:
    """Maximal monotone operator exposed through its resolvent oracle.

    ``resolvent(gamma, v)`` evaluates (I + gamma*Op)^{-1} v.  ``indicator``
    marks subdifferentials of indicator functions, whose resolvents are
    independent of gamma (this drives the gamma-independence checks).
    """

    resolvent: Callable[[float, np.ndarray], np.ndarray]
    kind: str = "custom"
    indicator: bool = False
    params: dict = field(default_factory=dict)

    def reflect(self, gamma: float, v: np.ndarray) -> np.ndarray:
        return 2.0 * self.resolvent(gamma, v) - v


@dataclass(frozen=True)
class CocoerciveOperator:
    """Single-valued beta-cocoercive operator.

    ``forward`` evaluates the operator; ``resolvent`` is optional and only
    required by schemes that also prox this operator.  ``beta`` is the
    cocoercivity parameter (1/Lipschitz for gradients of convex functions).
    """

    forward: Callable[[np.ndarray], np.ndarray]
    beta: float
    resolvent: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)


def reflect(op: MonotoneOperator, gamma: float, v: np.ndarray) -> np.ndarray:
    """Reflected resolvent 2*J_gamma(v) - v; nonexpansive for maximal monotone ops."""
    return op.reflect(gamma, v)


def zero_operator() -> MonotoneOperator:
    """The zero operator; its resolvent is the identity."""
    return MonotoneOperator(
        resolvent=lambda gamma, v: np.array(v, dtype=float, copy=True),
        kind="zero",
        indicator=True,
    )


def box_operator(lower: float, upper: float) -> MonotoneOperator:
    """Subdifferential of the box indicator; resolvent is the clamp."""
    if not lower < upper:
        raise InvalidBoundsError(f"need lower < upper, got [{lower}, {upper}]")
    return MonotoneOperator(
        resolvent=lambda gamma, v: np.clip(v, lower, upper),
        kind="box",
        indicator=True,
        params={"lower": lower, "upper": upper},
    )


def affine_operator(A, b) -> MonotoneOperator:
    """Normal cone of {x : A x = b}; resolvent is the affine projection."""
    proj = AffineProjector(A, b)
    return MonotoneOperator(
        resolvent=lambda gamma, v: proj(v),
        kind="affine",
        indicator=True,
        params={"A": proj.A, "b": proj.b},
    )


def quadratic_operator(alpha: float, u) -> MonotoneOperator:
    """Gradient of alpha/2 ||x - u||^2 wrapped as a resolvent-only operator."""
    u = as_point(u)
    return MonotoneOperator(
        resolvent=lambda gamma, v: prox_quadratic(alpha, u, gamma, v),
        kind="quadratic",
        params={"alpha": alpha, "u": u},
    )


def linear_composite_operator(L, inner_alpha: float, inner_u) -> MonotoneOperator:
    """Composite gradient L^T grad_g(L .) for quadratic g, as a resolvent oracle."""
    res = LinearCompositeResolvent(L, inner_alpha, inner_u)
    return MonotoneOperator(
        resolvent=res,
        kind="linear_composite",
        params={"L": res.L, "alpha": inner_alpha, "u": res.inner_u},
    )


def zero_cocoercive() -> CocoerciveOperator:
    """The zero map as a cocoercive operator (beta = +inf), resolvent = identity."""
    return CocoerciveOperator(
        forward=lambda x: np.zeros_like(x),
        beta=np.inf,
        resolvent=lambda gamma, v: np.array(v, dtype=float, copy=True),
        kind="zero",
    )


def quadratic_cocoercive(alpha: float, u) -> CocoerciveOperator:
    """Gradient of alpha/2 ||x - u||^2 with beta = 1/alpha and its exact prox."""
    u = as_point(u)
    return CocoerciveOperator(
        forward=lambda x: alpha * (x - u),
        beta=1.0 / alpha,
        resolvent=lambda gamma, v: prox_quadratic(alpha, u, gamma, v),
        kind="quadratic",
        params={"alpha": alpha, "u": u},
    )
