"""Fibering maps onto the constraint manifolds.

Each admissible field spans a one-parameter fiber: the ray t -> t*u, or the
dilation curve tau -> tau^2 u(tau r).  The energy restricted to a fiber is a
polynomial-type function of the parameter through the five coefficients of
FiberCoefficients, so projections reduce to scalar root finding and fiber
maxima to closed-form evaluation.  No re-gridding happens during root
finding; only the final application of a dilation touches the field samples.

Roots are found by geometric bracket expansion from 1 followed by plain
bisection to 1e-12 relative width.  Bisection is deliberate: the fiber
derivative can be extremely stiff near concentrated bubbles, and the
bracket invariant (a verified sign change) is the proof of correctness the
callers rely on.
"""

from __future__ import annotations

import numpy as np

from .errors import NonuniquenessError, UnsupportedCombinationError, ZeroFieldError
from .energies import (
    CriticalPerturbed,
    CriticalPure,
    FiberCoefficients,
    ProblemSpec,
    Subcritical,
    _power_exponent,
    fiber_coefficients,
)
from .radial import RadialField, derivative_matrix, dilate

__all__ = [
    "fiber_scalar",
    "fiber_dilation",
    "fiber_max",
    "fiber_max_from_coefficients",
    "project_to_manifold",
    "slide_to_manifold",
    "dilation_generator",
    "manifold_kind",
    "scaled_energy",
    "dilated_energy",
]

_BISECT_REL = 1e-12
_MAX_EXPAND = 200


def manifold_kind(prob: ProblemSpec) -> str:
    """Which constraint the solve and the fiber maps use for this problem.

    Constant-V subcritical problems project along dilations (valid for the
    whole exponent range); everything else uses the scalar Nehari ray,
    which is single-valued for exponents above 3.
    """
    if isinstance(prob.family, Subcritical) and prob.potential.is_constant:
        return "dilation"
    return "nehari"


def _check_nonzero(u: RadialField) -> None:
    if not np.any(u.values != 0.0):
        raise ZeroFieldError("fiber maps are undefined at the zero field")


def _bisect(f, lo: float, hi: float) -> float:
    # Bracket invariant: f(lo) > 0 > f(hi) throughout.
    while hi - lo > _BISECT_REL * hi:
        mid = 0.5 * (lo + hi)
        if _eval_fiber_deriv(f, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _eval_fiber_deriv(f, x: float) -> float:
    # The highest-power coefficient of every fiber derivative here is
    # negative, so float overflow at large scale means the value is
    # far below zero; map it there instead of crashing the bracket.
    try:
        v = f(x)
    except OverflowError:
        return -np.inf
    if np.isnan(v):
        return -np.inf
    return v


def _expand_bracket(f) -> tuple[float, float]:
    """Find lo < hi with f(lo) > 0 > f(hi), expanding by factors of 4 from 1."""
    lo = hi = 1.0
    v = _eval_fiber_deriv(f, 1.0)
    if v > 0.0:
        for _ in range(_MAX_EXPAND):
            hi *= 4.0
            if _eval_fiber_deriv(f, hi) <= 0.0:
                return hi / 4.0, hi
        raise ZeroFieldError("fiber derivative never changes sign (degenerate field)")
    for _ in range(_MAX_EXPAND):
        lo /= 4.0
        if _eval_fiber_deriv(f, lo) > 0.0:
            return lo, lo * 4.0
    raise ZeroFieldError("fiber derivative never changes sign (degenerate field)")


def scaled_energy(coeffs: FiberCoefficients, family, t: float) -> float:
    """Energy along the ray, I(t*u), from the coefficients of u."""
    s = _power_exponent(family)
    val = 0.5 * t**2 * coeffs.a + 0.25 * t**4 * coeffs.b
    if s is not None:
        val -= t ** (s + 1.0) * coeffs.c / (s + 1.0)
    if not isinstance(family, Subcritical):
        val -= t**6 * coeffs.d / 6.0
    return val


def dilated_energy(coeffs: FiberCoefficients, family, tau: float) -> float:
    """Energy along the dilation curve, I(u_tau), constant V.

    The four terms scale as tau^3, tau, tau^3, tau^(2p-1); this is exact
    in the continuum and is what the projection solves, while the on-grid
    dilation reproduces it up to interpolation error.
    """
    if not isinstance(family, Subcritical):
        raise UnsupportedCombinationError(
            "the dilation fiber is defined for the subcritical family"
        )
    p = family.p
    return (
        0.5 * tau**3 * coeffs.a_grad
        + 0.5 * tau * coeffs.a_pot
        + 0.25 * tau**3 * coeffs.b
        - tau ** (2.0 * p - 1.0) * coeffs.c / (p + 1.0)
    )


def _scalar_root(coeffs: FiberCoefficients, family) -> float:
    s = _power_exponent(family)
    if isinstance(family, Subcritical):
        if s <= 3.0:
            raise NonuniquenessError(
                "the ray projection is single-valued only for exponents above 3;"
                " use the dilation fiber"
            )
        if coeffs.c <= 0.0:
            raise ZeroFieldError("nonlinear term vanishes; cannot project")
    elif coeffs.c <= 0.0 and coeffs.d <= 0.0:
        raise ZeroFieldError("nonlinear terms vanish; cannot project")
    a, b, c, d = coeffs.a, coeffs.b, coeffs.c, coeffs.d

    def deriv(t):
        # d/dt I(t u) / t; positive left of the root, negative right of it.
        val = a + t**2 * b
        if s is not None:
            val -= t ** (s - 1.0) * c
        if not isinstance(family, Subcritical):
            val -= t**4 * d
        return val

    lo, hi = _expand_bracket(deriv)
    return _bisect(deriv, lo, hi)


def _dilation_root(coeffs: FiberCoefficients, family) -> float:
    p = family.p
    if coeffs.c <= 0.0:
        raise ZeroFieldError("nonlinear term vanishes; cannot project")
    a_grad, a_pot, b, c = coeffs.a_grad, coeffs.a_pot, coeffs.b, coeffs.c
    k = (2.0 * p - 1.0) / (p + 1.0)

    def deriv(tau):
        # d/dtau I(u_tau); one sign change on (0, inf) for p in (2, 5).
        return (
            1.5 * tau**2 * a_grad
            + 0.5 * a_pot
            + 0.75 * tau**2 * b
            - k * tau ** (2.0 * p - 2.0) * c
        )

    lo, hi = _expand_bracket(deriv)
    return _bisect(deriv, lo, hi)


def fiber_scalar(u: RadialField, prob: ProblemSpec) -> float:
    """The unique t > 0 placing t*u on the Nehari constraint."""
    _check_nonzero(u)
    return _scalar_root(fiber_coefficients(u, prob), prob.family)


def fiber_dilation(u: RadialField, prob: ProblemSpec) -> float:
    """The unique tau > 0 placing the dilated field on the constraint.

    Solved entirely in coefficient space; apply radial.dilate with the
    returned tau to materialize the projected field.
    """
    _check_nonzero(u)
    if not isinstance(prob.family, Subcritical):
        raise UnsupportedCombinationError(
            "the dilation fiber is defined for the subcritical family"
        )
    if not prob.potential.is_constant:
        raise UnsupportedCombinationError(
            "the dilation fiber requires a constant potential"
        )
    return _dilation_root(fiber_coefficients(u, prob), prob.family)


def fiber_max_from_coefficients(
    coeffs: FiberCoefficients, family, kind: str
) -> tuple[float, float]:
    """Scale and fiber-max level, computed purely in coefficient algebra.

    No field is materialized, so the returned level carries no resampling
    error; root accuracy is the bisection tolerance.
    """
    if kind == "dilation":
        tau = _dilation_root(coeffs, family)
        return tau, dilated_energy(coeffs, family, tau)
    t = _scalar_root(coeffs, family)
    return t, scaled_energy(coeffs, family, t)


def fiber_max(u: RadialField, prob: ProblemSpec) -> tuple[float, float]:
    """Scale and value of the energy maximum along this field's fiber.

    The value is an upper bound for the ground-state level: the level is
    the infimum of exactly these fiber maxima over all admissible fields.
    """
    _check_nonzero(u)
    coeffs = fiber_coefficients(u, prob)
    return fiber_max_from_coefficients(coeffs, prob.family, manifold_kind(prob))


def project_to_manifold(u: RadialField, prob: ProblemSpec) -> tuple[RadialField, float]:
    """Project a field onto the constraint along its fiber.

    Ray mode rescales the samples exactly; dilation mode resamples through
    the monotone interpolant, so its constraint residual carries an
    interpolation-error term that contracts as the scale approaches 1.
    The solver uses slide_to_manifold instead, which never resamples.
    """
    _check_nonzero(u)
    coeffs = fiber_coefficients(u, prob)
    if manifold_kind(prob) == "dilation":
        tau = _dilation_root(coeffs, prob.family)
        return dilate(u, tau), tau
    t = _scalar_root(coeffs, prob.family)
    return RadialField(u.grid, t * u.values), t


def dilation_generator(u: RadialField) -> RadialField:
    """Tangent of the dilation curve at the field itself: 2u + r u'.

    Nodewise algebra (no resampling); the boundary node is pinned to zero
    so moves along the generator preserve the Dirichlet truncation.
    """
    xi = 2.0 * u.values + u.grid.nodes * (derivative_matrix(u.grid) @ u.values)
    xi[-1] = 0.0
    return RadialField(u.grid, xi)


def slide_to_manifold(
    u: RadialField, prob: ProblemSpec, max_moves: int = 30
) -> tuple[RadialField, FiberCoefficients]:
    """Projection onto the constraint that never resamples near it.

    Ray fibers land in one exact rescale.  Dilation fibers take Newton
    steps in log-scale along the infinitesimal generator, pure node
    algebra with no interpolation; this is what makes the final residual
    panel honest, because a single cubic resample near a minimizer
    injects more tangential H^1 gradient than the solver tolerance
    permits.  The generator move is a linearization, so when the field
    is grossly off the constraint (log-scale beyond 0.25, which happens
    only at initialization or after an oversized spectral step) the
    projection materializes the dilation instead; interpolation error is
    irrelevant that far from a minimizer, and Newton could diverge.

    Returns the landed field together with its coefficients.
    """
    _check_nonzero(u)
    coeffs = fiber_coefficients(u, prob)
    if manifold_kind(prob) == "nehari":
        t = _scalar_root(coeffs, prob.family)
        landed = RadialField(u.grid, t * u.values)
        return landed, fiber_coefficients(landed, prob)
    for _ in range(max_moves):
        tau = _dilation_root(coeffs, prob.family)
        eps = float(np.log(tau))
        if abs(eps) < 1e-13:
            break
        if abs(eps) > 0.25:
            u = dilate(u, tau)
        else:
            vals = u.values + eps * dilation_generator(u).values
            vals[-1] = 0.0
            u = RadialField(u.grid, vals)
        coeffs = fiber_coefficients(u, prob)
    return u, coeffs
