"""Energy functionals, residuals, and first variations.

Everything here is assembled from five scalar building blocks of a field u:

    a_grad = int |grad u|^2        a_pot = int V u^2
    b      = int phi_u u^2         c     = int |u|^(p+1)   (or q+1)
    d      = int u^6

The reduced functional reads

    I(u) = (a_grad + a_pot)/2 + b/4 - c/(p+1) [- d/6 for critical families]

and every manifold constraint, Pohozaev residual, and eliminated-constraint
functional below is a fixed linear combination of the same five numbers.
Gradients are exact differentials of the *discrete* functional (quadrature
weights and difference stencils included), which is what makes the
finite-difference consistency checks pass at tight tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import (
    GridMismatchError,
    NonuniquenessError,
    UnsupportedCombinationError,
    UnsupportedExponentError,
    ValidationError,
)
from .poisson import solve_poisson
from .radial import (
    RadialField,
    RadialGrid,
    cell_stiffness,
    control_volumes,
    derivative_matrix,
    dirichlet_form,
    norm,
    stiffness_apply,
    volume_integrate,
    volume_weights,
)

__all__ = [
    "Subcritical",
    "CriticalPerturbed",
    "CriticalPure",
    "Potential",
    "ProblemSpec",
    "FiberCoefficients",
    "make_problem",
    "fiber_coefficients",
    "eval_energy",
    "energy_from_coefficients",
    "eval_action",
    "differential",
    "fiber_differential",
    "constraint_differential",
    "gradient",
    "h1_inner",
    "riesz_h1",
    "manifold_residual",
    "residual_from_coefficients",
    "pohozaev_residual",
    "eval_J",
]


@dataclass(frozen=True)
class Subcritical:
    """Power nonlinearity |u|^(p-1) u with p strictly between 2 and 5."""

    p: float

    def __post_init__(self):
        if not 2.0 < self.p < 5.0:
            raise UnsupportedExponentError(
                f"subcritical exponent must lie in (2, 5), got {self.p}"
            )


@dataclass(frozen=True)
class CriticalPerturbed:
    """Nonlinearity |u|^(q-1) u + u^5 with q strictly between 3 and 5."""

    q: float

    def __post_init__(self):
        if not 3.0 < self.q < 5.0:
            raise UnsupportedExponentError(
                f"perturbation exponent must lie in (3, 5), got {self.q}"
            )


@dataclass(frozen=True)
class CriticalPure:
    """Pure critical nonlinearity u^5."""


Family = Subcritical | CriticalPerturbed | CriticalPure


@dataclass(frozen=True)
class Potential:
    """External potential V, either a positive constant or a radial table.

    Table mode also carries the value at infinity; validation enforces a
    positive lower bound at every node (uniform ellipticity of -Delta + V)
    and, in table mode, V <= v_infinity with strict inequality somewhere
    (the potential well that pulls the level below the limit problem).
    """

    values: object  # float for constant mode, RadialField for table mode
    v_infinity: float

    @staticmethod
    def constant(v: float) -> "Potential":
        v = float(v)
        if not np.isfinite(v) or v <= 0.0:
            raise ValidationError(
                ["(V2) lower bound: constant potential must be positive and finite"]
            )
        return Potential(v, v)

    @staticmethod
    def table(values: RadialField, v_infinity: float) -> "Potential":
        problems = []
        v_infinity = float(v_infinity)
        if not np.isfinite(v_infinity) or v_infinity <= 0.0:
            problems.append("(V2) upper bound: v_infinity must be positive and finite")
        lo = float(np.min(values.values))
        if not lo > 0.0:
            problems.append(
                f"(V2) lower bound: potential table must be positive, min {lo:g}"
            )
        if np.isfinite(v_infinity):
            if float(np.max(values.values)) > v_infinity:
                problems.append(
                    "(V3) limit dominance: table exceeds v_infinity at some node"
                )
            elif not np.any(values.values < v_infinity):
                problems.append(
                    "(V3) strictness: table equals v_infinity everywhere;"
                    " use a constant potential instead"
                )
        if problems:
            raise ValidationError(problems)
        return Potential(values, v_infinity)

    @property
    def is_constant(self) -> bool:
        return not isinstance(self.values, RadialField)

    @property
    def floor(self) -> float:
        """Uniform lower bound C1 with 0 < C1 <= V."""
        if self.is_constant:
            return float(self.values)
        return float(np.min(self.values.values))

    def values_on(self, grid: RadialGrid) -> np.ndarray:
        if self.is_constant:
            return np.full(grid.N + 1, float(self.values))
        if self.values.grid != grid:
            raise GridMismatchError("potential table lives on a different grid")
        return self.values.values

    def radial_slope_term(self, grid: RadialGrid) -> np.ndarray:
        """The node samples of r * V'(r); identically zero for constants.

        Tables use centered differences, one-sided at the ends.
        """
        if self.is_constant:
            return np.zeros(grid.N + 1)
        v = self.values_on(grid)
        h = grid.h
        dv = np.empty_like(v)
        dv[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
        dv[0] = (v[1] - v[0]) / h
        dv[-1] = (v[-1] - v[-2]) / h
        return grid.nodes * dv


@dataclass(frozen=True)
class ProblemSpec:
    family: Family
    potential: Potential
    grid: RadialGrid


def make_problem(family: Family, potential: Potential, grid: RadialGrid) -> ProblemSpec:
    if not isinstance(family, (Subcritical, CriticalPerturbed, CriticalPure)):
        raise UnsupportedCombinationError(f"unknown family {family!r}")
    if not potential.is_constant and potential.values.grid != grid:
        raise GridMismatchError("potential table grid differs from the problem grid")
    return ProblemSpec(family, potential, grid)


@dataclass(frozen=True)
class FiberCoefficients:
    """The five integrals that every functional here is built from."""

    a_grad: float
    a_pot: float
    b: float
    c: float
    d: float

    @property
    def a(self) -> float:
        return self.a_grad + self.a_pot


def _power_exponent(family: Family) -> float | None:
    if isinstance(family, Subcritical):
        return family.p
    if isinstance(family, CriticalPerturbed):
        return family.q
    return None


def _has_critical_term(family: Family) -> bool:
    return isinstance(family, (CriticalPerturbed, CriticalPure))


def _nonlinearity(values: np.ndarray, family: Family) -> np.ndarray:
    out = np.zeros_like(values)
    s = _power_exponent(family)
    if s is not None:
        out += np.abs(values) ** (s - 1.0) * values
    if _has_critical_term(family):
        out += values**5
    return out


def _primitive(values: np.ndarray, family: Family) -> np.ndarray:
    out = np.zeros_like(values)
    s = _power_exponent(family)
    if s is not None:
        out += np.abs(values) ** (s + 1.0) / (s + 1.0)
    if _has_critical_term(family):
        out += values**6 / 6.0
    return out


def fiber_coefficients(u: RadialField, prob: ProblemSpec) -> FiberCoefficients:
    if u.grid != prob.grid:
        raise GridMismatchError("field grid differs from the problem grid")
    w = volume_weights(prob.grid)
    vv = prob.potential.values_on(prob.grid)
    a_grad = dirichlet_form(u, u)
    a_pot = float(np.sum(w * vv * u.values**2))
    phi = solve_poisson(u)
    b = float(np.sum(w * phi.values * u.values**2))
    s = _power_exponent(prob.family)
    c = 0.0 if s is None else float(np.sum(w * np.abs(u.values) ** (s + 1.0)))
    d = float(np.sum(w * u.values**6)) if _has_critical_term(prob.family) else 0.0
    return FiberCoefficients(a_grad, a_pot, b, c, d)


def energy_from_coefficients(coeffs: FiberCoefficients, family: Family) -> float:
    s = _power_exponent(family)
    val = 0.5 * coeffs.a + 0.25 * coeffs.b
    if s is not None:
        val -= coeffs.c / (s + 1.0)
    if _has_critical_term(family):
        val -= coeffs.d / 6.0
    return val


def eval_energy(u: RadialField, prob: ProblemSpec) -> float:
    """The reduced functional I(u) (Coulomb term folded in at weight 1/4)."""
    return energy_from_coefficients(fiber_coefficients(u, prob), prob.family)


def eval_action(u: RadialField, phi: RadialField, prob: ProblemSpec) -> float:
    """Two-field action E(u, phi); E(u, phi_u) collapses to eval_energy(u).

    The phi-Dirichlet term is completed with the harmonic-tail energy
    4 pi R phi(R)^2, matching the whole-space Dirichlet integral of the
    decaying continuation phi(R) R / r; without it the reduction identity
    would be off by the (1/R)-sized truncation flux.
    """
    if u.grid != phi.grid:
        raise GridMismatchError("u and phi live on different grids")
    coeffs = fiber_coefficients(u, prob)
    w = volume_weights(prob.grid)
    dphi = derivative_matrix(prob.grid) @ phi.values
    phi_dirichlet = float(np.sum(w * dphi**2))
    phi_dirichlet += 4.0 * np.pi * prob.grid.R * float(phi.values[-1]) ** 2
    coupling = float(np.sum(w * phi.values * u.values**2))
    nonlinear = volume_integrate(
        RadialField(prob.grid, _primitive(u.values, prob.family))
    )
    return 0.5 * coeffs.a - 0.25 * phi_dirichlet + 0.5 * coupling - nonlinear


def differential(u: RadialField, prob: ProblemSpec) -> np.ndarray:
    """Exact differential of the discrete reduced functional.

    Component i is dI(u)/du_i, so <differential, v> equals the directional
    derivative of eval_energy for any node vector v.  This is the covector
    (quadrature weights included); metric representatives come from
    gradient().
    """
    if u.grid != prob.grid:
        raise GridMismatchError("field grid differs from the problem grid")
    grid = prob.grid
    w = volume_weights(grid)
    vv = prob.potential.values_on(grid)
    phi = solve_poisson(u)
    f = _nonlinearity(u.values, prob.family)
    pointwise = vv * u.values + phi.values * u.values - f
    return stiffness_apply(grid, u.values) + w * pointwise


def fiber_differential(
    u: RadialField, prob: ProblemSpec, scale: float, manifold: str
) -> np.ndarray:
    """Exact differential of the fiber-max functional u -> max I on u's fiber.

    By the envelope theorem the maximizing scale contributes nothing, so
    the differential is that of I evaluated along the fiber at the fixed
    scale: each coefficient's first variation times its scaling power.
    Exact coefficient algebra; at scale 1 this is differential(u).
    """
    if u.grid != prob.grid:
        raise GridMismatchError("field grid differs from the problem grid")
    kind = manifold.lower()
    grid = prob.grid
    w = volume_weights(grid)
    vv = prob.potential.values_on(grid)
    phi = solve_poisson(u)
    s = _power_exponent(prob.family)
    if kind == "dilation":
        if not isinstance(prob.family, Subcritical):
            raise UnsupportedCombinationError(
                "the dilation fiber is defined for the subcritical family"
            )
        p = prob.family.p
        out = scale**3 * stiffness_apply(grid, u.values)
        out += w * (scale * vv * u.values + scale**3 * phi.values * u.values)
        out -= w * scale ** (2.0 * p - 1.0) * np.abs(u.values) ** (p - 1.0) * u.values
        return out
    if kind != "nehari":
        raise UnsupportedCombinationError(f"unknown manifold {manifold!r}")
    t2 = scale * scale
    out = t2 * (stiffness_apply(grid, u.values) + w * vv * u.values)
    out += t2 * t2 * w * phi.values * u.values
    if s is not None:
        out -= w * scale ** (s + 1.0) * np.abs(u.values) ** (s - 1.0) * u.values
    if _has_critical_term(prob.family):
        out -= w * scale**6 * u.values**5
    return out


def constraint_differential(
    u: RadialField, prob: ProblemSpec, manifold: str
) -> np.ndarray:
    """Differential of the constraint functional whose zero set is the manifold.

    Same covector convention as differential(): component i is dG/du_i.
    Riesz-lifting this and deflating it out of the energy gradient gives
    the constraint-tangential descent direction; the leftover component of
    the full gradient along this direction is the discrete Lagrange
    multiplier, not a stationarity defect.
    """
    if u.grid != prob.grid:
        raise GridMismatchError("field grid differs from the problem grid")
    kind = manifold.lower()
    grid = prob.grid
    w = volume_weights(grid)
    vv = prob.potential.values_on(grid)
    phi = solve_poisson(u)
    if kind == "dilation":
        if not isinstance(prob.family, Subcritical):
            raise UnsupportedCombinationError(
                "the dilation constraint is defined for the subcritical family"
            )
        p = prob.family.p
        out = 3.0 * stiffness_apply(grid, u.values)
        out += w * (vv * u.values + 3.0 * phi.values * u.values)
        out -= w * (2.0 * p - 1.0) * np.abs(u.values) ** (p - 1.0) * u.values
        return out
    if kind != "nehari":
        raise UnsupportedCombinationError(f"unknown manifold {manifold!r}")
    out = 2.0 * stiffness_apply(grid, u.values)
    out += w * (2.0 * vv * u.values + 4.0 * phi.values * u.values)
    s = _power_exponent(prob.family)
    if s is not None:
        out -= w * (s + 1.0) * np.abs(u.values) ** (s - 1.0) * u.values
    if _has_critical_term(prob.family):
        out -= 6.0 * w * u.values**5
    return out


def riesz_h1(grid: RadialGrid, covector: np.ndarray) -> RadialField:
    """H^1 Riesz representative of a covector, Dirichlet at r = R."""
    g = np.zeros_like(covector)
    g[:-1] = cho_solve_banded((_h1_metric_banded(grid), False), covector[:-1])
    return RadialField(grid, g)


@lru_cache(maxsize=16)
def _h1_metric_banded(grid: RadialGrid):
    """Cholesky factor of the discrete (-Delta + 1) form, Dirichlet at R.

    Tridiagonal: the same cell stiffness that defines a_grad plus a
    control-volume lumped mass.  Sharing the stiffness with the energy
    keeps the Riesz solve and the functional coercive against the same
    modes; a wide centered difference here would let node-scale ripple
    pass through the solve undamped.
    """
    k = cell_stiffness(grid)
    m = control_volumes(grid)
    diag = np.concatenate(([k[0]], k[:-1] + k[1:])) + m[:-1]
    ab = np.zeros((2, grid.N))
    ab[0, 1:] = -k[: grid.N - 1]
    ab[1, :] = diag
    return cholesky_banded(ab)


def h1_inner(x: RadialField, y: RadialField) -> float:
    """Discrete H^1 inner product matching the "H1" gradient metric.

    Pairs fields through the same tridiagonal form the Riesz solve
    inverts, so <gradient(u, spec, "H1"), v>_H1 reproduces the exact
    directional derivative of eval_energy whenever v(R) = 0.
    """
    if x.grid != y.grid:
        raise GridMismatchError("fields live on different grids")
    m = control_volumes(x.grid)
    mass = float(np.sum(m * x.values * y.values))
    return dirichlet_form(x, y) + mass


def gradient(u: RadialField, prob: ProblemSpec, metric: str = "H1") -> RadialField:
    """Metric representative of the differential.

    "H1": solve the discrete (-Delta + 1) Riesz problem with the Dirichlet
    truncation at r = R (tridiagonal Cholesky solve); the result is the
    steepest-descent direction in the Sobolev inner product and satisfies
    <g, v>_H1 = dI(u)[v] exactly for all directions with v(R) = 0, with
    h1_inner as the pairing.

    "L2": divide the covector by the volume weights, i.e. the pointwise
    Euler-Lagrange residual -Delta u + V u + phi_u u - f(u) in its
    adjoint-consistent discrete form.  The origin node has zero volume
    weight, so its value comes from even-symmetry extrapolation.
    """
    delta = differential(u, prob)
    grid = prob.grid
    key = metric.upper().replace("^", "")
    if key == "H1":
        return riesz_h1(grid, delta)
    if key == "L2":
        w = volume_weights(grid)
        g = np.empty_like(delta)
        g[1:] = delta[1:] / w[1:]
        g[0] = 1.5 * g[1] - 0.6 * g[2] + 0.1 * g[3]
        return RadialField(grid, g)
    raise UnsupportedCombinationError(f"unknown gradient metric {metric!r}")


def residual_from_coefficients(
    coeffs: FiberCoefficients, family: Family, manifold: str
) -> float:
    """Constraint value from precomputed coefficients (see manifold_residual)."""
    kind = manifold.lower()
    if kind == "dilation":
        if not isinstance(family, Subcritical):
            raise UnsupportedCombinationError(
                "the dilation constraint is defined for the subcritical family"
            )
        p = family.p
        return (
            1.5 * coeffs.a_grad
            + 0.5 * coeffs.a_pot
            + 0.75 * coeffs.b
            - (2.0 * p - 1.0) / (p + 1.0) * coeffs.c
        )
    if kind == "nehari":
        s = _power_exponent(family)
        if isinstance(family, Subcritical) and s <= 3.0:
            raise NonuniquenessError(
                "scalar Nehari projection is single-valued only for exponents"
                " above 3; use the dilation constraint instead"
            )
        return coeffs.a + coeffs.b - coeffs.c - coeffs.d
    raise UnsupportedCombinationError(f"unknown manifold {manifold!r}")


def manifold_residual(u: RadialField, prob: ProblemSpec, manifold: str) -> float:
    """Defect of the stationarity constraint that defines the manifold.

    "dilation": d/dtau I(u_tau) at tau = 1, the combination
    (3/2) a_grad + (1/2) a_pot + (3/4) b - ((2p-1)/(p+1)) c.  Only
    meaningful when V is constant (the dilation moves the potential term
    through V otherwise), and only for the subcritical family.

    "nehari": d/dt I(t u) at t = 1, which is a + b - c - d for every
    family; restricted to exponents above 3 where the projection is
    single-valued.
    """
    coeffs = fiber_coefficients(u, prob)
    if manifold.lower() == "dilation" and not prob.potential.is_constant:
        raise UnsupportedCombinationError(
            "the dilation constraint requires a constant potential"
        )
    return residual_from_coefficients(coeffs, prob.family, manifold)


def pohozaev_residual(u: RadialField, prob: ProblemSpec) -> float:
    """Scaling identity defect; zero (up to discretization) at solutions.

    Assembles (1/2) a_grad + (3/2) int V u^2 + (1/2) int r V'(r) u^2
    + (5/4) b - 3 int F(u), the derivative of the energy along the
    rescaling u(x/lambda) at lambda = 1.  For constant V the slope term
    vanishes and the combination is the classical constant-V identity;
    for the pure critical family it is half the usual normalization of
    the general identity.
    """
    coeffs = fiber_coefficients(u, prob)
    w = volume_weights(prob.grid)
    slope = float(np.sum(w * prob.potential.radial_slope_term(prob.grid) * u.values**2))
    big_f = float(np.sum(w * _primitive(u.values, prob.family)))
    return 0.5 * coeffs.a_grad + 1.5 * coeffs.a_pot + 0.5 * slope + 1.25 * coeffs.b - 3.0 * big_f


def eval_J(u: RadialField, prob: ProblemSpec) -> float:
    """Constraint-eliminated form of the energy; equals it on the manifold.

    Subcritical (constant V only): I - G/(2p-1) with G the dilation
    constraint, leaving nonnegative weights on (a_grad, a_pot, b).
    Critical families (any V): eliminate c with the Nehari constraint,
    leaving nonnegative weights on (a, b, d) for exponents in (3, 5).
    Both agree with eval_energy exactly on the respective manifold and
    are nonnegative everywhere.
    """
    coeffs = fiber_coefficients(u, prob)
    family = prob.family
    if isinstance(family, Subcritical):
        if not prob.potential.is_constant:
            raise UnsupportedCombinationError(
                "the eliminated subcritical functional needs a constant potential"
            )
        p = family.p
        den = 2.0 * p - 1.0
        return (
            (p - 2.0) / den * coeffs.a_grad
            + (p - 1.0) / den * coeffs.a_pot
            + (p - 2.0) / (2.0 * den) * coeffs.b
        )
    if isinstance(family, CriticalPerturbed):
        q = family.q
        return (
            (0.5 - 1.0 / (q + 1.0)) * coeffs.a
            + (0.25 - 1.0 / (q + 1.0)) * coeffs.b
            + (1.0 / (q + 1.0) - 1.0 / 6.0) * coeffs.d
        )
    # Pure critical: eliminating d from a + b = d gives I = a/3 + b/12.
    return coeffs.a / 3.0 + coeffs.b / 12.0
