"""Newtonian potential of a radial source: -Delta(phi) = u^2 on R^3.

For a radial source supported in [0, R] the potential reduces to two
one-dimensional integrals,

    phi(r) = (1/r) int_0^r s^2 u(s)^2 ds + int_r^R s u(s)^2 ds,

with the limit form phi(0) = int_0^R s u(s)^2 ds.  This is the r^3 Green
kernel 1/(4 pi |x-y|) after the angular average; the 4 pi factors cancel.

Both cumulative integrals are built in O(N) from panels with strictly
nonnegative weights (Simpson pairs plus a 3/8 closure per parity, trapezoid
only on the single first or last interval), and the outer integral gets its
own right-to-left pass rather than a subtraction of totals.  Nonnegative
weights make phi >= 0 hold exactly at every node for every source, which
downstream energy arguments rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OracleSizeError
from .radial import (
    RadialField,
    composite_weights,
    derivative_matrix,
    volume_integrate,
    volume_weights,
)

__all__ = [
    "CoulombConvention",
    "CONVENTION",
    "solve_poisson",
    "coulomb_energy",
    "potential_dirichlet_energy",
    "brute_force_coulomb",
    "BRUTE_FORCE_MAX_INTERVALS",
]

BRUTE_FORCE_MAX_INTERVALS = 4096

_SIMPSON = np.array([1.0, 4.0, 1.0]) / 3.0
_THREE_EIGHTHS = np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 / 8.0)


@dataclass(frozen=True)
class CoulombConvention:
    """Pins the Green-kernel normalization used throughout.

    green_constant is the coefficient of 1/|x-y| in the fundamental
    solution of -Delta on R^3.
    """

    green_constant: float = 1.0 / (4.0 * np.pi)


CONVENTION = CoulombConvention()


def _cumulative_from_left(g: np.ndarray, h: float) -> np.ndarray:
    """A_j = int_0^{r_j} g, nonnegative-weight panels, O(N).

    Even j: composite Simpson.  j = 1: trapezoid.  Odd j >= 3: the value at
    j-3 plus a 3/8 panel.  Every A_j is a nonnegative combination of g.
    """
    n = g.size - 1
    out = np.empty_like(g)
    out[0] = 0.0
    if n >= 1:
        out[1] = 0.5 * h * (g[0] + g[1])
    pair = h * (g[:-2:2] + 4.0 * g[1:-1:2] + g[2::2]) / 3.0
    even = np.concatenate(([0.0], np.cumsum(pair)))
    out[2::2] = even[1 : even.size]
    if n >= 3:
        j = np.arange(3, n + 1, 2)
        panel = h * (
            _THREE_EIGHTHS[0] * g[j - 3]
            + _THREE_EIGHTHS[1] * g[j - 2]
            + _THREE_EIGHTHS[2] * g[j - 1]
            + _THREE_EIGHTHS[3] * g[j]
        )
        out[3::2] = out[0:-3:2] + panel
    return out


def _cumulative_from_right(g: np.ndarray, h: float) -> np.ndarray:
    """B_j = int_{r_j}^{R} g, mirrored nonnegative-weight panels."""
    return _cumulative_from_left(g[::-1], h)[::-1]


def solve_poisson(u: RadialField) -> RadialField:
    """Potential of the source u^2, truncated to [0, R].

    Linear in u^2, so solve_poisson(t*u) = t^2 * solve_poisson(u) up to
    floating rounding (exactly, for power-of-two t).
    """
    grid = u.grid
    r = grid.nodes
    usq = u.values**2
    inner = _cumulative_from_left(r**2 * usq, grid.h)
    outer = _cumulative_from_right(r * usq, grid.h)
    phi = np.empty_like(usq)
    phi[0] = outer[0]
    phi[1:] = inner[1:] / r[1:] + outer[1:]
    return RadialField(grid, phi)


def coulomb_energy(u: RadialField) -> float:
    """The quartic interaction integral int phi_u u^2 over R^3."""
    phi = solve_poisson(u)
    return volume_integrate(RadialField(u.grid, phi.values * u.values**2))


def potential_dirichlet_energy(u: RadialField) -> float:
    """Whole-space Dirichlet energy int_{R^3} |grad phi_u|^2.

    The potential of a source supported in [0, R] continues outside the
    grid as the exact harmonic tail A/r, A = int_0^R s^2 u(s)^2 ds, whose
    Dirichlet energy is 4 pi A^2 / R in closed form.  Adding it to the
    quadrature over [0, R] completes the energy so that the identity
    int |grad phi_u|^2 = int phi_u u^2 holds up to discretization error
    alone (the truncated integral misses the tail, which decays only
    like 1/R and would otherwise dominate).
    """
    grid = u.grid
    r = grid.nodes
    usq = u.values**2
    inner = _cumulative_from_left(r**2 * usq, grid.h)
    outer = _cumulative_from_right(r * usq, grid.h)
    phi = np.empty_like(usq)
    phi[0] = outer[0]
    phi[1:] = inner[1:] / r[1:] + outer[1:]
    dphi = derivative_matrix(grid) @ phi
    bulk = float(np.sum(volume_weights(grid) * dphi**2))
    tail = 4.0 * np.pi * inner[-1] ** 2 / grid.R
    return bulk + tail


def brute_force_coulomb(u: RadialField) -> float:
    """Reference value of int phi_u u^2 by direct double radial quadrature.

    Independent of the cumulative solver path: for each outer node t the
    inner integral int_0^R s^2 u(s)^2 / max(s, t) ds is evaluated by
    composite quadrature split at s = t (the kernel has a derivative kink
    on the diagonal; splitting keeps both panels smooth).  O(N^2) work;
    refused for large grids.
    """
    grid = u.grid
    if grid.N > BRUTE_FORCE_MAX_INTERVALS:
        raise OracleSizeError(
            f"brute-force path limited to {BRUTE_FORCE_MAX_INTERVALS} intervals,"
            f" got {grid.N}"
        )
    r = grid.nodes
    h = grid.h
    usq = u.values**2
    g_inner = r**2 * usq
    g_outer = r * usq
    n = grid.N
    inner_vals = np.empty(n + 1)
    for j in range(n + 1):
        left = 0.0
        if j > 0:
            left = np.dot(composite_weights(j, h), g_inner[: j + 1]) / r[j]
        right = np.dot(composite_weights(n - j, h), g_outer[j:])
        inner_vals[j] = left + right
    w = volume_weights(grid)
    return float(np.sum(w * usq * inner_vals))
