"""Radial Poisson sub-solve: -Delta phi = u^2 with decaying tail."""

import numpy as np
import pytest

from spground import (
    MonotoneCubic,
    OracleSizeError,
    RadialField,
    brute_force_coulomb,
    coulomb_energy,
    dilate,
    make_grid,
    potential_dirichlet_energy,
    solve_poisson,
    volume_integrate,
)

from conftest import gaussian


def test_oracle_agreement_random_fields():
    g = make_grid(16.0, 512)
    rng = np.random.default_rng(3)
    for _ in range(5):
        width = rng.uniform(0.6, 2.0)
        center = rng.uniform(0.0, 3.0)
        u = gaussian(g, width=width, center=center)
        ref = brute_force_coulomb(u)
        assert abs(coulomb_energy(u) - ref) / ref < 1e-6


def test_brute_force_refuses_large_grids():
    g = make_grid(16.0, 8192)
    u = gaussian(g)
    with pytest.raises(OracleSizeError):
        brute_force_coulomb(u)


def test_ball_source_closed_form():
    # u^2 = indicator of the unit ball: int phi u^2 = 8 pi / 15.  The node
    # on the surface carries the mean of the jump, keeping the quadrature
    # second order.
    g = make_grid(8.0, 1024)
    vals = np.where(g.nodes < 1.0, 1.0, 0.0)
    i = int(round(1.0 / g.h))
    vals[i] = np.sqrt(0.5)
    u = RadialField(g, vals)
    exact = 8.0 * np.pi / 15.0
    assert abs(coulomb_energy(u) - exact) / exact < 1e-4


def test_gauss_law_at_truncation():
    g = make_grid(20.0, 1000)
    u = gaussian(g)
    phi = solve_poisson(u)
    charge = volume_integrate(RadialField(g, u.values**2))
    assert abs(4.0 * np.pi * g.R * phi.values[-1] - charge) / charge < 1e-10


def test_quadratic_scaling_is_exact(grid2000):
    u = gaussian(grid2000)
    phi = solve_poisson(u)
    phi3 = solve_poisson(RadialField(grid2000, 3.0 * u.values))
    assert np.max(np.abs(phi3.values - 9.0 * phi.values)) <= 1e-12 * np.max(
        np.abs(phi.values)
    ) * 9.0 + 1e-300


def test_dilation_covariance(grid2000):
    # u_tau(x) = tau^2 u(tau x)  =>  phi_{u_tau}(x) = tau^2 phi_u(tau x)
    tau = 1.3
    r = grid2000.nodes
    u = gaussian(grid2000)
    lhs = solve_poisson(dilate(u, tau)).values
    phi = MonotoneCubic(r, solve_poisson(u).values)
    inside = r <= grid2000.R / tau
    rhs = tau**2 * phi(tau * r[inside])
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(lhs[inside] - rhs)) / scale < 1e-4


def test_coulomb_dilation_law(grid2000):
    tau = 0.8
    u = gaussian(grid2000)
    assert (
        abs(coulomb_energy(dilate(u, tau)) - tau**3 * coulomb_energy(u))
        / coulomb_energy(u)
        < 1e-4
    )


def test_energy_identity_halves_under_refinement():
    # int |grad phi|^2 = int phi u^2 up to O(h^2)
    errs = []
    for n in (500, 1000):
        g = make_grid(16.0, n)
        u = gaussian(g, width=1.2)
        b = coulomb_energy(u)
        errs.append(abs(potential_dirichlet_energy(u) - b) / b)
    assert errs[0] < 1e-5
    assert errs[1] < 0.5 * errs[0] * 1.5  # allow slack around the O(h^2) ratio


def test_zero_field_gives_zero_potential(grid2000):
    z = RadialField(grid2000, np.zeros(grid2000.N + 1))
    assert coulomb_energy(z) == 0.0
    assert np.all(solve_poisson(z).values == 0.0)


def test_potential_is_positive_and_decreasing_tail(grid2000):
    u = gaussian(grid2000)
    phi = solve_poisson(u)
    assert np.all(phi.values > 0.0)
    tail = phi.values[grid2000.nodes > 5.0]
    assert np.all(np.diff(tail) < 0.0)
