"""Reduced functional, differentials, and the identity assembly layer."""

import numpy as np
import pytest
import sympy

from spground import (
    CriticalPerturbed,
    CriticalPure,
    Potential,
    RadialField,
    Subcritical,
    UnsupportedExponentError,
    ValidationError,
    brute_force_coulomb,
    constraint_differential,
    differential,
    dirichlet_form,
    energy_from_coefficients,
    eval_J,
    eval_action,
    eval_energy,
    fiber_coefficients,
    fiber_scalar,
    h1_inner,
    make_grid,
    make_problem,
    manifold_kind,
    manifold_residual,
    pohozaev_residual,
    residual_from_coefficients,
    riesz_h1,
    solve_poisson,
    volume_weights,
)

from conftest import gaussian


@pytest.fixture(scope="module")
def sub_problem(grid600):
    return make_problem(Subcritical(3.0), Potential.constant(1.0), grid600)


@pytest.fixture(scope="module")
def crit_problem(grid600):
    return make_problem(CriticalPerturbed(4.0), Potential.constant(1.0), grid600)


def test_exponent_windows():
    with pytest.raises(UnsupportedExponentError):
        Subcritical(2.0)
    with pytest.raises(UnsupportedExponentError):
        Subcritical(5.0)
    with pytest.raises(UnsupportedExponentError):
        CriticalPerturbed(3.0)
    with pytest.raises(UnsupportedExponentError):
        CriticalPerturbed(5.0)


def test_potential_validation_collects_everything():
    with pytest.raises(ValidationError) as info:
        Potential.constant(-1.0)
    assert any("(V2)" in m for m in info.value.messages)
    g = make_grid(8.0, 64)
    bad = RadialField(g, np.linspace(0.0, 3.0, 65))
    with pytest.raises(ValidationError) as info:
        Potential.table(bad, -1.0)
    msgs = info.value.messages
    assert len(msgs) >= 2  # zero value and bad v_infinity reported together
    assert any("(V2)" in m for m in msgs)


def test_constant_potential_helpers(grid600):
    p = Potential.constant(2.0)
    assert p.is_constant
    assert p.floor == 2.0
    assert np.all(p.values_on(grid600) == 2.0)
    assert np.all(p.radial_slope_term(grid600) == 0.0)


def test_fiber_coefficients_closed_forms(grid2000):
    # u = exp(-r^2), V = 1, p = 3: every coefficient has a closed form
    # except b, which the brute-force oracle covers on a smaller grid.
    prob = make_problem(Subcritical(3.0), Potential.constant(1.0), grid2000)
    u = gaussian(grid2000)
    co = fiber_coefficients(u, prob)
    assert abs(co.a_pot - (np.pi / 2.0) ** 1.5) / co.a_pot < 1e-10
    assert abs(co.a_grad - 1.5 * np.pi * np.sqrt(np.pi / 2.0)) / co.a_grad < 1e-3
    assert abs(co.c - (np.pi / 4.0) ** 1.5) / co.c < 1e-10
    assert co.d == 0.0
    assert abs(co.a - (co.a_grad + co.a_pot)) < 1e-14


def test_coulomb_coefficient_against_oracle():
    g = make_grid(12.0, 512)
    prob = make_problem(Subcritical(3.0), Potential.constant(1.0), g)
    u = gaussian(g, width=1.4)
    co = fiber_coefficients(u, prob)
    ref = brute_force_coulomb(u)
    assert abs(co.b - ref) / ref < 1e-6


def test_scalar_scaling_of_coefficients(sub_problem, grid600):
    u = gaussian(grid600)
    t = 1.7
    co = fiber_coefficients(u, sub_problem)
    ct = fiber_coefficients(RadialField(grid600, t * u.values), sub_problem)
    assert abs(ct.a - t**2 * co.a) / co.a < 1e-12
    assert abs(ct.b - t**4 * co.b) / co.b < 1e-12
    assert abs(ct.c - t**4 * co.c) / co.c < 1e-12  # p + 1 = 4


def test_critical_coefficient_d(crit_problem, grid600):
    u = gaussian(grid600)
    co = fiber_coefficients(u, crit_problem)
    w = volume_weights(grid600)
    assert abs(co.d - np.sum(w * u.values**6)) < 1e-12 * co.d


def test_action_reduction_identity(sub_problem, grid600):
    u = gaussian(grid600, width=1.4)
    phi = solve_poisson(u)
    gap = abs(eval_action(u, phi, sub_problem) - eval_energy(u, sub_problem))
    assert gap < 1e-8


def test_action_is_maximal_at_poisson_solution(sub_problem, grid600):
    u = gaussian(grid600)
    phi = solve_poisson(u)
    best = eval_action(u, phi, sub_problem)
    for bump in (0.05, -0.08):
        pert = RadialField(grid600, phi.values + bump * np.exp(-grid600.nodes**2))
        assert eval_action(u, pert, sub_problem) < best


@pytest.mark.parametrize("family", [Subcritical(2.5), Subcritical(4.0), CriticalPerturbed(3.5)])
def test_differential_matches_finite_differences(grid600, family):
    prob = make_problem(family, Potential.constant(1.0), grid600)
    rng = np.random.default_rng(5)
    u = gaussian(grid600, width=rng.uniform(0.8, 1.5))
    v = gaussian(grid600, width=1.1, center=1.0).values
    v[-1] = 0.0
    delta = differential(u, prob)
    eps = 1e-6
    up = RadialField(grid600, u.values + eps * v)
    um = RadialField(grid600, u.values - eps * v)
    fd = (eval_energy(up, prob) - eval_energy(um, prob)) / (2.0 * eps)
    assert abs(float(delta @ v) - fd) / max(abs(fd), 1e-12) < 1e-6


def test_riesz_duality_is_exact(grid600, sub_problem):
    u = gaussian(grid600)
    delta = differential(u, sub_problem)
    gvec = riesz_h1(grid600, delta)
    rng = np.random.default_rng(9)
    for _ in range(3):
        v = RadialField(grid600, rng.standard_normal(grid600.N + 1))
        v.values[-1] = 0.0
        pair = h1_inner(gvec, v)
        direct = float(delta @ v.values)
        assert abs(pair - direct) <= 1e-10 * max(1.0, abs(direct))


def test_h1_inner_is_an_inner_product(grid600):
    u = gaussian(grid600)
    v = gaussian(grid600, center=2.0)
    assert abs(h1_inner(u, v) - h1_inner(v, u)) < 1e-12
    assert h1_inner(u, u) > 0.0


@pytest.mark.parametrize("kind", ["dilation", "nehari"])
def test_constraint_differential_matches_finite_differences(grid600, kind):
    if kind == "dilation":
        prob = make_problem(Subcritical(3.0), Potential.constant(1.0), grid600)
    else:
        prob = make_problem(CriticalPerturbed(4.0), Potential.constant(1.0), grid600)

    def G(vals):
        co = fiber_coefficients(RadialField(grid600, vals), prob)
        return residual_from_coefficients(co, prob.family, kind)

    u = gaussian(grid600)
    v = gaussian(grid600, width=1.3, center=0.8).values
    v[-1] = 0.0
    grad = constraint_differential(u, prob, kind)
    eps = 1e-6
    fd = (G(u.values + eps * v) - G(u.values - eps * v)) / (2.0 * eps)
    assert abs(float(grad @ v) - fd) / max(abs(fd), 1e-12) < 1e-6


def test_manifold_kind_taxonomy(grid600):
    const = Potential.constant(1.0)
    table = Potential.table(
        RadialField(grid600, 1.0 + 0.1 * grid600.nodes / grid600.R), 1.1
    )
    assert manifold_kind(make_problem(Subcritical(3.0), const, grid600)) == "dilation"
    assert manifold_kind(make_problem(Subcritical(3.0), table, grid600)) == "nehari"
    assert manifold_kind(make_problem(CriticalPerturbed(4.0), const, grid600)) == "nehari"
    assert manifold_kind(make_problem(CriticalPure(), const, grid600)) == "nehari"


def test_pohozaev_potential_term_against_sympy():
    # V = 1 + exp(-r^2), u = exp(-r^2): the identity's slope integral
    # int r V'(r) u^2 dV has a closed form; sympy supplies it.  The table
    # derivative is centered O(h^2), so check the value and the order.
    r = sympy.symbols("r", positive=True)
    V = 1 + sympy.exp(-(r**2))
    u2 = sympy.exp(-2 * r**2)
    exact = float(
        sympy.integrate(4 * sympy.pi * r**3 * sympy.diff(V, r) * u2, (r, 0, sympy.oo))
    )
    errs = []
    for n in (2000, 4000):
        g = make_grid(20.0, n)
        pot = Potential.table(RadialField(g, 1.0 + np.exp(-g.nodes**2)), 2.0)
        numeric = float(
            np.sum(volume_weights(g) * pot.radial_slope_term(g) * np.exp(-2.0 * g.nodes**2))
        )
        errs.append(abs(numeric - exact) / abs(exact))
    assert errs[0] < 2e-4
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_pohozaev_assembly_constant_potential(grid600):
    # For constant V the defect assembles from the five coefficients alone;
    # cross-check the wiring against a hand-built combination.
    prob = make_problem(Subcritical(3.0), Potential.constant(1.0), grid600)
    u = gaussian(grid600)
    co = fiber_coefficients(u, prob)
    p = 3.0
    manual = 0.5 * co.a_grad + 1.5 * co.a_pot + 1.25 * co.b - 3.0 * co.c / (p + 1.0)
    assert abs(pohozaev_residual(u, prob) - manual) < 1e-12 * max(1.0, abs(manual))


def test_constraint_eliminated_energy_on_manifold(grid600, crit_problem):
    u = gaussian(grid600)
    t = fiber_scalar(u, crit_problem)
    landed = RadialField(grid600, t * u.values)
    res = manifold_residual(landed, crit_problem, "nehari")
    assert abs(res) / fiber_coefficients(landed, crit_problem).a < 1e-10
    lhs = eval_J(landed, crit_problem)
    rhs = eval_energy(landed, crit_problem)
    assert abs(lhs - rhs) / abs(rhs) < 1e-10


def test_energy_from_coefficients_matches_eval(grid600, sub_problem):
    u = gaussian(grid600, width=1.2)
    co = fiber_coefficients(u, sub_problem)
    assert energy_from_coefficients(co, sub_problem.family) == eval_energy(u, sub_problem)
