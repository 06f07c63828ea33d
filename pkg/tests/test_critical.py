"""Bubble trial fields, the constant estimate, and both certificate kinds."""

import numpy as np
import pytest

from spground import (
    BubbleParams,
    InvalidScaleError,
    Potential,
    RadialField,
    SOBOLEV_CONSTANT_3D,
    ValidationError,
    coulomb_energy,
    critical_level_certificate,
    cutoff_bubble,
    estimate_S,
    norm,
    make_grid,
    nonexistence_certificate,
    talenti_bubble,
)

ANALYTIC_THRESHOLD = SOBOLEV_CONSTANT_3D ** 1.5 / 3.0


@pytest.fixture(scope="module")
def fine_grid():
    # h = 2e-4 resolves bubble cores down to eps ~ 1e-5
    return make_grid(4.0, 20000)


def test_bubble_params_validation():
    with pytest.raises(InvalidScaleError):
        BubbleParams(epsilon=0.0, r_cut=1.0)
    with pytest.raises(InvalidScaleError):
        BubbleParams(epsilon=1.0, r_cut=-1.0)


def test_cutoff_needs_room_inside_the_domain():
    g = make_grid(4.0, 200)
    with pytest.raises(InvalidScaleError):
        cutoff_bubble(BubbleParams(epsilon=1e-2, r_cut=3.0), g)


def test_talenti_profile_closed_form():
    g = make_grid(4.0, 200)
    eps = 0.3
    u = talenti_bubble(BubbleParams(epsilon=eps, r_cut=1.0), g)
    r = g.nodes
    expected = eps**0.25 / np.sqrt(eps + r**2)
    assert np.max(np.abs(u.values - expected)) <= 1e-12 * np.max(expected)


@pytest.mark.parametrize("eps,rc", [(1e-2, 1.0), (1e-3, 1.5), (3e-4, 0.8)])
def test_cutoff_bubble_unit_sixth_norm(fine_grid, eps, rc):
    u = cutoff_bubble(BubbleParams(epsilon=eps, r_cut=rc), fine_grid)
    assert abs(norm(u, 6.0) - 1.0) <= 1e-12


def test_estimate_upper_bounds_the_constant():
    g = make_grid(40.0, 4000)
    s = estimate_S(g)
    # every trial quotient sits above the infimum, minus truncation slop
    assert s >= SOBOLEV_CONSTANT_3D - 0.01
    assert abs(s - SOBOLEV_CONSTANT_3D) / SOBOLEV_CONSTANT_3D <= 0.05


def test_scaling_table_input_validation(fine_grid):
    params = BubbleParams(epsilon=1e-3, r_cut=1.0)
    from spground import bubble_scaling_table

    with pytest.raises(ValidationError):
        # under two decades of epsilon span
        bubble_scaling_table([1e-3, 2e-3, 4e-3], [2.0], params, fine_grid)
    with pytest.raises(ValidationError):
        bubble_scaling_table(np.geomspace(1e-4, 1e-1, 7), [7.0], params, fine_grid)


def test_certificate_certified_on_resolving_grid(fine_grid):
    eps = (1e-5, 3e-5, 1e-4, 3e-4, 1e-3)
    res = critical_level_certificate(
        4.0, Potential.constant(1.0), eps, fine_grid, r_cut=1.0
    )
    assert res.verdict == "Certified"
    assert res.best_bound < res.threshold
    assert res.margin > 0.0
    assert res.best_bound < ANALYTIC_THRESHOLD  # beats the exact level too
    assert abs(res.threshold - ANALYTIC_THRESHOLD) / ANALYTIC_THRESHOLD <= 0.01
    assert res.best_bound == min(row["bound"] for row in res.per_epsilon)


def test_certificate_well_potential_certifies_deeper(fine_grid):
    eps = (1e-5, 3e-5, 1e-4, 3e-4, 1e-3)
    vals = 1.0 - 0.5 * np.exp(-fine_grid.nodes**2)
    well = Potential.table(RadialField(fine_grid, vals), 1.0)
    res_w = critical_level_certificate(4.0, well, eps, fine_grid, r_cut=1.0)
    res_c = critical_level_certificate(
        4.0, Potential.constant(1.0), eps, fine_grid, r_cut=1.0
    )
    assert res_w.verdict == "Certified"
    assert res_w.best_bound < res_c.best_bound  # the well only helps


def test_certificate_inconclusive_when_grid_cannot_resolve():
    g = make_grid(4.0, 400)  # h too coarse for the sweep below
    res = critical_level_certificate(
        4.0, Potential.constant(1.0), (3e-2, 1e-1, 3e-1), g, r_cut=1.0
    )
    assert res.verdict == "Inconclusive"
    assert res.margin <= 0.0


def test_wild_epsilon_row_cannot_flip_the_verdict(fine_grid):
    eps = (1e-5, 3e-5, 1e-4, 3e-4, 1e-3)
    base = critical_level_certificate(
        4.0, Potential.constant(1.0), eps, fine_grid, r_cut=1.0
    )
    spoiled = critical_level_certificate(
        4.0, Potential.constant(1.0), eps + (10.0,), fine_grid, r_cut=1.0
    )
    assert spoiled.verdict == base.verdict == "Certified"
    assert spoiled.best_bound == base.best_bound
    assert len(spoiled.per_epsilon) == len(eps) + 1


def test_nonexistence_zero_field_degenerates():
    g = make_grid(10.0, 300)
    u0 = RadialField(g, np.zeros_like(g.nodes))
    cert = nonexistence_certificate(u0, Potential.constant(1.0))
    assert cert.value == 0.0 and cert.lower_bound == 0.0


def test_nonexistence_assembly_against_oracle():
    g = make_grid(16.0, 800)
    u = RadialField(g, np.exp(-0.5 * g.nodes**2))
    cert = nonexistence_certificate(u, Potential.constant(1.0))
    # constant V: slope term drops, value = 2||u||_2^2 + (3/2) D(u)
    expected = 2.0 * norm(u, 2.0) ** 2 + 1.5 * coulomb_energy(u)
    assert abs(cert.value - expected) <= 1e-6 * expected
    assert cert.lower_bound == pytest.approx(2.0 * norm(u, 2.0) ** 2)


def test_nonexistence_positive_on_corpus(corpus):
    for u in corpus:
        cert = nonexistence_certificate(u, Potential.constant(1.0))
        assert cert.value >= cert.lower_bound > 0.0


def test_nonexistence_rejects_decreasing_potential():
    g = make_grid(10.0, 400)
    vals = 1.0 - 0.5 * np.exp(-((g.nodes - 2.0) ** 2))  # dip at r=2: V' < 0 inside
    pot = Potential.table(RadialField(g, vals), 1.0)
    u = RadialField(g, np.exp(-g.nodes**2))
    with pytest.raises(ValidationError, match=r"\(V5\)"):
        nonexistence_certificate(u, pot)
