import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netgradflow.entropy import EntropyModel
from netgradflow.errors import ConfigError, NonPositiveDiffusivity
from netgradflow.field import (
    DiffusivityField,
    Grid,
    NodalField,
    compute_u,
    compute_V,
    energy,
    sup_bound_check,
    trapezoid,
)
from netgradflow.source import LinearSource

LIN = LinearSource(-1.98, 1.0)
G4 = Grid(10_000)


def const(value, grid=G4):
    return DiffusivityField.constant(grid, value)


def test_grid_nodes():
    g = Grid(4, 1.5)
    assert g.h == pytest.approx(0.375)
    assert g.nodes[-1] == 1.5 and g.nodes[0] == 0.0
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0


def test_field_shape_and_positivity():
    with pytest.raises(ValueError):
        NodalField(Grid(3), np.zeros(3))
    with pytest.raises(NonPositiveDiffusivity):
        DiffusivityField(Grid(2), np.array([1.0, 0.0, 1.0]))


def test_u_boundary_and_closed_form():
    u = compute_u(const(1.0), LIN).values
    assert u[-1] == 0.0
    assert u[0] == pytest.approx(0.17, abs=1e-6)
    assert compute_u(const(2.0), LIN).values[0] == pytest.approx(0.085, abs=1e-6)


def test_u_second_order_in_h():
    exact = -1.98 / 6 + 0.5
    errs = [abs(compute_u(const(1.0, Grid(n)), LIN).values[0] - exact) for n in (10, 20, 40, 80, 160)]
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((1.9 <= slopes) & (slopes <= 2.1))


def test_V_constant_entropy_reproduces_primitive():
    u = compute_u(const(1.0), LIN)
    V = compute_V(u, LIN, EntropyModel.constant()).values
    assert V[0] == 0.0
    assert np.max(np.abs(V - LIN.primitive(G4.nodes))) <= 1e-8


def test_V_square_entropy_at_zero_potential():
    u = NodalField(Grid(50), np.zeros(51))
    assert np.all(compute_V(u, LIN, EntropyModel.square()).values == 0.0)


def test_energy_reference_values():
    u = compute_u(const(1.0), LIN)
    m, q = -1.98, 1.0
    assert energy(const(1.0), u, LIN, EntropyModel.constant()) == pytest.approx(
        m * m / 20 + m * q / 4 + q * q / 3, abs=1e-6
    )
    zero = LinearSource(0.0, 0.0)
    assert energy(const(1.0), compute_u(const(1.0), zero), zero, EntropyModel.constant()) == 0.0


def test_energy_linear_in_inverse_D_for_constant_entropy():
    ent = EntropyModel.constant()
    e1 = energy(const(1.0), compute_u(const(1.0), LIN), LIN, ent)
    e2 = energy(const(2.0), compute_u(const(2.0), LIN), LIN, ent)
    assert e2 == 0.5 * e1


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 5.0), min_size=21, max_size=21))
def test_energy_identity_for_constant_entropy(vals):
    g = Grid(20)
    D = DiffusivityField(g, np.array(vals))
    R = LIN.primitive(g.nodes)
    assert energy(D, compute_u(D, LIN), LIN, EntropyModel.constant()) == trapezoid(R * R / D.values, g.h)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 5.0), min_size=21, max_size=21), st.floats(1.01, 3.0))
def test_u_monotone_in_D(vals, factor):
    g = Grid(20)
    D = np.array(vals)
    u_lo = compute_u(DiffusivityField(g, D), LIN).values
    u_hi = compute_u(DiffusivityField(g, D * factor), LIN).values
    assert np.all(np.abs(u_hi) <= np.abs(u_lo) + 1e-15)


@pytest.mark.parametrize(
    "src, lhs, rhs",
    [(LinearSource(0.0, 1.0), 0.5, 1.0), (LinearSource(0.0, 0.0), 0.0, 0.0), (LIN, 0.17, (1 / 1.98) / 2 + 0.98 * (1 - 1 / 1.98) / 2)],
)
def test_sup_bound_examples(src, lhs, rhs):
    D = const(1.0)
    rep = sup_bound_check(D, compute_u(D, src), src)
    assert rep.satisfied
    assert rep.lhs == pytest.approx(lhs, abs=1e-5)
    assert rep.rhs == pytest.approx(rhs, abs=1e-5)
