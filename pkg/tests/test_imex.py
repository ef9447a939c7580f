import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netgradflow.errors import ConfigError, SingularStage
from netgradflow.imex import (
    ImexTableau,
    check_order3,
    imex_euler,
    imex_stages,
    imex_step,
    ssp_ldirk3_433,
)

T = ssp_ldirk3_433()
LAM = 0.24169426078821


def test_printed_entries():
    assert T.b.sum() == pytest.approx(1.0, abs=1e-15)
    assert T.A_im[3].sum() == pytest.approx(0.5, abs=1e-15) and T.c_im[3] == 0.5
    assert T.A_im[1, 0] == -LAM
    assert T.A_im[3, 0] == LAM / 4
    np.testing.assert_array_equal(T.c_ex, [0, 0, 1, 0.5])


def test_printed_pair_is_not_stiffly_accurate():
    assert not T.stiffly_accurate
    assert imex_euler().stiffly_accurate


def test_arrays_are_read_only():
    with pytest.raises(ValueError):
        T.b[0] = 1.0


def test_order_conditions():
    rep = check_order3(T)
    assert rep.max_residual() < 1e-10
    assert rep.order_at_least(3)
    assert abs(rep.residuals["implicit"]["bc"]) < 1e-12


def test_euler_fails_second_order():
    rep = check_order3(imex_euler())
    assert rep.residuals["implicit"]["b"] == 0.0
    assert rep.residuals["explicit"]["bc"] == -1.0
    assert rep.order_at_least(1) and not rep.order_at_least(2)


@pytest.mark.parametrize(
    "A_ex, A_im, b",
    [
        ([[0, 1], [0, 0]], [[1, 0], [0, 1]], [0.5, 0.5]),
        ([[0, 0], [1, 0]], [[1, 1], [0, 1]], [0.5, 0.5]),
        ([[0, 0], [1, 0]], [[0, 0], [0, 1]], [0.5, 0.5]),
        ([[0]], [[1]], [1, 0]),
    ],
)
def test_validation_rejects(A_ex, A_im, b):
    with pytest.raises(ConfigError):
        ImexTableau(A_ex, A_im, b)


def test_abscissae_must_match_row_sums():
    with pytest.raises(ConfigError):
        ImexTableau([[0]], [[1]], [1], c_ex=[0.5])


def _const(m):
    return lambda y: np.full_like(np.asarray(y, dtype=float), m)


def test_scalar_decay_step():
    y = imex_step(np.array([1.0]), 0.1, _const(-1.0), T)
    assert abs(y[0] - math.exp(-0.1)) <= 2e-5


def test_zero_dynamics():
    y0 = np.array([0.3, 2.0])
    np.testing.assert_array_equal(imex_step(y0, 0.5, _const(0.0), T), y0)


def _integrate(dt, t_end=1.0):
    y = np.array([1.0])
    for _ in range(round(t_end / dt)):
        y = imex_step(y, dt, _const(-1.0), T)
    return y[0]


def test_global_order_on_linear_decay():
    dts = [0.1, 0.05, 0.025]
    errs = [abs(_integrate(d) - math.exp(-1.0)) for d in dts]
    orders = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert min(orders) >= 2.9


def test_taylor_agreement_through_third_order():
    # the one-step amplification factor deviates from exp(z) at O(z^4)
    zs = np.array([1e-2, 5e-3, 2.5e-3])
    devs = [abs(imex_step(np.array([1.0]), z, _const(-1.0), T)[0] - math.exp(-z)) for z in zs]
    slopes = np.log2(np.array(devs[:-1]) / np.array(devs[1:]))
    assert np.all(slopes > 3.8)


def test_singular_stage_detected():
    with pytest.raises(SingularStage):
        imex_step(np.array([1.0]), 1.0 / LAM, _const(1.0), T)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=1, max_size=5), st.floats(1e-3, 0.2))
def test_stiffly_accurate_identity(ys, dt):
    # for a pair whose last implicit row equals b the update is the last stage
    y0 = np.array(ys)

    def M(y):
        return -np.sqrt(np.abs(y))

    new, stages = imex_stages(y0, dt, M, imex_euler())
    np.testing.assert_allclose(new, stages[-1], rtol=1e-12, atol=1e-12)


def test_vector_state_is_componentwise():
    y0 = np.array([1.0, 2.0])
    both = imex_step(y0, 0.05, lambda y: np.array([-1.0, 0.5]), T)
    a = imex_step(y0[:1], 0.05, _const(-1.0), T)
    b = imex_step(y0[1:], 0.05, _const(0.5), T)
    np.testing.assert_allclose(both, np.concatenate([a, b]), rtol=1e-15)
