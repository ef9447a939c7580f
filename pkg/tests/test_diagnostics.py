import math

import numpy as np
import pytest

from netgradflow.delta_solver import DeltaRunConfig
from netgradflow.diagnostics import (
    ConvergenceTable,
    StudyAborted,
    convergence_study,
    observed_orders,
    rel_l2_error,
)
from netgradflow.entropy import EntropyModel
from netgradflow.errors import ConfigError, ZeroReference
from netgradflow.pde_solver import PdeRunConfig
from netgradflow.source import DeltaPair, LinearSource

LIN = LinearSource(-1.98, 1.0)


def test_rel_l2_examples():
    ref = np.linspace(1.0, 2.0, 7)
    assert rel_l2_error(ref, ref) == 0.0
    assert rel_l2_error(1.01 * ref, ref) == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ZeroReference):
        rel_l2_error(ref, np.zeros(7))
    with pytest.raises(ValueError):
        rel_l2_error(ref, ref[:3])


def test_observed_orders():
    assert observed_orders([1.0], [0.1]) == [None]
    o = observed_orders([1.0, 0.125, 1 / 64], [0.1, 0.05, 0.025])
    assert o[0] is None and o[1] == pytest.approx(3.0) and o[2] == pytest.approx(3.0)
    # non-dyadic refinement uses the actual ratio
    assert observed_orders([1.0, 1 / 9], [0.3, 0.1])[1] == pytest.approx(2.0)


def test_single_row_has_no_order():
    t = ConvergenceTable.build(("D",), [0.1], [0.1], {"D": [1e-3]}, "exact")
    assert t.last_order() is None
    assert t.to_csv().splitlines()[1] == "0.10000000000000001,0.10000000000000001,0.001,"


def test_exact_study_reaches_third_order():
    cfg = PdeRunConfig(N=25, dt=0.04, t_fin=0.1, source=LIN, entropy=EntropyModel.constant())
    t = convergence_study(cfg, [0.01, 0.04, 0.02])
    assert [r.dt for r in t.rows] == [0.04, 0.02, 0.01]
    assert [r.h for r in t.rows] == pytest.approx([0.04, 0.02, 0.01])
    errs = t.errors()
    assert errs[0] > errs[1] > errs[2]
    assert t.last_order() >= 1.9


def test_exact_study_requires_constant_entropy():
    cfg = PdeRunConfig(N=25, dt=0.04, t_fin=0.1, source=LIN, entropy=EntropyModel.fisher())
    with pytest.raises(ConfigError):
        convergence_study(cfg, [0.04, 0.02])


def test_fine_reference_validation():
    cfg = DeltaRunConfig(DeltaPair(1.0, 0.9, 0.1, 0.9), EntropyModel.square(), t_fin=0.1)
    with pytest.raises(ConfigError):
        convergence_study(cfg, [0.01, 0.005], dt_ref=1e-3)
    with pytest.raises(ConfigError):
        convergence_study(cfg, [0.01, 0.01], dt_ref=1e-5)


def test_delta_study_per_component():
    cfg = DeltaRunConfig(DeltaPair(1.0, 0.9, 0.1, 0.9), EntropyModel.square(), t_fin=0.1)
    t = convergence_study(cfg, [0.1 * 2**-k for k in range(2, 6)], dt_ref=1e-4)
    assert t.quantities == ("D1", "D2") and t.reference == "fine" and t.dt_ref == 1e-4
    for q in t.quantities:
        assert 2.7 <= t.last_order(q) <= 3.3
    assert "order" in t.summary()


def test_pde_time_only_study():
    cfg = PdeRunConfig(N=50, dt=0.02, t_fin=0.1, source=LIN, entropy=EntropyModel.sin_rational(2.0), D_init=0.5)
    t = convergence_study(cfg, [0.02, 0.01, 0.005], reference="fine", dt_ref=1e-4, N=50)
    assert t.rows[0].h == pytest.approx(0.02)
    assert all(o > 2.5 for o in t.orders()[1:])


def test_study_aborts_on_touchdown():
    cfg = DeltaRunConfig(DeltaPair(1.0, 0.99, 0.1, 0.9), EntropyModel.sin_rational(2.0), 0.1, 0.1, t_fin=0.1)
    with pytest.raises(StudyAborted) as info:
        convergence_study(cfg, [1e-3, 5e-4], dt_ref=1e-5)
    assert info.value.termination.kind == "Touchdown"


def test_error_is_relabeling_invariant():
    cfg = DeltaRunConfig(DeltaPair(1.0, 0.9, 0.1, 0.9), EntropyModel.square(), t_fin=0.1)
    a = convergence_study(cfg, [0.02, 0.01], dt_ref=1e-4)
    b = convergence_study(DeltaRunConfig(**{**cfg.__dict__, "snapshot_every": 1}), [0.02, 0.01], dt_ref=1e-4)
    assert a.errors("D1") == b.errors("D1") and a.errors("D2") == b.errors("D2")
