"""Gramian-based baselines: truncation bound, exact recovery, shifted variant."""

import numpy as np
import pytest

from hinfmor.baselines import balanced_truncation, modified_bt
from hinfmor.errors import RankDeficient
from hinfmor.norms import error_realization, hinf_norm
from hinfmor.statespace import LtiSystem

from conftest import mixed_system, pole_residue_system


WELL_SEPARATED = pole_residue_system([-1.0, -2.0, -4.0], [1.0, 0.8, 0.6])


def certified_error(sys, model):
    return hinf_norm(error_realization(sys, model)).value


def test_full_order_truncation_recovers_the_system():
    bt = balanced_truncation(WELL_SEPARATED, 3)
    for s in (0.3, 1.0j, 2.0 + 1.0j):
        h = WELL_SEPARATED.eval(s)
        assert abs(bt.model.eval(s) - h) <= 1e-8 * (1.0 + abs(h))
    assert certified_error(WELL_SEPARATED, bt.model) <= 1e-9


def test_unreachable_mode_is_truncated_for_free():
    # second state unreachable: sigma_2 = 0, so the order-1 model is exact
    sys = LtiSystem(
        np.eye(2), np.diag([-1.0, -2.0]), np.array([1.0, 0.0]),
        np.array([1.0, 1.0]), 0.0,
    )
    bt = balanced_truncation(sys, 1)
    assert bt.sigmas.sigmas[1] <= 1e-13
    assert bt.error_bound <= 1e-12
    assert certified_error(sys, bt.model) <= 1e-10
    with pytest.raises(RankDeficient):
        balanced_truncation(sys, 2)


def test_order_validation():
    with pytest.raises(ValueError):
        balanced_truncation(WELL_SEPARATED, 0)
    with pytest.raises(ValueError):
        balanced_truncation(WELL_SEPARATED, 4)


def test_truncation_bound_and_lower_bound_batch():
    for i in range(6):
        sys = mixed_system(i, 12 + i)
        spec_all = None
        for r in (1, 3, 5):
            try:
                bt = balanced_truncation(sys, r)
            except RankDeficient:
                continue
            err = certified_error(sys, bt.model)
            assert err <= bt.error_bound * (1.0 + 1e-6) + 1e-12
            spec_all = bt.sigmas
            # any order-r model errs at least sigma_{r+1}
            assert err >= spec_all.sigmas[r] * (1.0 - 1e-6)


def test_bt_model_is_stable_and_real():
    sys = mixed_system(1, 30)
    bt = balanced_truncation(sys, 4)
    assert bt.model.is_real()
    assert bt.model.is_stable()


def test_modified_bt_never_loses_to_plain_bt():
    sys = mixed_system(1, 24)
    r = 3
    bt_err = certified_error(sys, balanced_truncation(sys, r).model)
    res = modified_bt(sys, r)
    assert res.hinf_error <= bt_err * (1.0 + 1e-9)
    assert res.model.dr == res.dr_star
    # the probe trace recorded the zero-shift candidate
    assert any(p.x == 0.0 for p in res.search.trace)


def test_modified_bt_shift_strictly_helps_on_an_offset_error():
    # error curve of BT here has a one-signed real part over the axis, so
    # some constant shift must strictly reduce the peak
    sys = mixed_system(4, 21)  # resonant chain
    res = modified_bt(sys, 2)
    bt_err = certified_error(sys, res.bt.model)
    assert res.hinf_error < bt_err


def test_modified_bt_sampled_mode():
    sys = mixed_system(1, 24)
    res = modified_bt(sys, 3, force_sampled=True)
    assert np.isfinite(res.hinf_error)
    # sampled search still may not do worse than its own zero-shift probe
    assert res.hinf_error <= res.search.value_at(0.0) * (1.0 + 1e-12)
