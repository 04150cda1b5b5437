"""Feed-through family: invariance, two evaluation routes, stability tests."""

import numpy as np
import pytest

from hinfmor.errors import DegenerateDenominator, FamilyPole
from hinfmor.feedthrough import FeedthroughFamily
from hinfmor.irka import IrkaConfig, run_irka
from hinfmor.projection import ReducedModel

from conftest import mixed_system, pole_residue_system


def family_from(sys, r, seed=0):
    res = run_irka(sys, IrkaConfig(r=r, seed=seed))
    return FeedthroughFamily(res.model), res


def test_rejects_core_with_feedthrough_or_missing_vectors():
    fam, res = family_from(mixed_system(0, 20), 2)
    with pytest.raises(ValueError):
        FeedthroughFamily(ReducedModel(
            Er=res.model.Er, Ar=res.model.Ar, br=res.model.br,
            cr=res.model.cr, dr=1.0,
            u_ones=res.model.u_ones, w_ones=res.model.w_ones,
        ))
    with pytest.raises(ValueError):
        FeedthroughFamily(ReducedModel(
            Er=res.model.Er, Ar=res.model.Ar, br=res.model.br,
            cr=res.model.cr, dr=0.0,
        ))


def test_two_evaluation_routes_agree():
    # closed-form rank-one-update evaluation vs the assembled state-space
    # member must agree for any feed-through value
    fam, _ = family_from(mixed_system(1, 30), 3)
    rng = np.random.default_rng(5)
    for dr in (0.0, 0.1, -0.35, 2.4):
        model = fam.assemble(dr)
        for _ in range(4):
            s = complex(rng.uniform(0.2, 3.0), rng.uniform(-3.0, 3.0))
            a = fam.eval(s, dr)
            b = model.eval(s)
            assert abs(a - b) <= 1e-9 * (1.0 + abs(a)), (dr, s, a, b)


def test_interpolation_invariance_across_the_family():
    # the 2r Hermite conditions at the core's points survive any dr
    sys = mixed_system(2, 36)
    fam, res = family_from(sys, 3)
    pts = res.model.points
    for dr in (-1.2, -0.01, 0.02, 0.7, 5.0):
        model = fam.assemble(dr)
        for s in pts:
            h, hp = sys.eval_deriv(s)
            g, gp = model.eval_deriv(s)
            assert abs(h - g) <= 1e-9 * (1.0 + abs(h)), dr
            assert abs(hp - gp) <= 1e-7 * (1.0 + abs(hp)), dr


def test_assemble_zero_returns_core_copy():
    fam, res = family_from(mixed_system(0, 16), 2)
    model = fam.assemble(0.0)
    assert model.dr == 0.0
    assert np.array_equal(model.Ar, res.model.Ar)


def test_stability_probe_on_hand_built_core():
    # one-state core E=1, A=-1, u=w=1: the family pole sits at dr - 1
    core = ReducedModel(
        Er=np.array([[1.0]]), Ar=np.array([[-1.0]]),
        br=np.array([1.0]), cr=np.array([1.0]), dr=0.0,
        u_ones=np.array([1.0 + 0j]), w_ones=np.array([1.0 + 0j]),
    )
    fam = FeedthroughFamily(core)
    probe = fam.stability(0.5)
    assert probe.stable and abs(probe.margin - 0.5) < 1e-12
    probe = fam.stability(2.0)
    assert not probe.stable and abs(probe.margin + 1.0) < 1e-12
    assert fam.stability(0.5, margin_required=0.6).stable is False


def test_family_pole_detected_in_closed_form_route():
    core = ReducedModel(
        Er=np.array([[1.0]]), Ar=np.array([[-1.0]]),
        br=np.array([1.0]), cr=np.array([1.0]), dr=0.0,
        u_ones=np.array([1.0 + 0j]), w_ones=np.array([1.0 + 0j]),
    )
    fam = FeedthroughFamily(core)
    # G3(s) = 1/(s+1); the family denominator 1 - dr G3 vanishes when
    # s = dr - 1, which is also where the assembled pencil is singular
    with pytest.raises(FamilyPole):
        fam.eval(1.0, 2.0)


def test_matching_feedthrough_adds_one_interpolation_point():
    sys = mixed_system(0, 18)
    fam, _ = family_from(sys, 2)
    s_extra = 1.7
    t = fam.matching_feedthrough(sys, s_extra)
    model = fam.assemble(t)
    h = sys.eval(s_extra)
    assert abs(model.eval(s_extra) - h) <= 1e-8 * (1.0 + abs(h))


def test_matching_feedthrough_zero_when_error_already_vanishes():
    # reducing an order-1 system at r = 1 leaves zero error, so the
    # matching feed-through at any extra point is just zero
    sys = pole_residue_system([-1.0], [1.0])
    res = run_irka(sys, IrkaConfig(r=1, init="given", initial_points=[2.0]))
    fam = FeedthroughFamily(res.model)
    assert fam.matching_feedthrough(sys, 3.0) == 0.0


def test_matching_feedthrough_degenerate_case():
    # one-state core with u = w = 1 has G1 = G2 = G3 = 1/(s+1); at s = 1
    # the denominator (G1-1)(G2-1) + G3 (H - H0) = 1/4 + (H(1) - 1/2)/2
    # vanishes when the target satisfies H(1) = 0
    from hinfmor.statespace import LtiSystem

    core = ReducedModel(
        Er=np.array([[1.0]]), Ar=np.array([[-1.0]]),
        br=np.array([1.0]), cr=np.array([1.0]), dr=0.0,
        u_ones=np.array([1.0 + 0j]), w_ones=np.array([1.0 + 0j]),
    )
    fam = FeedthroughFamily(core)
    target = LtiSystem(  # H(s) = (s - 1)/(s + 2) = 1 - 3/(s + 2)
        np.eye(1), np.array([[-2.0]]), np.array([1.0]), np.array([-3.0]), 1.0
    )
    assert abs(target.eval(1.0)) < 1e-15
    with pytest.raises(DegenerateDenominator):
        fam.matching_feedthrough(target, 1.0)
