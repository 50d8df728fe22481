import itertools
import math

import numpy as np
import pytest

from pinchisac import outage
from pinchisac.baselines import (BaselineSpec, antenna_selection_baseline,
                                 antenna_selection_channels, exhaustive_oracle,
                                 fixed_pa_baseline, ula_positions)
from pinchisac.sca import Problem, optimize
from pinchisac.scenario import dbm_to_watts, default_params, validate_schedule


def test_fixed_pa_outage_formulas():
    p = default_params().replace(snr_threshold=1.0)
    # correlated: one draw, outage 1 - exp(-G/(T psi Omega))
    assert outage.exact_outage([0.5, 0.5], p, "correlated") == pytest.approx(
        1 - math.exp(-1 / 2 / 0.5), rel=1e-12)
    assert outage.exact_outage([1.0, 1.0], p, "correlated") == pytest.approx(
        1 - math.exp(-0.5), rel=1e-12)
    assert outage.exact_outage([1.0, 1.0], p, "iid") == pytest.approx(1 - 2 * math.exp(-1))


@pytest.mark.parametrize("model", ["correlated", "iid"])
def test_fixed_pa_exhaustive(model):
    p = default_params().replace(transmit_power=dbm_to_watts(15))
    res = fixed_pa_baseline(p, BaselineSpec("fixed_pa", model))
    prob = Problem.build(p)
    g, r = prob.position_gains(), prob.position_rates()
    outs = [outage.exact_outage(np.full(4, g[m]), p, model) if 4 * r[m] >= p.min_rate
            else math.inf for m in range(20)]
    m = int(np.argmin(outs))
    assert res.selected_positions == [m] * 4
    assert res.exact_outage == pytest.approx(outs[m])
    assert res.feasible
    assert validate_schedule(res.schedule, p, allow_reuse=True) == []


def test_fixed_pa_single_slot_matches_oracle():
    p = default_params().replace(num_slots=1, min_rate=0.0)
    res = fixed_pa_baseline(p, BaselineSpec("fixed_pa", "iid"))
    assert res.selected_positions == exhaustive_oracle(p).selected_positions


def test_fixed_pa_infeasible():
    p = default_params().replace(min_rate=1e4)
    assert not fixed_pa_baseline(p).feasible


def test_correlated_exceeds_iid_below_knee():
    p = default_params()
    for T in (2, 4, 8):
        for gth in np.geomspace(0.01, 1.0, 9):
            q = p.replace(snr_threshold=float(gth))
            cor = outage.exact_outage(np.ones(T), q, "correlated")
            iid = outage.exact_outage(np.ones(T), q, "iid")
            if cor < 1 - math.exp(-1):
                assert cor > iid


def test_ula_geometry():
    p = default_params()
    pos = ula_positions(p)
    assert pos.shape == (20, 3)
    assert np.allclose(np.diff(pos[:, 0]), p.wavelength / 2)
    assert pos[:, 0].mean() == pytest.approx(5.0)
    assert np.all(pos[:, 2] == 3.0) and np.all(pos[:, 1] == 0.0)


def test_ula_element_magnitudes():
    # each element is fed from p0 through the guided link, then radiates
    p = default_params()
    pos = ula_positions(p)
    mag = np.abs(antenna_selection_channels(p).user.gains)
    for m in (0, 7, 19):
        free = math.dist(p.user_pos, pos[m])
        guided = math.dist(p.feed_pos, pos[m])
        assert mag[m] == pytest.approx(p.eta * math.exp(-0.18 * guided) / free, rel=1e-12)
    # the 9.5 cm aperture leaves only a few percent of magnitude spread
    assert (mag.max() - mag.min()) / mag.max() < 0.05


def test_antenna_selection_valid_and_worse_than_fixed():
    p = default_params().replace(transmit_power=dbm_to_watts(20))
    a = antenna_selection_baseline(p)
    f = fixed_pa_baseline(p)
    assert validate_schedule(a.schedule, p) == []
    assert a.rcs_model == "correlated" and a.scheme == "antenna_selection"
    assert a.exact_outage >= f.exact_outage


def test_oracle_small_instance_monotone():
    p = default_params().replace(num_positions=5, num_slots=2, min_rate=0.0)
    o = exhaustive_oracle(p)
    g = Problem.build(p).position_gains()
    assert sorted(o.selected_positions) == sorted(np.argsort(-g)[:2].tolist())
    # direct enumeration agrees
    best = min(itertools.combinations(range(5), 2),
               key=lambda c: outage.exact_outage(g[list(c)], p))
    assert sorted(o.selected_positions) == list(best)
    assert o.diagnostics["candidates"] == 10


def test_oracle_full_subset_and_guard():
    p = default_params().replace(num_positions=4, num_slots=4)
    o = exhaustive_oracle(p)
    assert sorted(o.selected_positions) == [0, 1, 2, 3]
    with pytest.raises(ValueError, match="oracle limit"):
        exhaustive_oracle(default_params().replace(num_positions=25, num_slots=7))


def test_oracle_infeasible_flag():
    p = default_params().replace(num_positions=6, num_slots=2, min_rate=1e4)
    assert not exhaustive_oracle(p).feasible


def test_oracle_lower_bounds_optimizer():
    p = default_params().replace(num_positions=8, num_slots=3, transmit_power=dbm_to_watts(5))
    o = exhaustive_oracle(p)
    r = optimize(p)
    assert r.exact_outage >= o.exact_outage * (1 - 1e-12)
    assert validate_schedule(o.schedule, p) == []
