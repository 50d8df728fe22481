import numpy as np
import pytest

from pinchisac.baselines import exhaustive_oracle, fixed_pa_baseline
from pinchisac.channel import ChannelVector, comm_rate, comm_snr
from pinchisac.sca import (Problem, SCAConfig, binarization_penalty, is_binarized,
                           linearize_rate, linearize_sensing_gain, optimize,
                           penalized_bound, penalty_and_linearization,
                           perturbed_uniform, round_schedule, sca_inner,
                           solve_subproblem, _initial_s)
from pinchisac.scenario import (SelectionSchedule, dbm_to_watts, default_params,
                                validate_schedule)


@pytest.fixture(scope="module")
def prob():
    return Problem.build(default_params().replace(transmit_power=dbm_to_watts(20)))


def test_config_validation():
    with pytest.raises(ValueError):
        SCAConfig(penalty_growth=1.0)
    with pytest.raises(ValueError):
        SCAConfig(sca_tolerance=0.0)
    with pytest.raises(ValueError):
        SCAConfig(surrogate_mode="other")


def test_rate_linearisation_tangent(prob):
    p = prob.params
    h = prob.channels.user
    rng = np.random.default_rng(0)
    b0 = rng.dirichlet(np.ones(20), 4)
    lin = linearize_rate(b0, h, p)
    assert np.allclose(lin(b0), comm_rate(comm_snr(b0, h, p)), rtol=1e-13)
    # first-order accurate along random directions
    d = rng.normal(size=(4, 20))
    for eps in (1e-3, 1e-4):
        err = np.abs(lin(b0 + eps * d) - comm_rate(comm_snr(b0 + eps * d, h, p)))
        assert np.all(err <= 50 * eps ** 2 * np.abs(d).sum() ** 2 + 1e-12)
    zero = ChannelVector(np.zeros(20), "user")
    assert np.allclose(linearize_rate(b0, zero, p)(rng.dirichlet(np.ones(20), 4)), 0.0)


def test_sensing_linearisation_is_global_minorant(prob):
    h = prob.channels.target
    rng = np.random.default_rng(1)
    b0 = rng.dirichlet(np.ones(20), 3)
    lin = linearize_sensing_gain(b0, h)
    assert np.allclose(lin(b0), prob.target_quad(b0), rtol=1e-13)
    for _ in range(1000):
        b = rng.uniform(0, 1, (3, 20))
        assert np.all(lin(b) <= prob.target_quad(b) * (1 + 1e-12) + 1e-30)
    assert np.allclose(linearize_sensing_gain(np.zeros((3, 20)), h)(b), 0.0)


def test_penalty_majorant():
    T, M = 3, 6
    binary = SelectionSchedule.from_indices([0, 2, 5], M).weights
    f0, lin = penalty_and_linearization(binary)
    rng = np.random.default_rng(2)
    assert f0 == 0.0
    for _ in range(100):
        b = rng.uniform(0, 1, (T, M))
        assert lin(b.reshape(1, -1))[0] >= -1e-15
    half = np.full((T, M), 0.5)
    f_half, lin_half = penalty_and_linearization(half)
    assert f_half == pytest.approx(T * M / 4)
    assert np.allclose(lin_half.grad, 0.0)
    for _ in range(1000):
        b0, b = rng.uniform(0, 1, (2, T, M))
        f0, lin = penalty_and_linearization(b0)
        assert lin(b.reshape(1, -1))[0] >= binarization_penalty(b) - 1e-12


def test_uniform_start_feasible():
    p = default_params()
    for T in (1, 4, 20):
        q = p.replace(num_slots=T)
        assert validate_schedule(SelectionSchedule.uniform(T, 20), q) == []
        w = perturbed_uniform(T, 20, 3, 0.1)
        assert validate_schedule(SelectionSchedule(w), q) == []


def test_subproblem_single_slot_concentrates():
    p = default_params().replace(num_slots=1, min_rate=0.0)
    prob = Problem.build(p)
    cfg = SCAConfig()
    b0 = np.full((1, 20), 1 / 20)
    sub = solve_subproblem(_initial_s(prob), b0, 0.0, cfg, prob)
    grad = linearize_sensing_gain(b0, prob.channels.target).grad[0]
    assert np.argmax(sub.schedule.weights[0]) == np.argmax(grad)
    assert sub.schedule.weights[0].max() >= 1 - 1e-6
    assert sub.kkt_residual <= cfg.subproblem_kkt_tol


def test_subproblem_feasibility_and_descent(prob):
    cfg = SCAConfig()
    rng = np.random.default_rng(3)
    p = prob.params
    for i in range(50):
        b0 = 0.7 * rng.dirichlet(np.ones(20), 4) + 0.3 / 20
        s = float(10 ** rng.uniform(-2, 0))
        rho = float(10 ** rng.uniform(-3, 0))
        sub = solve_subproblem(s, b0, rho, cfg, prob)
        w = sub.schedule.weights
        assert validate_schedule(sub.schedule, p) == []
        assert sub.kkt_residual <= cfg.subproblem_kkt_tol
        lin = linearize_rate(b0, prob.channels.user, p)
        assert lin(w).sum() + sub.slack >= p.min_rate - 1e-6
        if prob.slot_rates(b0).sum() >= p.min_rate:
            # b0 is feasible and the surrogate touches the true bound there
            assert sub.objective <= penalized_bound(prob, b0, s, rho, "corrected") + 1e-9


def test_sca_inner_monotone_and_fixed_point(prob):
    cfg = SCAConfig()
    s = _initial_s(prob)
    res = sca_inner(s, perturbed_uniform(4, 20, 0, 0.1), 0.05, cfg, prob)
    tr = np.array(res.trace)
    assert np.all(np.diff(tr) <= 1e-8)
    assert res.converged and res.iterations <= cfg.max_sca_iters
    again = sca_inner(s, res.schedule.weights, 0.05, cfg, prob)
    assert again.iterations == 1
    assert np.linalg.norm(again.schedule.weights - res.schedule.weights) < cfg.sca_tolerance


def test_round_schedule():
    p = default_params()
    ch = Problem.build(p).channels
    b = SelectionSchedule.from_indices([5, 1, 9, 0], 20)
    out, ok = round_schedule(b, ch, p)
    assert ok and np.array_equal(out.weights, b.weights)
    w = np.full((4, 20), 0.01)
    for t, m in enumerate([3, 7, 11, 2]):
        w[t, m] = 0.81
    out, ok = round_schedule(w, ch, p)
    assert list(out.selected()) == [3, 7, 11, 2]
    assert validate_schedule(out, p) == []
    # conflicting maxima still give distinct columns
    w = np.zeros((4, 20))
    w[:, 0] = 0.6
    w[:, 1:5] = 0.1
    out, _ = round_schedule(w, ch, p)
    assert validate_schedule(out, p) == []


def test_round_schedule_rate_repair():
    p = default_params()
    prob = Problem.build(p)
    rates = prob.position_rates()
    worst = list(np.argsort(rates)[:4])
    need = float(np.sort(rates)[::-1][:4].sum()) - 1e-6
    q = p.replace(min_rate=need)
    out, ok = round_schedule(SelectionSchedule.from_indices(worst, 20), prob.channels, q)
    assert ok and rates[out.selected()].sum() >= need
    impossible = p.replace(min_rate=need + 1.0)
    _, ok = round_schedule(SelectionSchedule.from_indices(worst, 20), prob.channels, impossible)
    assert not ok


def test_optimize_three_positions_single_slot():
    p = default_params().replace(num_positions=3, num_slots=1, min_rate=0.0)
    r = optimize(p)
    o = exhaustive_oracle(p)
    assert r.selected_positions == o.selected_positions
    assert r.selected_positions[0] == int(np.argmax(Problem.build(p).position_gains()))


def test_optimize_default_beats_fixed_pa():
    p = default_params().replace(transmit_power=dbm_to_watts(20))
    r = optimize(p)
    f = fixed_pa_baseline(p)
    assert r.feasible and r.achieved_rate >= p.min_rate - 1e-9
    assert r.exact_outage <= f.exact_outage
    assert validate_schedule(r.schedule, p) == []
    assert r.schedule.mode == "binary"
    for tr in r.surrogate_trace:
        assert np.all(np.diff(tr) <= 1e-8)


def test_optimize_deterministic():
    p = default_params().replace(num_positions=10, num_slots=3)
    a, b = optimize(p, seed=4), optimize(p, seed=4)
    assert np.array_equal(a.schedule.weights, b.schedule.weights)
    assert np.array_equal(a.relaxed_schedule.weights, b.relaxed_schedule.weights)
    assert a.surrogate_trace == b.surrogate_trace


def test_optimize_rejects_too_many_slots():
    p = default_params()
    from pinchisac.channel import Channels
    ch = Channels.from_params(p, p.pa_positions[:3])
    with pytest.raises(ValueError):
        optimize(p, channels=ch)


def test_infeasible_rate_flagged():
    p = default_params().replace(num_positions=6, num_slots=2, min_rate=500.0)
    r = optimize(p)
    assert not r.feasible
    assert validate_schedule(r.schedule, p) == []


def test_paper_mode_small_instance():
    p = default_params().replace(num_positions=6, num_slots=2, transmit_power=dbm_to_watts(20))
    cfg = SCAConfig(surrogate_mode="paper", s_grid_size=4)
    r = optimize(p, cfg)
    assert validate_schedule(r.schedule, p) == []
    assert r.diagnostics["surrogate_mode"] == "paper"
    assert r.diagnostics["max_kkt"] <= cfg.subproblem_kkt_tol
    s_max = 1 / (p.rcs_mean * Problem.build(p).position_gains().max())
    assert 0 < r.s_star < s_max


def test_is_binarized():
    assert is_binarized(np.eye(3), 1e-3)
    assert not is_binarized(np.full((2, 2), 0.5), 1e-3)
