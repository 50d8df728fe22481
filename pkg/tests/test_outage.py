import math

import numpy as np
import pytest

from pinchisac import outage
from pinchisac.channel import target_channel
from pinchisac.outage import (AccuracyError, DuplicateRatesError, chernoff_bound,
                              chernoff_log_lower, chernoff_log_paper, exact_outage,
                              hypoexp_cdf, hypoexp_cdf_distinct, hypoexp_cdf_robust,
                              mc_outage, mc_outage_gains, optimize_s, outage_report,
                              rates_from_gains, rates_from_schedule)
from pinchisac.scenario import SelectionSchedule, default_params


def erlang_cdf(k, lam, x):
    return 1.0 - math.exp(-lam * x) * sum((lam * x) ** i / math.factorial(i) for i in range(k))


def test_distinct_examples():
    assert hypoexp_cdf_distinct([1.0], 0.0) == 0.0
    assert hypoexp_cdf_distinct([1.0], math.log(2)) == pytest.approx(0.5, abs=1e-15)
    v = hypoexp_cdf_distinct([1.0, 2.0], 1.0)
    assert v == pytest.approx(1 - 2 * math.exp(-1) + math.exp(-2), rel=1e-14)
    assert abs(v - 0.3995764) <= 1e-7


def test_distinct_rejects_duplicates():
    with pytest.raises(DuplicateRatesError):
        hypoexp_cdf_distinct([1.0, 1.0 + 1e-10], 1.0)


def test_robust_examples():
    assert abs(hypoexp_cdf_robust([1.0, 1.0], 1.0) - 0.2642411) <= 1e-7
    assert hypoexp_cdf_robust([1.0, 2.0], 1.0) == pytest.approx(0.3995764, abs=1e-7)
    assert hypoexp_cdf_robust([3.0, 0.2, 5.0], 0.0) == 0.0
    with pytest.raises(ValueError):
        hypoexp_cdf_robust([1.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        hypoexp_cdf_robust([1.0, -2.0], 1.0)


@pytest.mark.parametrize("k", [1, 2, 3, 5, 8, 12])
@pytest.mark.parametrize("x", [1e-3, 0.1, 1.0, 4.0, 20.0])
def test_robust_matches_erlang(k, x):
    lam = 1.7
    ref = erlang_cdf(k, lam, x) if erlang_cdf(k, lam, x) > 1e-3 else None
    got = hypoexp_cdf_robust([lam] * k, x)
    if ref is None:
        # tail: use the series form to avoid cancellation in the reference
        ref = math.exp(-lam * x) * sum((lam * x) ** i / math.factorial(i)
                                       for i in range(k, k + 60))
    assert got == pytest.approx(ref, rel=1e-9)


def test_robust_deep_tail_relative_accuracy():
    # P(Erlang(4, 1) < 1e-3) ~ 4.2e-14 must keep its relative accuracy
    x = 1e-3
    ref = math.exp(-x) * sum(x ** i / math.factorial(i) for i in range(4, 40))
    assert hypoexp_cdf_robust([1.0] * 4, x) == pytest.approx(ref, rel=1e-12)


def test_cdf_limits_and_monotone():
    lam = np.array([0.3, 1.1, 4.0, 4.0, 9.0])
    xs = np.linspace(0, 30, 200)
    vals = [hypoexp_cdf(lam, x)[0] for x in xs]
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) >= -1e-15)
    assert hypoexp_cdf(lam, 100 / lam.min())[0] >= 1 - 1e-6


def test_hypoexp_cdf_routing():
    v, robust = hypoexp_cdf([1.0, 2.0], 1.0)
    assert not robust and v == pytest.approx(0.3995764, abs=1e-7)
    _, robust = hypoexp_cdf([1.0, 1.0], 1.0)
    assert robust
    # near-coincident rates: closed form cancels, robust path takes over
    v, robust = hypoexp_cdf([1.0, 1.0 + 1e-6, 1.0 + 2e-6], 0.5)
    assert robust
    assert v == pytest.approx(erlang_cdf(3, 1.000001, 0.5), rel=1e-5)


def test_clamp_raises_on_large_excursion():
    with pytest.raises(AccuracyError):
        outage._clamp(1.0 + 1e-6)
    assert outage._clamp(1.0 + 1e-12) == 1.0
    assert outage._clamp(-1e-12) == 0.0


def test_rate_vectors():
    p = default_params()
    h = target_channel(p)
    rv = rates_from_schedule(SelectionSchedule.from_indices([0, 4, 9, 13], 20), h, p)
    assert len(rv) == 4 and not rv.has_duplicates
    assert len(set(rv.rates)) == 4
    same = rates_from_schedule(SelectionSchedule.from_indices([2, 2, 2, 2], 20), h, p)
    assert same.has_duplicates
    psi = np.array([0.5, 2.0])
    assert np.allclose(rates_from_gains(psi, 2.0).rates, rates_from_gains(psi, 1.0).rates / 2)
    with pytest.raises(ValueError):
        rates_from_gains([1.0, 0.0], 1.0)


def test_chernoff_lower_examples():
    assert chernoff_log_lower(0.0, [1.0, 3.0], 1.0, 2.0) == 0.0
    v = chernoff_log_lower(1.0, [1.0], 1.0, 0.5)
    assert v == pytest.approx(0.5 - math.log(2), rel=1e-14)
    assert math.exp(v) == pytest.approx(0.82436, abs=1e-5)
    assert math.exp(v) >= 1 - math.exp(-0.5)


def test_chernoff_paper_examples():
    assert chernoff_log_paper(0.0, [1.0, 2.0], 1.0, 1.0) == 0.0
    psi = [0.4, 1.3, 2.2]
    for s in (0.05, 0.2, 0.4):
        assert chernoff_log_paper(-s, psi, 1.0, 3.0) == pytest.approx(
            chernoff_log_lower(s, psi, 1.0, 3.0), rel=1e-13)
    with pytest.raises(ValueError):
        chernoff_log_paper(1.0, [1.0], 1.0, 1.0)
    near = [chernoff_log_paper((1 - 10.0 ** -k), [1.0], 1.0, 0.1) for k in (2, 6, 12)]
    assert near[0] < near[1] < near[2] and near[2] > 20


def test_optimize_s_cases():
    s, logb = optimize_s([1.0], 1.0, 0.5)
    assert s == pytest.approx(1.0, rel=1e-9)
    assert logb == pytest.approx(0.5 - math.log(2), rel=1e-9)
    s, logb = optimize_s([1.0, 2.0], 1.0, 3.0)
    assert s == 0.0 and logb == 0.0
    psi = np.array([0.7, 3.0, 11.0])
    s, _ = optimize_s(psi, 1.0, 2.0)
    assert abs(2.0 - np.sum(psi / (1 + s * psi))) <= 1e-8
    s_p, logb_p = optimize_s(psi, 1.0, 2.0, "paper")
    assert 0 < s_p < 1 / psi.max()
    for t in np.linspace(0.01, 0.99, 25) / psi.max():
        assert logb_p <= chernoff_log_paper(t, psi, 1.0, 2.0) + 1e-12
    with pytest.raises(ValueError):
        optimize_s(psi, 1.0, 2.0, "bogus")


def test_chernoff_bound_correlated_uses_total_gain():
    p = default_params()
    b_iid, _ = chernoff_bound([4.0, 6.0], p, "iid")
    b_cor, s = chernoff_bound([4.0, 6.0], p, "correlated")
    s1, logb = optimize_s([10.0], p.rcs_mean, p.snr_threshold)
    assert b_cor == pytest.approx(math.exp(logb)) and s == s1
    assert b_cor >= exact_outage([4.0, 6.0], p, "correlated")
    assert b_iid >= exact_outage([4.0, 6.0], p, "iid")


def test_exact_outage_models():
    p = default_params().replace(snr_threshold=1.0)
    assert exact_outage([1.0, 1.0], p, "iid") == pytest.approx(1 - 2 * math.exp(-1), rel=1e-12)
    # correlated: one draw scales the summed gain
    assert exact_outage([0.5, 0.5], p, "correlated") == pytest.approx(1 - math.exp(-1), rel=1e-12)
    with pytest.raises(ValueError):
        exact_outage([1.0], p, "bogus")


def test_mc_examples():
    est, err = mc_outage_gains([1.0], 1.0, 0.0, 1000, 0)
    assert est == 0.0 and err == 0.0
    est, err = mc_outage_gains([1.0], 1.0, math.log(2), 1_000_000, 1)
    assert abs(est - 0.5) <= 3 * err
    est, err = mc_outage_gains([1.0, 0.5], 1.0, 1.0, 1_000_000, 2)
    assert abs(est - 0.39958) <= 3 * err
    with pytest.raises(ValueError):
        mc_outage_gains([1.0], 1.0, 1.0, 0, 0)


def test_mc_reproducible_and_block_keyed():
    a = mc_outage_gains([1.0, 2.0, 3.0], 1.0, 2.0, 200_000, 7)
    b = mc_outage_gains([1.0, 2.0, 3.0], 1.0, 2.0, 200_000, 7)
    assert a == b
    c = mc_outage_gains([1.0, 2.0, 3.0], 1.0, 2.0, 200_000, 8)
    assert a != c
    # each block has its own stream keyed by (seed, block); rebuilding the
    # blocks independently gives the same count
    psi = np.array([1.0, 2.0])
    n = outage.MC_BLOCK
    total = 2 * n + 123
    hits = 0
    for k, size in enumerate((n, n, 123)):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([3, k])))
        hits += int(np.count_nonzero(rng.standard_exponential((size, 2)) @ psi < 2.0))
    assert mc_outage_gains(psi, 1.0, 2.0, total, 3)[0] == hits / total


def test_mc_correlated_model():
    est, err = mc_outage_gains([0.5, 0.5], 1.0, 1.0, 500_000, 4, "correlated")
    assert abs(est - (1 - math.exp(-1))) <= 4 * err
    with pytest.raises(ValueError):
        mc_outage_gains([1.0], 1.0, 1.0, 10, 0, "bogus")


def test_mc_outage_schedule_wrapper():
    p = default_params()
    h = target_channel(p)
    s = SelectionSchedule.from_indices([0, 1, 2, 3], 20)
    psi = outage.slot_gains(s, h, p)
    assert mc_outage(s, h, p, 1000, 5) == mc_outage_gains(psi, p.rcs_mean, p.snr_threshold, 1000, 5)


def test_outage_report_fields():
    p = default_params()
    rep = outage_report([3.0, 5.0, 8.0], p, "iid", mc_samples=10_000, seed=1)
    assert 0 <= rep.exact_cdf <= rep.chernoff_bound <= 1
    assert rep.mc_estimate is not None and rep.mc_stderr is not None
    rep0 = outage_report([3.0, 5.0, 8.0], p)
    assert rep0.mc_estimate is None and rep0.mc_stderr is None
    assert outage_report([3.0, 3.0], p).used_robust_path


def test_permutation_invariance():
    p = default_params()
    psi = np.array([0.8, 5.0, 2.5, 11.0])
    perm = psi[[2, 0, 3, 1]]
    assert exact_outage(psi, p) == pytest.approx(exact_outage(perm, p), rel=1e-13)
    assert chernoff_bound(psi, p) == pytest.approx(chernoff_bound(perm, p), rel=1e-12)


def test_extra_slot_never_hurts():
    p = default_params()
    rng = np.random.default_rng(9)
    for _ in range(50):
        psi = 10 ** rng.uniform(-1, 2, int(rng.integers(1, 7)))
        more = np.append(psi, 10 ** rng.uniform(-2, 2))
        assert exact_outage(more, p) <= exact_outage(psi, p) + 1e-15
