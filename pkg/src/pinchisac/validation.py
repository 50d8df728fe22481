"""Self-check suite run by ``pinchisac validate``.

Every check returns a CheckResult; the suite is sized to finish within a
few minutes.  The instance generators are shared with the test-suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import outage
from .baselines import antenna_selection_baseline, exhaustive_oracle, fixed_pa_baseline
from .channel import comm_rate, comm_snr, rate_gradient, user_channel
from .sca import (Problem, SCAConfig, optimize, penalized_bound, perturbed_uniform,
                  sca_inner, _initial_s)
from .scenario import SelectionSchedule, SystemParams, Vec3, dbm_to_watts, \
    default_params, validate_schedule


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


# ---------------------------------------------------------------------------
# instance generators

def well_separated_rates(rng: np.random.Generator, min_gap: float = 0.1,
                         t_range=(2, 8)) -> np.ndarray:
    """Rates log-uniform on [0.1, 10] with pairwise relative gap >= min_gap."""
    T = int(rng.integers(t_range[0], t_range[1] + 1))
    while True:
        lam = 10.0 ** rng.uniform(-1.0, 1.0, T)
        if outage.min_relative_gap(lam) >= min_gap:
            return lam


def moderate_threshold(rng: np.random.Generator, lam) -> float:
    """A threshold between 0.1 and 3 times the mean of the sum."""
    return float(np.sum(1.0 / np.asarray(lam))) * rng.uniform(0.1, 3.0)


def random_gains(rng: np.random.Generator, T: int) -> np.ndarray:
    """Sensing gains log-uniform over six decades."""
    return 10.0 ** rng.uniform(-3.0, 3.0, T)


def random_reduced_params(rng: np.random.Generator, base: SystemParams | None = None,
                          M: int = 10, T: int = 3) -> SystemParams:
    """Reduced instance with random user/target placement and power."""
    base = base or default_params()
    return base.replace(
        num_positions=M, num_slots=T, min_rate=float(rng.choice([0.0, 0.5])),
        user_pos=Vec3(rng.uniform(0, 10), rng.uniform(-5, 5), 0.0),
        target_pos=Vec3(rng.uniform(0, 10), rng.uniform(-5, 5), 0.0),
        transmit_power=dbm_to_watts(rng.uniform(0, 30)))


def random_binary_schedule(rng: np.random.Generator, T: int, M: int) -> SelectionSchedule:
    return SelectionSchedule.from_indices(rng.permutation(M)[:T], M)


# ---------------------------------------------------------------------------
# checks

def check_cdf_oracles() -> CheckResult:
    a = outage.hypoexp_cdf_distinct((1.0, 2.0), 1.0)
    b = outage.hypoexp_cdf_robust((1.0, 1.0), 1.0)
    ok = abs(a - 0.3995764) <= 1e-7 and abs(b - 0.2642411) <= 1e-7
    return CheckResult("cdf_oracles", ok, f"distinct(1,2)={a:.9f} robust(1,1)={b:.9f}")


def check_cdf_paths(n: int = 1000, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        lam = well_separated_rates(rng)
        x = moderate_threshold(rng, lam)
        d = outage.hypoexp_cdf_distinct(lam, x)
        r = outage.hypoexp_cdf_robust(lam, x)
        worst = max(worst, abs(d - r) / max(abs(r), 1e-300))
    return CheckResult("cdf_paths_agree", worst <= 1e-9, f"worst relative gap {worst:.3g} over {n}")


def check_chernoff_dominance(n: int = 1000, n_s: int = 20, seed: int = 2,
                             log_bound: Callable | None = None) -> CheckResult:
    """exp(log-bound(s)) must not fall below the exact CDF for any s > 0."""
    log_bound = log_bound or outage.chernoff_log_lower
    rng = np.random.default_rng(seed)
    violations, worst = 0, 0.0
    for _ in range(n):
        T = int(rng.integers(1, 9))
        psi = random_gains(rng, T)
        omega, gth = 1.0, float(10.0 ** rng.uniform(-0.5, 1.5))
        exact = outage.hypoexp_cdf(outage.rates_from_gains(psi, omega).rates, gth)[0]
        for s in 10.0 ** rng.uniform(-3, 1, n_s):
            bound = math.exp(min(log_bound(float(s), psi, omega, gth), 700.0))
            gap = exact - bound
            worst = max(worst, gap)
            violations += gap > 1e-9
    return CheckResult("chernoff_dominance", violations == 0,
                       f"{violations} violations, worst exact-bound {worst:.3g}")


def check_optimize_s(n: int = 200, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst, bad_zero = 0.0, 0
    for _ in range(n):
        T = int(rng.integers(1, 9))
        psi = random_gains(rng, T)
        gth = float(10.0 ** rng.uniform(-0.5, 1.5))
        s, logb = outage.optimize_s(psi, 1.0, gth)
        if gth >= psi.sum():
            bad_zero += not (s == 0.0 and logb == 0.0)
            continue
        resid = abs(gth - float(np.sum(psi / (1.0 + s * psi))))
        worst = max(worst, resid / gth)
    ok = worst <= 1e-8 and bad_zero == 0
    return CheckResult("chernoff_stationarity", ok,
                       f"worst relative slope {worst:.3g}, zero-s mismatches {bad_zero}")


def check_closed_vs_mc(n: int = 10, samples: int = 100_000, seed: int = 4,
                       p: SystemParams | None = None) -> CheckResult:
    p = p or default_params().replace(transmit_power=dbm_to_watts(10))
    rng = np.random.default_rng(seed)
    fails, worst = 0, 0.0
    for i in range(n):
        T = int(rng.choice([2, 4, 8]))
        q = p.replace(num_slots=T)
        prob = Problem.build(q)
        sched = random_binary_schedule(rng, T, q.num_positions)
        psi = prob.slot_gains(sched.weights)
        exact = outage.exact_outage(psi, q)
        est, err = outage.mc_outage_gains(psi, q.rcs_mean, q.snr_threshold, samples, seed + i)
        dev = abs(exact - est)
        worst = max(worst, dev / max(3.29 * err, 1e-4))
        fails += dev > max(3.29 * err, 1e-4)
    return CheckResult("closed_form_vs_mc", fails <= max(1, n // 50),
                       f"{fails}/{n} outside 3.29 stderr, worst ratio {worst:.3g}")


def check_rate_gradient(n: int = 100, seed: int = 5, p: SystemParams | None = None) -> CheckResult:
    p = p or default_params()
    h = user_channel(p)
    M = p.num_positions
    rng = np.random.default_rng(seed)
    worst, step = 0.0, 1e-6
    for _ in range(n):
        b = rng.dirichlet(np.ones(M))
        g = rate_gradient(b, h, p)
        fd = np.empty(M)
        for m in range(M):
            e = np.zeros(M)
            e[m] = step
            fd[m] = (comm_rate(comm_snr(b + e, h, p)) - comm_rate(comm_snr(b - e, h, p))) / (2 * step)
        worst = max(worst, float(np.max(np.abs(g - fd)) / np.max(np.abs(fd))))
    return CheckResult("rate_gradient", worst <= 1e-5, f"worst relative error {worst:.3g}")


def check_mm_monotone(n: int = 5, seed: int = 6, rho: float = 1e-2,
                      cfg: SCAConfig | None = None) -> CheckResult:
    cfg = cfg or SCAConfig()
    rng = np.random.default_rng(seed)
    worst_rise, not_conv, most = 0.0, 0, 0
    for i in range(n):
        q = random_reduced_params(rng)
        prob = Problem.build(q)
        s = _initial_s(prob)
        b0 = perturbed_uniform(q.num_slots, q.num_positions, i, cfg.init_perturbation)
        res = sca_inner(s, b0, rho, cfg, prob)
        tr = np.asarray(res.trace)
        if tr.size > 1:
            worst_rise = max(worst_rise, float(np.max(np.diff(tr))))
        not_conv += not res.converged
        most = max(most, res.iterations)
    ok = worst_rise <= 1e-8 and not_conv == 0
    return CheckResult("mm_monotone", ok, f"largest rise {worst_rise:.3g}, "
                       f"unconverged {not_conv}/{n}, max iterations {most}")


def check_oracle(n: int = 5, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    matches, below, infeasible = 0, 0, 0
    for i in range(n):
        q = random_reduced_params(rng)
        o = exhaustive_oracle(q)
        r = optimize(q, seed=i)
        infeasible += not r.feasible
        below += r.exact_outage < o.exact_outage * (1 - 1e-9)
        matches += sorted(r.selected_positions) == sorted(o.selected_positions)
    ok = below == 0 and infeasible == 0 and matches >= math.ceil(0.75 * n)
    return CheckResult("oracle_proximity", ok, f"{matches}/{n} same subset, "
                       f"{below} below oracle, {infeasible} infeasible")


def check_schedules(p: SystemParams | None = None) -> CheckResult:
    p = p or default_params().replace(transmit_power=dbm_to_watts(20))
    bad = []
    for name, res, reuse in (("proposed", optimize(p), False),
                             ("fixed_pa", fixed_pa_baseline(p), True),
                             ("antenna_selection", antenna_selection_baseline(p), False)):
        v = validate_schedule(res.schedule, p, allow_reuse=reuse)
        if v:
            bad.append(f"{name}: {v}")
    return CheckResult("schedule_constraints", not bad, "; ".join(bad) or "all schemes valid")


def check_diversity_gap() -> CheckResult:
    """Correlated-draw outage exceeds the iid outage when outage < 1 - 1/e."""
    p = default_params()
    bad = 0
    for T in (2, 4, 8):
        for gth in 10.0 ** np.linspace(-2, 0, 9):
            q = p.replace(snr_threshold=float(gth), num_slots=T)
            psi = np.ones(T)
            iid = outage.exact_outage(psi, q, "iid")
            cor = outage.exact_outage(psi, q, "correlated")
            if cor < 1 - math.exp(-1) and not cor > iid:
                bad += 1
    return CheckResult("diversity_order", bad == 0, f"{bad} grid points violated")


CHECKS = (
    check_cdf_oracles, check_cdf_paths, check_chernoff_dominance, check_optimize_s,
    check_closed_vs_mc, check_rate_gradient, check_mm_monotone, check_oracle,
    check_schedules, check_diversity_gap,
)


def run_suite(log_bound: Callable | None = None, echo: Callable | None = None) -> list[CheckResult]:
    """Run every check; `log_bound` replaces the Chernoff log-bound (test hook)."""
    results = []
    for chk in CHECKS:
        t0 = time.perf_counter()
        try:
            if chk is check_chernoff_dominance:
                res = chk(log_bound=log_bound)
            else:
                res = chk()
        except Exception as exc:  # a crashing check is a failing check
            res = CheckResult(chk.__name__.removeprefix("check_"), False,
                              f"raised {type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
        if echo:
            echo(res.line())
    return results
