"""Reference schemes and an exhaustive optimality oracle.

fixed_pa
    one waveguide position reused in every slot (no target diversity).
antenna_selection
    a conventional lambda/2 transmit ULA centred at [5, 0, d]; one element
    per slot, all elements see the target from practically the same angle.
oracle
    brute force over all T-subsets of the candidate positions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import outage
from .channel import Channels
from .scenario import SelectionSchedule, SystemParams, Vec3
from .sca import OptimizationResult, Problem, SCAConfig, optimize

ORACLE_LIMIT = 200_000


@dataclass(frozen=True)
class BaselineSpec:
    kind: str = "fixed_pa"  # or "antenna_selection"
    rcs_model: str = "correlated"
    ula_center: Vec3 | None = None

    def center(self, p: SystemParams) -> Vec3:
        return self.ula_center or Vec3(5.0, 0.0, p.pa_height)


def _result(scheme, p, sched, relaxed, out, rate, feasible, psi, rcs_model, iters=0,
            s_star=0.0, traces=None, **diag) -> OptimizationResult:
    return OptimizationResult(
        schedule=sched, relaxed_schedule=relaxed, s_star=s_star,
        surrogate_trace=traces or [], exact_outage=out, achieved_rate=rate,
        feasible=feasible, iterations=iters, scheme=scheme, rcs_model=rcs_model,
        diagnostics={"slot_gains": np.asarray(psi), **diag})


def fixed_pa_baseline(p: SystemParams, spec: BaselineSpec | None = None,
                      channels: Channels | None = None) -> OptimizationResult:
    """Best single position used in all T slots, by exhaustive search."""
    spec = spec or BaselineSpec("fixed_pa")
    prob = Problem.build(p, channels)
    T, M = prob.T, prob.M
    gains = prob.position_gains()
    rates = prob.position_rates()
    best = None
    for m in range(M):
        feasible = T * rates[m] >= p.min_rate - 1e-9
        out = outage.exact_outage(np.full(T, gains[m]), p, spec.rcs_model)
        key = (not feasible, out, m)
        if best is None or key < best[0]:
            best = (key, m, feasible, out)
    _, m, feasible, out = best
    sched_w = np.zeros((T, M))
    sched_w[:, m] = 1.0
    sched = SelectionSchedule(sched_w, "binary")
    return _result("fixed_pa", p, sched, sched, out, float(T * rates[m]), feasible,
                   np.full(T, gains[m]), spec.rcs_model, position=m)


def ula_positions(p: SystemParams, center: Vec3 | None = None) -> np.ndarray:
    """Element positions of the M-element lambda/2 ULA along x."""
    c = center or Vec3(5.0, 0.0, p.pa_height)
    M = p.num_positions
    half = p.wavelength / 2.0
    offsets = (np.arange(M) - (M - 1) / 2.0) * half
    pos = np.tile(np.array(c, dtype=float), (M, 1))
    pos[:, 0] += offsets
    return pos


def antenna_selection_channels(p: SystemParams, center: Vec3 | None = None) -> Channels:
    """Channels of the ULA elements.

    The elements are driven from the base-station feed at p_0 through the
    same guided link model as the pinching positions, so they pay the feed
    attenuation of their x offset as well as the free-space loss.
    """
    return Channels.from_params(p, ula_positions(p, center))


def antenna_selection_baseline(p: SystemParams, cfg: SCAConfig | None = None,
                               spec: BaselineSpec | None = None,
                               seed: int = 0) -> OptimizationResult:
    spec = spec or BaselineSpec("antenna_selection")
    ch = antenna_selection_channels(p, spec.center(p))
    res = optimize(p, cfg, seed=seed, channels=ch, rcs_model=spec.rcs_model,
                   scheme="antenna_selection")
    return res


def exhaustive_oracle(p: SystemParams, channels: Channels | None = None,
                      rcs_model: str = "iid", limit: int = ORACLE_LIMIT) -> OptimizationResult:
    """Minimum exact outage over all T-subsets meeting the rate constraint.

    Slot order does not matter for either the outage or the summed rate,
    so subsets are enumerated in lexicographic order and the first minimum
    wins ties.
    """
    prob = Problem.build(p, channels)
    T, M = prob.T, prob.M
    n = math.comb(M, T)
    if n > limit:
        raise ValueError(f"C({M},{T}) = {n} subsets exceeds the oracle limit {limit}; "
                         "reduce num_positions or num_slots")
    gains = prob.position_gains()
    rates = prob.position_rates()
    best = None
    for combo in itertools.combinations(range(M), T):
        idx = list(combo)
        rate = float(rates[idx].sum())
        if rate < p.min_rate - 1e-9:
            continue
        out = outage.exact_outage(gains[idx], p, rcs_model)
        if best is None or out < best[0]:
            best = (out, idx, rate)
    if best is None:
        # no feasible subset: report the highest-rate one, flagged infeasible
        idx = list(np.argsort(-rates, kind="stable")[:T])
        out = outage.exact_outage(gains[idx], p, rcs_model)
        best, feasible = (out, sorted(idx), float(rates[idx].sum())), False
    else:
        feasible = True
    out, idx, rate = best
    sched = SelectionSchedule.from_indices(idx, M)
    return _result("oracle", p, sched, sched, out, rate, feasible, gains[idx], rcs_model,
                   candidates=n)
