"""Outage minimisation over activation schedules.

The Chernoff log-bound of the outage is minimised over the relaxed
schedule polytope (row sums one, column sums at most one, box [0, 1]) by
majorize-minimize: every iteration solves a convex subproblem built from

* a tangent-plane minorant of each slot's sensing quadratic |h_e^H b|^2
  (corrected mode only; it keeps -log(1 + s Omega psi) convex),
* the first-order expansion of each slot's rate for the rate constraint,
* the tangent majorant of the concave binarisation penalty sum b (1 - b).

A geometric penalty continuation drives the relaxed schedule to a vertex,
and `round_schedule` turns the result into a feasible binary schedule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import outage
from .barrier import solve_barrier
from .channel import Channels, ChannelVector, quad_parts, rate_gradient, sensing_scale
from .scenario import SelectionSchedule, SystemParams

log = logging.getLogger(__name__)

SAFEGUARD = 1e-9
C5_MARGIN = 1e-6


@dataclass(frozen=True)
class SCAConfig:
    sca_tolerance: float = 1e-4
    max_sca_iters: int = 200
    penalty_init: float = 1e-2
    penalty_growth: float = 5.0
    penalty_rounds: int = 10
    binarization_tol: float = 1e-3
    subproblem_kkt_tol: float = 1e-6
    surrogate_mode: str = "corrected"
    s_grid_size: int = 64
    slack_cost: float = 1e6
    # weight of the seeded one-hot component mixed into the uniform start
    init_perturbation: float = 0.1
    # also start from the rounded phase-free relaxation and keep the better run
    warm_start: bool = True
    max_alternations: int = 5

    def __post_init__(self):
        for name in ("sca_tolerance", "penalty_init", "binarization_tol",
                     "subproblem_kkt_tol", "slack_cost"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if self.surrogate_mode not in ("corrected", "paper"):
            raise ValueError(f"unknown surrogate_mode {self.surrogate_mode!r}")
        if self.max_sca_iters < 1 or self.penalty_rounds < 1 or self.s_grid_size < 1:
            raise ValueError("iteration counts must be >= 1")
        if not 0 <= self.init_perturbation < 1:
            raise ValueError("init_perturbation must lie in [0, 1)")


@dataclass
class OptimizationResult:
    schedule: SelectionSchedule
    relaxed_schedule: SelectionSchedule
    s_star: float
    # one nonincreasing trace per inner SCA run
    surrogate_trace: list[list[float]]
    exact_outage: float
    achieved_rate: float
    feasible: bool
    iterations: int
    scheme: str = "proposed"
    rcs_model: str = "iid"
    diagnostics: dict = field(default_factory=dict)

    @property
    def selected_positions(self) -> list[int]:
        return [int(i) for i in self.schedule.selected()]

    @property
    def slot_gains(self) -> np.ndarray:
        return self.diagnostics["slot_gains"]


class SubproblemInfeasible(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# problem data

@dataclass(frozen=True)
class Problem:
    """Constants of one scenario in the form the subproblems need."""

    params: SystemParams
    channels: Channels
    snr_scale: float      # p_t / sigma^2
    sensing_scale: float  # c_psi
    ur: np.ndarray
    ui: np.ndarray
    er: np.ndarray
    ei: np.ndarray

    @classmethod
    def build(cls, p: SystemParams, channels: Channels | None = None) -> "Problem":
        ch = channels or Channels.from_params(p)
        ur, ui = quad_parts(ch.user)
        er, ei = quad_parts(ch.target)
        return cls(p, ch, p.transmit_power / p.noise_power, sensing_scale(p),
                   ur, ui, er, ei)

    @property
    def T(self) -> int:
        return self.params.num_slots

    @property
    def M(self) -> int:
        return self.channels.num_positions

    def target_quad(self, b: np.ndarray) -> np.ndarray:
        b = np.atleast_2d(b)
        return (b @ self.er) ** 2 + (b @ self.ei) ** 2

    def user_quad(self, b: np.ndarray) -> np.ndarray:
        b = np.atleast_2d(b)
        return (b @ self.ur) ** 2 + (b @ self.ui) ** 2

    def slot_gains(self, b: np.ndarray) -> np.ndarray:
        return self.sensing_scale * self.target_quad(b)

    def slot_rates(self, b: np.ndarray) -> np.ndarray:
        return np.log2(1.0 + self.snr_scale * self.user_quad(b))

    def position_gains(self) -> np.ndarray:
        return self.sensing_scale * np.abs(self.channels.target.gains) ** 2

    def position_rates(self) -> np.ndarray:
        return np.log2(1.0 + self.snr_scale * np.abs(self.channels.user.gains) ** 2)


# ---------------------------------------------------------------------------
# linearisations

@dataclass(frozen=True)
class AffinePerSlot:
    """Per-slot affine functions value_t + grad_t . (b_t - b0_t)."""

    value: np.ndarray  # (T,)
    grad: np.ndarray   # (T, M)
    b0: np.ndarray     # (T, M)

    def __call__(self, b: np.ndarray) -> np.ndarray:
        return self.value + np.sum(self.grad * (np.atleast_2d(b) - self.b0), axis=1)

    @property
    def offset(self) -> np.ndarray:
        """Constant term so that f_t(b) = offset_t + grad_t . b_t."""
        return self.value - np.sum(self.grad * self.b0, axis=1)


def _weights(b) -> np.ndarray:
    return np.atleast_2d(np.asarray(b.weights if isinstance(b, SelectionSchedule) else b,
                                    dtype=float))


def linearize_rate(b0, h_u: ChannelVector, p: SystemParams) -> AffinePerSlot:
    w = _weights(b0)
    gamma = p.transmit_power / p.noise_power * np.abs(w @ np.conj(h_u.gains)) ** 2
    return AffinePerSlot(np.log2(1.0 + gamma), np.atleast_2d(rate_gradient(w, h_u, p)), w)


def linearize_sensing_gain(b0, h_e: ChannelVector) -> AffinePerSlot:
    """Tangent minorants of |h_e^H b_t|^2 (convex), one per slot."""
    w = _weights(b0)
    vr, vi = quad_parts(h_e)
    zr, zi = w @ vr, w @ vi
    grad = 2.0 * (zr[:, None] * vr[None, :] + zi[:, None] * vi[None, :])
    return AffinePerSlot(zr ** 2 + zi ** 2, grad, w)


def binarization_penalty(b) -> float:
    w = _weights(b)
    return float(np.sum(w * (1.0 - w)))


def penalty_and_linearization(b0) -> tuple[float, AffinePerSlot]:
    """f(b0) and its tangent f~, which majorises the concave f everywhere.

    The returned affine object has one "slot": f~(b) = f(b0) + sum (1 - 2 b0)(b - b0).
    """
    w = _weights(b0)
    fval = binarization_penalty(w)
    lin = AffinePerSlot(np.array([fval]), (1.0 - 2.0 * w).reshape(1, -1), w.reshape(1, -1))
    return fval, lin


def penalized_bound(prob: Problem, b: np.ndarray, s: float, rho: float, mode: str) -> float:
    """True (non-linearised) penalised log-bound at schedule weights b."""
    p = prob.params
    k = s * p.rcs_mean * prob.sensing_scale
    q = prob.target_quad(b)
    if mode == "corrected":
        val = s * p.snr_threshold - float(np.sum(np.log1p(k * q)))
    else:
        if np.any(k * q >= 1.0):
            return math.inf
        val = -s * p.snr_threshold - float(np.sum(np.log1p(-k * q)))
    return val + rho * binarization_penalty(b)


# ---------------------------------------------------------------------------
# convex subproblem

@dataclass
class SubproblemResult:
    schedule: SelectionSchedule
    objective: float
    slack: float
    kkt_residual: float


def _interior_start(b0: np.ndarray, T: int, M: int, ok) -> np.ndarray:
    U = np.full((T, M), 1.0 / M)
    for theta in (1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0):
        bc = (1.0 - theta) * b0 + theta * U
        if ok(bc):
            return bc
    raise SubproblemInfeasible("no strictly feasible starting point found")


def solve_subproblem(s: float, b0, rho: float, cfg: SCAConfig, prob: Problem) -> SubproblemResult:
    """Minimise the convex surrogate around b0 at fixed Chernoff parameter s.

    The elastic rate slack is only added when b0 does not already leave
    room inside the linearised rate constraint; the slack variable is badly
    scaled and costs the barrier most of its Newton steps.
    """
    if prob.params.min_rate > 0:
        try:
            return _solve_subproblem(s, b0, rho, cfg, prob, use_slack=False)
        except SubproblemInfeasible:
            pass
        return _solve_subproblem(s, b0, rho, cfg, prob, use_slack=True)
    return _solve_subproblem(s, b0, rho, cfg, prob, use_slack=False)


def _solve_subproblem(s, b0, rho, cfg, prob, use_slack):
    p = prob.params
    w0 = _weights(b0)
    T, M = w0.shape
    n_b = T * M
    use_rate = p.min_rate > 0
    n = n_b + (1 if use_slack else 0)
    k = s * p.rcs_mean * prob.sensing_scale
    mode = cfg.surrogate_mode

    fval0, pen = penalty_and_linearization(w0)
    pen_coef = pen.grad.ravel()
    pen_const = float(pen.offset[0])

    # equalities: row sums = 1 (and columns = 1 when every position is needed)
    rows = np.kron(np.eye(T), np.ones((1, M)))
    cols = np.kron(np.ones((1, T)), np.eye(M))
    A_b = np.vstack([rows, cols]) if T == M else rows
    A = np.hstack([A_b, np.zeros((A_b.shape[0], n - n_b))])
    beq = np.ones(A.shape[0])

    # b <= 1 follows from b >= 0 and the row sums, so only the lower box is kept
    G_blocks = [np.hstack([-np.eye(n_b), np.zeros((n_b, n - n_b))])]
    h_blocks = [np.zeros(n_b)]
    if T < M:
        G_blocks.append(np.hstack([cols, np.zeros((M, n - n_b))]))
        h_blocks.append(np.ones(M))
    rate_row = -1
    if use_rate:
        rate_row = sum(hb.size for hb in h_blocks)
        rl = linearize_rate(w0, prob.channels.user, p)
        row = np.concatenate([-rl.grad.ravel(), [-1.0] if use_slack else []])
        G_blocks.append(row[None, :])
        h_blocks.append(np.array([float(np.sum(rl.offset)) - p.min_rate]))
        if use_slack:
            sl_row = np.zeros(n)
            sl_row[-1] = -1.0
            G_blocks.append(sl_row[None, :])
            h_blocks.append(np.zeros(1))

    nonlinear = []
    if mode == "corrected":
        sg = linearize_sensing_gain(w0, prob.channels.target)
        lgrad, loff = sg.grad, sg.offset
        # 1 + k l_t(b) >= SAFEGUARD
        Gs = np.zeros((T, n))
        for t in range(T):
            Gs[t, t * M:(t + 1) * M] = -k * lgrad[t]
        G_blocks.append(Gs)
        h_blocks.append(1.0 - SAFEGUARD + k * loff)

        def objective(x, order=2):
            B = x[:n_b].reshape(T, M)
            arg = 1.0 + k * (loff + np.sum(lgrad * B, axis=1))
            if not np.all(arg > 0):
                return math.inf, None, None
            val = s * p.snr_threshold - float(np.sum(np.log(arg))) \
                + rho * (pen_const + float(pen_coef @ x[:n_b]))
            if use_slack:
                val += cfg.slack_cost * x[-1]
            if order == 0:
                return val, None, None
            g = np.zeros(n)
            g[:n_b] = (-(k / arg)[:, None] * lgrad).ravel() + rho * pen_coef
            H = np.zeros((n, n))
            for t in range(T):
                sl = slice(t * M, (t + 1) * M)
                H[sl, sl] = np.outer(lgrad[t], lgrad[t]) * (k / arg[t]) ** 2
            if use_slack:
                g[-1] = cfg.slack_cost
            return val, g, H
    else:
        er, ei = prob.er, prob.ei
        Q = 2.0 * (np.outer(er, er) + np.outer(ei, ei))

        def quad(x):
            B = x[:n_b].reshape(T, M)
            zr, zi = B @ er, B @ ei
            q = zr ** 2 + zi ** 2
            dq = 2.0 * (zr[:, None] * er[None, :] + zi[:, None] * ei[None, :])
            return q, dq

        def objective(x, order=2):
            q, dq = quad(x)
            arg = 1.0 - k * q
            if not np.all(arg > 0):
                return math.inf, None, None
            val = -s * p.snr_threshold - float(np.sum(np.log(arg))) \
                + rho * (pen_const + float(pen_coef @ x[:n_b]))
            if use_slack:
                val += cfg.slack_cost * x[-1]
            if order == 0:
                return val, None, None
            g = np.zeros(n)
            g[:n_b] = ((k / arg)[:, None] * dq).ravel() + rho * pen_coef
            H = np.zeros((n, n))
            for t in range(T):
                sl = slice(t * M, (t + 1) * M)
                H[sl, sl] = k / arg[t] * Q + np.outer(dq[t], dq[t]) * (k / arg[t]) ** 2
            if use_slack:
                g[-1] = cfg.slack_cost
            return val, g, H

        def c5(t):
            def g(x, order=2):
                z = x[t * M:(t + 1) * M]
                zr, zi = z @ er, z @ ei
                val = k * (zr ** 2 + zi ** 2) - (1.0 - C5_MARGIN)
                if order == 0:
                    return val, None, None
                gg = np.zeros(n)
                gg[t * M:(t + 1) * M] = 2.0 * k * (zr * er + zi * ei)
                HH = np.zeros((n, n))
                HH[t * M:(t + 1) * M, t * M:(t + 1) * M] = k * Q
                return val, gg, HH
            return g

        nonlinear = [c5(t) for t in range(T)]

    G = np.vstack(G_blocks)
    h = np.concatenate(h_blocks)

    # strictly feasible start: slack large enough for the rate row
    def make_x(bc):
        x = np.concatenate([bc.ravel(), np.zeros(n - n_b)])
        if use_slack:
            need = float(G[rate_row, :n_b] @ x[:n_b] - h[rate_row])
            x[-1] = max(0.0, need) + 1.0
        return x

    def ok(bc):
        x = make_x(bc)
        if np.any(G @ x >= h):
            return False
        return all(g(x, 0)[0] < 0 for g in nonlinear)

    bc = _interior_start(w0, T, M, ok)
    res = solve_barrier(objective, make_x(bc), A, beq, G, h, nonlinear,
                        kkt_tol=min(1e-9, cfg.subproblem_kkt_tol))
    if res.kkt_residual > cfg.subproblem_kkt_tol:
        log.debug("subproblem KKT residual %.3g above tolerance", res.kkt_residual)
    B = res.x[:n_b].reshape(T, M)
    B = _clean(B)
    return SubproblemResult(SelectionSchedule(B, "relaxed"), res.value,
                            float(res.x[-1]) if use_slack else 0.0, res.kkt_residual)


def _clean(B: np.ndarray) -> np.ndarray:
    """Clip barrier round-off into the box and renormalise the rows."""
    B = np.clip(B, 0.0, 1.0)
    return B / B.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# SCA loops

@dataclass
class InnerResult:
    schedule: SelectionSchedule
    trace: list[float]
    iterations: int
    converged: bool
    max_kkt: float


def sca_inner(s: float, b_init, rho: float, cfg: SCAConfig, prob: Problem) -> InnerResult:
    b = _weights(b_init)
    mode = cfg.surrogate_mode
    trace = [penalized_bound(prob, b, s, rho, mode)]
    converged = False
    it = 0
    max_kkt = 0.0
    for it in range(1, cfg.max_sca_iters + 1):
        sub = solve_subproblem(s, b, rho, cfg, prob)
        max_kkt = max(max_kkt, sub.kkt_residual)
        b_new = sub.schedule.weights
        trace.append(penalized_bound(prob, b_new, s, rho, mode))
        step = float(np.linalg.norm(b_new - b))
        b = b_new
        if step < cfg.sca_tolerance:
            converged = True
            break
    return InnerResult(SelectionSchedule(b, "relaxed"), trace, it, converged, max_kkt)


def is_binarized(b, tol: float) -> bool:
    w = _weights(b)
    return bool(np.all(np.minimum(w, 1.0 - w) <= tol))


def _update_s(prob: Problem, b: np.ndarray, s_prev: float) -> float:
    p = prob.params
    psi = np.maximum(prob.slot_gains(b), 1e-300)
    s, _ = outage.optimize_s(psi, p.rcs_mean, p.snr_threshold, "corrected")
    # a zero s gives a flat objective; keep steering with the last useful value
    return s if s > 0 else s_prev


def _initial_s(prob: Problem) -> float:
    p = prob.params
    best = np.sort(prob.position_gains())[::-1][:prob.T]
    s, _ = outage.optimize_s(best, p.rcs_mean, p.snr_threshold, "corrected")
    return s if s > 0 else 1.0 / p.snr_threshold


def _run_corrected(prob: Problem, cfg: SCAConfig, b_start: np.ndarray):
    b = b_start
    s = _update_s(prob, b, _initial_s(prob))
    traces, iters, kkt = [], 0, 0.0
    for r in range(cfg.penalty_rounds):
        rho = cfg.penalty_init * cfg.penalty_growth ** r
        for _ in range(cfg.max_alternations):
            inner = sca_inner(s, b, rho, cfg, prob)
            traces.append(inner.trace)
            iters += inner.iterations
            kkt = max(kkt, inner.max_kkt)
            moved = float(np.linalg.norm(inner.schedule.weights - b))
            b = inner.schedule.weights
            s_new = _update_s(prob, b, s)
            s_moved = abs(s_new - s) > 1e-6 * max(s, 1e-300)
            s = s_new
            if moved < cfg.sca_tolerance and not s_moved:
                break
        if is_binarized(b, cfg.binarization_tol):
            break
    return b, s, traces, iters, kkt


def _run_paper(prob: Problem, cfg: SCAConfig, b_start: np.ndarray):
    p = prob.params
    s_max = 1.0 / (p.rcs_mean * prob.position_gains().max())
    G = cfg.s_grid_size
    best = (math.inf, 0.0, b_start)
    traces, iters, kkt = [], 0, 0.0
    for j in range(1, G + 1):
        s = s_max * j / (G + 1)
        b = b_start
        for r in range(cfg.penalty_rounds):
            rho = cfg.penalty_init * cfg.penalty_growth ** r
            inner = sca_inner(s, b, rho, cfg, prob)
            traces.append(inner.trace)
            iters += inner.iterations
            kkt = max(kkt, inner.max_kkt)
            b = inner.schedule.weights
            if is_binarized(b, cfg.binarization_tol):
                break
        F = penalized_bound(prob, b, s, rho, "paper")
        if F < best[0]:
            best = (F, s, b)
    return best[2], best[1], traces, iters, kkt


def round_schedule(b, channels: Channels, p: SystemParams,
                   max_swaps: int = 100) -> tuple[SelectionSchedule, bool]:
    """Greedy assignment of a relaxed schedule to a binary one, then rate
    repair by single-position swaps.  Returns (schedule, C1 satisfied)."""
    w = _weights(b)
    T, M = w.shape
    order = np.argsort(-w, axis=None, kind="stable")
    pick = -np.ones(T, dtype=int)
    used = np.zeros(M, dtype=bool)
    for flat in order:
        t, m = divmod(int(flat), M)
        if pick[t] < 0 and not used[m]:
            pick[t] = m
            used[m] = True
    rate = np.log2(1.0 + p.transmit_power / p.noise_power
                   * np.abs(channels.user.gains) ** 2)
    swaps = 0
    while rate[pick].sum() < p.min_rate - 1e-12 and swaps < max_swaps:
        free = np.flatnonzero(~used)
        if free.size == 0:
            break
        # best single replacement: lowest-rate slot by highest-rate free position
        t = int(np.argmin(rate[pick]))
        m = int(free[np.argmax(rate[free])])
        if rate[m] <= rate[pick[t]]:
            break
        used[pick[t]] = False
        used[m] = True
        pick[t] = m
        swaps += 1
    sched = SelectionSchedule.from_indices(pick, M)
    return sched, bool(rate[pick].sum() >= p.min_rate - 1e-9)


def perturbed_uniform(T: int, M: int, seed: int, weight: float) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cols = rng.permutation(M)[:T]
    P = np.zeros((T, M))
    P[np.arange(T), cols] = 1.0
    return (1.0 - weight) * np.full((T, M), 1.0 / M) + weight * P


def incoherent_start(prob: Problem, cfg: SCAConfig) -> np.ndarray:
    """Binary start from the phase-free relaxation of the problem.

    On binary rows |h^H b|^2 equals sum_m |h_m|^2 b_m, and with that linear
    form both the Chernoff objective and the rate constraint are convex.
    The relaxed optimum is rounded, so the coherent iterations start from
    a vertex.
    """
    p = prob.params
    T, M = prob.T, prob.M
    n_b = T * M
    use_rate = p.min_rate > 0
    n = n_b + (1 if use_rate else 0)
    s = _initial_s(prob)
    k = s * p.rcs_mean * prob.sensing_scale
    we = np.abs(prob.channels.target.gains) ** 2
    wu = prob.snr_scale * np.abs(prob.channels.user.gains) ** 2

    def objective(x, order=2):
        B = x[:n_b].reshape(T, M)
        arg = 1.0 + k * (B @ we)
        if not np.all(arg > 0):
            return math.inf, None, None
        if order == 0:
            val = s * p.snr_threshold - float(np.sum(np.log(arg)))
            return val + (cfg.slack_cost * x[-1] if use_rate else 0.0), None, None
        g = np.zeros(n)
        g[:n_b] = (-(k / arg)[:, None] * we[None, :]).ravel()
        H = np.zeros((n, n))
        for t in range(T):
            sl = slice(t * M, (t + 1) * M)
            H[sl, sl] = np.outer(we, we) * (k / arg[t]) ** 2
        val = s * p.snr_threshold - float(np.sum(np.log(arg)))
        if use_rate:
            val += cfg.slack_cost * x[-1]
            g[-1] = cfg.slack_cost
        return val, g, H

    def rate_con(x, order=2):
        # R_min - sum_t log2(1 + wu . b_t) - slack <= 0 (convex)
        B = x[:n_b].reshape(T, M)
        arg = 1.0 + B @ wu
        ln2 = math.log(2.0)
        if not np.all(arg > 0):
            return math.inf, np.zeros(n), np.zeros((n, n))
        val = p.min_rate - float(np.sum(np.log(arg))) / ln2 - x[-1]
        if order == 0:
            return val, None, None
        g = np.zeros(n)
        g[:n_b] = (-(1.0 / (arg * ln2))[:, None] * wu[None, :]).ravel()
        g[-1] = -1.0
        H = np.zeros((n, n))
        for t in range(T):
            sl = slice(t * M, (t + 1) * M)
            H[sl, sl] = np.outer(wu, wu) / (arg[t] ** 2 * ln2)
        return val, g, H

    rows = np.kron(np.eye(T), np.ones((1, M)))
    cols = np.kron(np.ones((1, T)), np.eye(M))
    A_b = np.vstack([rows, cols]) if T == M else rows
    A = np.hstack([A_b, np.zeros((A_b.shape[0], n - n_b))])
    pad = np.zeros((n_b, n - n_b))
    G_blocks = [np.hstack([-np.eye(n_b), pad])]
    h_blocks = [np.zeros(n_b)]
    if T < M:
        G_blocks.append(np.hstack([cols, np.zeros((M, n - n_b))]))
        h_blocks.append(np.ones(M))
    nonlinear = []
    x0 = np.concatenate([np.full(n_b, 1.0 / M), np.zeros(n - n_b)])
    if use_rate:
        row = np.zeros(n)
        row[-1] = -1.0
        G_blocks.append(row[None, :])
        h_blocks.append(np.zeros(1))
        nonlinear.append(rate_con)
        x0[-1] = max(0.0, rate_con(x0)[0]) + 1.0
    res = solve_barrier(objective, x0, A, np.ones(A.shape[0]), np.vstack(G_blocks),
                        np.concatenate(h_blocks), nonlinear)
    B = _clean(res.x[:n_b].reshape(T, M))
    sched, _ = round_schedule(B, prob.channels, p)
    return sched.weights


def evaluate_binary(prob: Problem, sched: SelectionSchedule, rcs_model: str = "iid"):
    psi = prob.slot_gains(sched.weights)
    return outage.exact_outage(psi, prob.params, rcs_model), float(prob.slot_rates(sched.weights).sum()), psi


def optimize(p: SystemParams, cfg: SCAConfig | None = None, seed: int = 0,
             channels: Channels | None = None, rcs_model: str = "iid",
             scheme: str = "proposed") -> OptimizationResult:
    cfg = cfg or SCAConfig()
    prob = Problem.build(p, channels)
    T, M = prob.T, prob.M
    if T > M:
        raise ValueError("num_slots must not exceed the number of positions")
    starts = [perturbed_uniform(T, M, seed, cfg.init_perturbation)]
    if cfg.warm_start:
        starts.append(incoherent_start(prob, cfg))
    runner = _run_corrected if cfg.surrogate_mode == "corrected" else _run_paper

    best = None
    total_iters = 0
    for idx, b0 in enumerate(starts):
        b, s, traces, iters, kkt = runner(prob, cfg, b0)
        total_iters += iters
        sched, feasible = round_schedule(b, prob.channels, p)
        out, rate, psi = evaluate_binary(prob, sched, rcs_model)
        feasible = feasible and rate >= p.min_rate - 1e-9
        key = (not feasible, out, idx)
        if best is None or key < best[0]:
            best = (key, b, s, traces, kkt, sched, feasible, out, rate, psi, idx)
    _, b, s, traces, kkt, sched, feasible, out, rate, psi, idx = best
    iters = total_iters
    return OptimizationResult(
        schedule=sched, relaxed_schedule=SelectionSchedule(b, "relaxed"), s_star=s,
        surrogate_trace=traces, exact_outage=out, achieved_rate=rate,
        feasible=feasible, iterations=iters, scheme=scheme, rcs_model=rcs_model,
        diagnostics={"slot_gains": psi, "start": idx, "max_kkt": kkt,
                     "surrogate_mode": cfg.surrogate_mode})
