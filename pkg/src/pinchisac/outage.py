"""Radar outage probability: exact CDF, Chernoff bounds and Monte Carlo.

The accumulated SNR over T slots is a sum of independent exponentials with
rates lambda_t = 1 / (psi_t * Omega_av), i.e. hypoexponential.  Two exact
evaluators are provided: the closed-form sum for distinct rates, and a
phase-type (matrix exponential) form that copes with repeated rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelVector, sensing_gain
from .scenario import SelectionSchedule, SystemParams

DUPLICATE_GAP = 1e-8
CLAMP_TOL = 1e-9
MC_BLOCK = 1 << 16


class AccuracyError(ArithmeticError):
    """A CDF evaluation fell outside [0, 1] by more than rounding allows."""


class DuplicateRatesError(ValueError):
    """The distinct-rate formula was called with (nearly) repeated rates."""


@dataclass(frozen=True)
class RateVector:
    rates: np.ndarray
    has_duplicates: bool

    def __len__(self):
        return self.rates.size


@dataclass
class OutageReport:
    exact_cdf: float
    chernoff_bound: float
    chernoff_s: float
    mc_estimate: float | None = None
    mc_stderr: float | None = None
    used_robust_path: bool = False


def min_relative_gap(rates: Sequence[float]) -> float:
    r = np.sort(np.asarray(rates, dtype=float))
    if r.size < 2:
        return math.inf
    return float(np.min(np.diff(r) / r[1:]))


def slot_gains(s: SelectionSchedule, h_e: ChannelVector, p: SystemParams) -> np.ndarray:
    return np.atleast_1d(sensing_gain(s.weights, h_e, p))


def rates_from_gains(psi: Sequence[float], rcs_mean: float) -> RateVector:
    psi = np.asarray(psi, dtype=float)
    if np.any(psi <= 0.0) or not np.all(np.isfinite(psi)):
        raise ValueError("every slot needs a strictly positive sensing gain")
    lam = 1.0 / (psi * rcs_mean)
    return RateVector(lam, min_relative_gap(lam) < DUPLICATE_GAP)


def rates_from_schedule(s: SelectionSchedule, h_e: ChannelVector, p: SystemParams) -> RateVector:
    return rates_from_gains(slot_gains(s, h_e, p), p.rcs_mean)


def _as_rates(lam) -> np.ndarray:
    lam = np.asarray(lam.rates if isinstance(lam, RateVector) else lam, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("need a non-empty 1-D rate vector")
    if np.any(lam <= 0.0) or not np.all(np.isfinite(lam)):
        raise ValueError("rates must be finite and strictly positive")
    return lam


def _clamp(value: float, slack: float = CLAMP_TOL) -> float:
    if value < -slack or value > 1.0 + slack:
        raise AccuracyError(f"CDF value {value!r} outside [0, 1] beyond {slack:g}")
    return min(1.0, max(0.0, value))


def _distinct_terms(lam: np.ndarray, x: float) -> np.ndarray:
    T = lam.size
    terms = np.empty(T)
    for t in range(T):
        others = np.delete(lam, t)
        # prod_m lam_m / prod_{m != t}(lam_m - lam_t) / lam_t
        coef = np.prod(others / (others - lam[t]))
        terms[t] = coef * math.exp(-lam[t] * x)
    return terms


def hypoexp_cdf_distinct(lam, x: float) -> float:
    """Closed-form hypoexponential CDF; rates must be pairwise distinct."""
    lam = _as_rates(lam)
    if x < 0:
        raise ValueError("x must be >= 0")
    if min_relative_gap(lam) < DUPLICATE_GAP:
        raise DuplicateRatesError(
            "rates are (nearly) repeated; use hypoexp_cdf_robust instead")
    return _clamp(1.0 - float(np.sum(_distinct_terms(lam, x))))


def distinct_error_bound(lam, x: float) -> float:
    """Rough rounding-error bound of the closed form (cancellation size)."""
    lam = _as_rates(lam)
    return float(np.sum(np.abs(_distinct_terms(lam, x)))) * lam.size * np.finfo(float).eps


def phase_type_expm(lam: np.ndarray, x: float) -> np.ndarray:
    """exp(x Q) for the bidiagonal generator Q with an absorbing last state.

    Scaling and squaring with a uniformised Taylor kernel: Q/q + I is
    entrywise nonnegative, so every term of the series and every squaring
    step adds nonnegative numbers and small entries keep full relative
    accuracy (no cancellation).
    """
    T = lam.size
    q = float(lam.max())
    k = max(0, math.ceil(math.log2(max(q * x, 1.0))) + 1)
    tau = q * x / 2.0 ** k  # <= 1/2
    P = np.zeros((T + 1, T + 1))
    idx = np.arange(T)
    P[idx, idx] = 1.0 - lam / q
    P[idx, idx + 1] = lam / q
    P[T, T] = 1.0
    # exp(tau (P - I)) = e^-tau sum_n tau^n P^n / n!
    E = np.eye(T + 1)
    term = np.eye(T + 1)
    for n in range(1, T + 40):
        term = term @ P * (tau / n)
        E += term
        if n > T and term.max() < 1e-18 * E.min(where=E > 0, initial=1.0):
            break
    E *= math.exp(-tau)
    for _ in range(k):
        E = E @ E
    return E


def hypoexp_cdf_robust(lam, x: float) -> float:
    """Hypoexponential CDF via the phase-type representation.

    The sum of exponentials is the absorption time of a chain that moves
    through the phases in order, so F(x) = [exp(x Q)]_{1, T+1} where Q is
    the bidiagonal generator extended with an absorbing state.  Handles
    arbitrary repeated rates.
    """
    lam = _as_rates(lam)
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 0.0
    E = phase_type_expm(lam, x)
    # absorption probability and survival computed separately; use the
    # smaller one to avoid 1 - (1 - eps) style cancellation
    absorbed = float(E[0, -1])
    survive = float(E[0, :-1].sum())
    value = absorbed if absorbed <= 0.5 else 1.0 - survive
    return _clamp(value)


def hypoexp_cdf(lam, x: float) -> tuple[float, bool]:
    """Exact CDF choosing the evaluation path; returns (value, used_robust).

    The closed form is used unless rates nearly coincide or its cancellation
    error would exceed 1e-9 relative to the result.
    """
    lam = _as_rates(lam)
    if min_relative_gap(lam) >= DUPLICATE_GAP:
        terms = _distinct_terms(lam, x)
        value = 1.0 - float(np.sum(terms))
        err = float(np.sum(np.abs(terms))) * lam.size * np.finfo(float).eps
        if err <= 1e-9 * max(abs(value), 1e-300) and -CLAMP_TOL <= value <= 1 + CLAMP_TOL:
            return _clamp(value), False
    return hypoexp_cdf_robust(lam, x), True


def exact_outage(psi: Sequence[float], p: SystemParams, rcs_model: str = "iid") -> float:
    """P(sum_t psi_t |Sigma_t|^2 < Gamma_th) under the chosen RCS model."""
    psi = np.asarray(psi, dtype=float)
    if rcs_model == "correlated":
        lam = 1.0 / (psi.sum() * p.rcs_mean)
        return -math.expm1(-lam * p.snr_threshold)
    if rcs_model != "iid":
        raise ValueError(f"unknown rcs_model {rcs_model!r}")
    rv = rates_from_gains(psi, p.rcs_mean)
    return hypoexp_cdf(rv.rates, p.snr_threshold)[0]


# ---------------------------------------------------------------------------
# Chernoff bounds

def chernoff_log_lower(s: float, psi, rcs_mean: float, threshold: float) -> float:
    """Log of the lower-tail Chernoff bound e^{s G} prod_t E[e^{-s X_t}]."""
    if s < 0:
        raise ValueError("s must be >= 0")
    a = np.asarray(psi, dtype=float) * rcs_mean
    return s * threshold - float(np.sum(np.log1p(s * a)))


def chernoff_log_paper(s: float, psi, rcs_mean: float, threshold: float) -> float:
    """Log-bound built from the upper-tail moment generating function
    E[e^{+sX}]; kept for the paper-mode surrogate.  It is not a valid bound
    on the lower tail.  Requires s * psi_t * Omega < 1."""
    a = np.asarray(psi, dtype=float) * rcs_mean
    if np.any(s * a >= 1.0):
        raise ValueError("s * psi * Omega must stay below 1 for every slot")
    return -s * threshold - float(np.sum(np.log1p(-s * a)))


def _lower_slope(s: float, a: np.ndarray, threshold: float) -> float:
    return threshold - float(np.sum(a / (1.0 + s * a)))


def _bisect_root(fun, lo: float, hi: float, rtol: float = 1e-10) -> float:
    flo = fun(lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


def _golden(fun, lo: float, hi: float, tol: float = 1e-12) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol * max(1.0, abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def optimize_s(psi, rcs_mean: float, threshold: float,
               mode: str = "corrected") -> tuple[float, float]:
    """Chernoff parameter minimising the log-bound; returns (s*, log-bound)."""
    a = np.asarray(psi, dtype=float) * rcs_mean
    if np.any(a <= 0.0):
        raise ValueError("sensing gains must be > 0")
    if mode == "corrected":
        if threshold >= a.sum():
            return 0.0, 0.0
        # slope is increasing in s; root lies below T / threshold
        hi = a.size / threshold
        s = _bisect_root(lambda x: _lower_slope(x, a, threshold), 0.0, hi)
        return s, chernoff_log_lower(s, psi, rcs_mean, threshold)
    if mode == "paper":
        hi = (1.0 - 1e-9) / a.max()
        s = _golden(lambda x: chernoff_log_paper(x, psi, rcs_mean, threshold), 0.0, hi)
        return s, chernoff_log_paper(s, psi, rcs_mean, threshold)
    raise ValueError(f"unknown mode {mode!r}")


def chernoff_bound(psi, p: SystemParams, rcs_model: str = "iid") -> tuple[float, float]:
    """Optimised corrected-mode bound on the outage; returns (bound, s*)."""
    psi = np.asarray(psi, dtype=float)
    if rcs_model == "correlated":
        psi = np.array([psi.sum()])
    s, logb = optimize_s(psi, p.rcs_mean, p.snr_threshold, "corrected")
    return min(1.0, math.exp(logb)), s


# ---------------------------------------------------------------------------
# Monte Carlo

def mc_outage_gains(psi, rcs_mean: float, threshold: float, n_samples: int,
                    seed: int, rcs_model: str = "iid") -> tuple[float, float]:
    """Fraction of RCS draws whose accumulated SNR falls below threshold.

    Samples are generated in fixed-size blocks, each from its own stream
    keyed by (seed, block index), so the estimate does not depend on how
    blocks are distributed over workers.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    psi = np.asarray(psi, dtype=float)
    T = psi.size
    hits = 0
    n_blocks = -(-n_samples // MC_BLOCK)
    for k in range(n_blocks):
        n = min(MC_BLOCK, n_samples - k * MC_BLOCK)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, k])))
        if rcs_model == "iid":
            draws = rng.standard_exponential((n, T)) * rcs_mean
            total = draws @ psi
        elif rcs_model == "correlated":
            total = rng.standard_exponential(n) * rcs_mean * psi.sum()
        else:
            raise ValueError(f"unknown rcs_model {rcs_model!r}")
        hits += int(np.count_nonzero(total < threshold))
    est = hits / n_samples
    return est, math.sqrt(est * (1.0 - est) / n_samples)


def mc_outage(s: SelectionSchedule, h_e: ChannelVector, p: SystemParams,
              n_samples: int, seed: int, rcs_model: str = "iid") -> tuple[float, float]:
    return mc_outage_gains(slot_gains(s, h_e, p), p.rcs_mean, p.snr_threshold,
                           n_samples, seed, rcs_model)


def outage_report(psi, p: SystemParams, rcs_model: str = "iid",
                  mc_samples: int = 0, seed: int = 0) -> OutageReport:
    psi = np.asarray(psi, dtype=float)
    if rcs_model == "iid":
        exact, robust = hypoexp_cdf(rates_from_gains(psi, p.rcs_mean).rates, p.snr_threshold)
    else:
        exact, robust = exact_outage(psi, p, rcs_model), False
    bound, s = chernoff_bound(psi, p, rcs_model)
    rep = OutageReport(exact, bound, s, used_robust_path=robust)
    if mc_samples > 0:
        rep.mc_estimate, rep.mc_stderr = mc_outage_gains(
            psi, p.rcs_mean, p.snr_threshold, mc_samples, seed, rcs_model)
    return rep
