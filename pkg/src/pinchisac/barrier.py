"""Small dense log-barrier interior-point solver.

Solves

    minimize f(x)  s.t.  A x = beq,  G x <= h,  g_j(x) <= 0

for smooth convex f and g_j, starting from a strictly feasible x0 that
satisfies the equalities.  Each centering step is an equality-constrained
Newton method on f + mu * phi; mu shrinks geometrically until the duality
gap (number of inequalities) * mu is below `gap_tol`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import nnls

# f(x, order) -> (value, gradient, Hessian); with order=0 only the value is
# needed and the others may be None.  value is +inf outside the domain.
Oracle = Callable[..., tuple]


class InfeasibleStart(ValueError):
    pass


@dataclass
class BarrierResult:
    x: np.ndarray
    value: float
    lam_linear: np.ndarray
    lam_nonlinear: np.ndarray
    nu: np.ndarray
    kkt_residual: float
    gap: float
    newton_steps: int
    history: list = field(default_factory=list)


def _independent_rows(A: np.ndarray, tol: float = 1e-10):
    _, r = np.linalg.qr(A.T)
    keep = np.abs(np.diag(r)) > tol * max(1.0, np.abs(r).max())
    return A[keep], keep


def solve_barrier(f: Oracle, x0: np.ndarray,
                  A: np.ndarray | None = None, beq: np.ndarray | None = None,
                  G: np.ndarray | None = None, h: np.ndarray | None = None,
                  nonlinear: Sequence[Oracle] = (),
                  mu0: float = 10.0, mu_factor: float = 0.1, gap_tol: float = 1e-8,
                  alpha: float = 0.25, beta: float = 0.5,
                  newton_tol: float = 1e-8, kkt_tol: float = 1e-9,
                  max_newton: int = 200) -> BarrierResult:
    x = np.array(x0, dtype=float)
    n = x.size
    A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float)
    beq = np.zeros(0) if beq is None else np.asarray(beq, dtype=float)
    G = np.zeros((0, n)) if G is None else np.asarray(G, dtype=float)
    h = np.zeros(0) if h is None else np.asarray(h, dtype=float)
    nonlinear = list(nonlinear)
    if A.shape[0]:
        A_red, keep = _independent_rows(A)
        b_red = beq[keep]
    else:
        A_red, b_red = A, beq
    p = A_red.shape[0]
    m = G.shape[0] + len(nonlinear)

    def slacks(z):
        lin = h - G @ z
        nl = np.array([g(z, 0)[0] for g in nonlinear]) if nonlinear else np.zeros(0)
        return lin, -nl

    lin, nls = slacks(x)
    if np.any(lin <= 0) or np.any(nls <= 0):
        raise InfeasibleStart("starting point is not strictly feasible")
    if p and np.max(np.abs(A_red @ x - b_red)) > 1e-8:
        raise InfeasibleStart("starting point violates the equality constraints")

    def phi_value(z):
        lin, nls = slacks(z)
        if not (np.all(lin > 0) and np.all(nls > 0)):
            return np.inf
        return -np.sum(np.log(lin)) - np.sum(np.log(nls))

    def merit(z, mu):
        pv = phi_value(z)
        if not np.isfinite(pv):
            return np.inf
        fv = f(z, 0)[0]
        return fv + mu * pv if np.isfinite(fv) else np.inf

    def trial_ok(value, bound):
        return np.isfinite(value) and value <= bound

    def kkt_point(z, mu):
        """KKT residual with multiplier estimates at z.

        The central-path estimate mu / slack inherits the rounding error of
        slacks such as 1 - sum(z) near active constraints, so the multipliers
        of nearly active constraints are also refitted (nonnegative least
        squares, equality multipliers free) and the better certificate is
        kept.  Returns (residual, stationarity part, multipliers...), the
        residual being the largest of stationarity, complementarity and
        equality infeasibility.
        """
        _, fg, _ = f(z, 1)
        lin, nls = slacks(z)
        grads = [G] if G.shape[0] else []
        grads += [gfun(z, 1)[1][None, :] for gfun in nonlinear]
        J = np.vstack(grads) if grads else np.zeros((0, n))
        sl = np.concatenate([lin, nls])
        eq = float(np.max(np.abs(A_red @ z - b_red))) if p else 0.0

        def measure(lam, nu_):
            r = fg + J.T @ lam + A_red.T @ nu_
            stat = max(float(np.max(np.abs(r), initial=0.0)), eq)
            comp = float(np.max(np.abs(lam * sl), initial=0.0))
            return max(stat, comp), stat

        lam = mu / sl if m else np.zeros(0)
        r0 = fg + J.T @ lam
        nu_ = np.linalg.lstsq(A_red.T, -r0, rcond=None)[0] if p else np.zeros(0)
        best = (*measure(lam, nu_), lam, nu_)
        scale = np.maximum(1.0, np.abs(np.concatenate([h, np.zeros(nls.size)])))
        near = sl <= 1e-6 * scale
        if near.any():
            r_far = fg + J[~near].T @ lam[~near]
            k = int(near.sum())
            fit = np.hstack([J[near].T, A_red.T, -A_red.T])
            coef = nnls(fit, -r_far, maxiter=50 * fit.shape[1])[0]
            lam2 = lam.copy()
            lam2[near] = coef[:k]
            nu2 = coef[k:k + p] - coef[k + p:]
            cand = measure(lam2, nu2)
            if cand[0] < best[0]:
                best = (*cand, lam2, nu2)
        res, stat, lam, nu_ = best
        return res, stat, lam[:G.shape[0]], lam[G.shape[0]:], nu_

    mu = mu0 if m else 0.0
    steps = 0
    history = []
    nu = np.zeros(p)
    while True:
        final = m == 0 or m * mu <= gap_tol
        # centering; the last stage also drives the KKT residual below
        # kkt_tol since the decrement alone under-resolves tiny slacks
        stage_steps = stage_evals = stalls = 0
        best_res = np.inf
        for _ in range(max_newton):
            fv, fg, fH = f(x, 2)
            lin, nls = slacks(x)
            grad = fg.copy()
            H = fH.copy()
            if G.shape[0]:
                inv = 1.0 / lin
                grad += mu * (G.T @ inv)
                Gs = G * inv[:, None]
                H += mu * (Gs.T @ Gs)
            for gfun, sl in zip(nonlinear, nls):
                _, gg, gH = gfun(x, 2)
                grad += mu * gg / sl
                H += mu * (np.outer(gg, gg) / sl ** 2 + gH / sl)
            if p:
                K = np.zeros((n + p, n + p))
                K[:n, :n] = H
                K[:n, n:] = A_red.T
                K[n:, :n] = A_red
                rhs = np.concatenate([-grad, np.zeros(p)])
                try:
                    sol = np.linalg.solve(K, rhs)
                except np.linalg.LinAlgError:
                    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
                dx, nu = sol[:n], sol[n:]
            else:
                try:
                    dx = np.linalg.solve(H, -grad)
                except np.linalg.LinAlgError:
                    dx = np.linalg.lstsq(H, -grad, rcond=None)[0]
            dec2 = float(-grad @ dx)
            if dec2 / 2.0 <= newton_tol:
                if not final:
                    break
                # complementarity sits at mu by construction; judge the rest
                res = kkt_point(x, mu)[1]
                if res <= kkt_tol:
                    break
                # rounding floor reached: the residual no longer improves
                stalls = stalls + 1 if res > 0.5 * best_res else 0
                best_res = min(best_res, res)
                if stalls >= 3:
                    break
            # backtracking; infeasible trial points have infinite merit
            t = 1.0
            cur = fv + mu * phi_value(x)
            while t > 1e-20:
                trial = merit(x + t * dx, mu)
                stage_evals += 1
                if trial_ok(trial, cur + alpha * t * float(grad @ dx)):
                    break
                t *= beta
            else:
                break
            if t * np.max(np.abs(dx), initial=0.0) == 0.0:
                break
            x = x + t * dx
            steps += 1
            stage_steps += 1
        history.append((mu, f(x, 0)[0], stage_steps, stage_evals))
        if final:
            break
        mu *= mu_factor

    fv = f(x, 0)[0]
    kkt, _, lam_lin, lam_nl, nu = kkt_point(x, mu)
    return BarrierResult(x, float(fv), lam_lin, lam_nl, nu, kkt, m * mu, steps, history)
