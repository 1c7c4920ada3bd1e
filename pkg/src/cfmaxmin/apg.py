"""Max-min power control in the log domain via smoothed accelerated projected gradient.

Maximizing the minimum SINR is recast as minimizing f(theta) = max_k f_k(theta)
where f_k is the inverse SINR of user k in log powers theta_i = log eta_i (a
sum of exponentials of affine functions, hence convex and smooth). The max is
smoothed with a soft-max of parameter tau,

    f(theta; tau) = (1/tau) * log( (1/K) * sum_k exp(tau f_k(theta)) ),

which satisfies f - log(K)/tau <= f(.; tau) <= f, and minimized with an
accelerated projected gradient method over the box theta <= theta_max.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sinr import ReducedCoeffs


@dataclass
class PowerState:
    """Log-domain power vector with its componentwise upper bound."""

    theta: np.ndarray   # (K,)
    theta_max: float

    @property
    def eta(self) -> np.ndarray:
        return np.exp(self.theta)


@dataclass
class ApgConfig:
    """Solver knobs. tau = None derives log(max(K, 2)) / eps_smooth."""

    tau: float | None = None
    eps_smooth: float = 1e-2     # smoothing bias log(K)/tau; iterations grow ~sqrt(tau)
    alpha: float = 1.0           # initial (or fixed) step size
    max_iters: int = 20000
    tol: float = 1e-5            # stop when |change in smoothed objective| < tol
    backtracking: bool = True
    shrink: float = 0.5          # backtracking step shrink factor
    adaptive_restart: bool = False
    return_best: bool = True     # return best-true-objective iterate, not the last

    def resolve_tau(self, n_users: int) -> float:
        if self.tau is not None:
            return self.tau
        return math.log(max(n_users, 2)) / self.eps_smooth


@dataclass
class ApgTrace:
    """Per-iteration record of the solve (row 0 is the starting point)."""

    iters: list[int] = field(default_factory=list)
    f_smooth: list[float] = field(default_factory=list)
    f_true: list[float] = field(default_factory=list)
    min_se: list[float] = field(default_factory=list)
    elapsed_s: list[float] = field(default_factory=list)
    n_iters: int = 0
    converged: bool = False

    def append(self, it: int, fs: float, ft: float, mse: float, dt: float) -> None:
        self.iters.append(it)
        self.f_smooth.append(fs)
        self.f_true.append(ft)
        self.min_se.append(mse)
        self.elapsed_s.append(dt)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("iter,f_smooth,f_true,min_se,elapsed_s\n")
            for row in zip(
                self.iters, self.f_smooth, self.f_true, self.min_se, self.elapsed_s
            ):
                fh.write(
                    f"{row[0]},{row[1]:.17g},{row[2]:.17g},"
                    f"{row[3]:.17g},{row[4]:.17g}\n"
                )


def inv_sinr(theta: np.ndarray, coeffs: ReducedCoeffs) -> np.ndarray:
    """All K inverse-SINR values f_k(theta); exponentials of theta differences only."""
    w = coeffs.coh + coeffs.ncoh
    expd = np.exp(theta[None, :] - theta[:, None])
    return (w * expd).sum(axis=1) + coeffs.noise * np.exp(-theta)


def softmax_weights(f_values: np.ndarray, tau: float) -> np.ndarray:
    """Softmax weights of tau * f_k with max-subtraction; sums to 1."""
    x = tau * f_values
    ex = np.exp(x - x.max())
    return ex / ex.sum()


def _smooth_from_values(f_values: np.ndarray, tau: float) -> float:
    x = tau * f_values
    m = x.max()
    return (m + math.log(np.exp(x - m).sum()) - math.log(x.size)) / tau


def smoothed_objective(theta: np.ndarray, coeffs: ReducedCoeffs, tau: float) -> float:
    """Soft-max relaxation of max_k f_k; within log(K)/tau below the true max."""
    return _smooth_from_values(inv_sinr(theta, coeffs), tau)


def gradient(theta: np.ndarray, coeffs: ReducedCoeffs, tau: float) -> np.ndarray:
    """Gradient of the smoothed objective: softmax-weighted sum of grad f_k."""
    _, _, g = _Evaluator(coeffs, tau).eval(theta, need_grad=True)
    return g


def project(x: np.ndarray, theta_max: float) -> np.ndarray:
    """Euclidean projection onto the box theta <= theta_max (componentwise clamp)."""
    return np.minimum(x, theta_max)


def momentum_next(t: float) -> float:
    """Momentum recurrence t_{n+1} = (1 + sqrt(4 t_n^2 + 1)) / 2."""
    return 0.5 * (1.0 + math.sqrt(4.0 * t * t + 1.0))


class _Evaluator:
    """Fused objective/gradient evaluation with the coupling matrix precomputed."""

    def __init__(self, coeffs: ReducedCoeffs, tau: float):
        self.w = coeffs.coh + coeffs.ncoh
        self.noise = coeffs.noise
        self.tau = tau

    def eval(self, theta: np.ndarray, need_grad: bool = False):
        expd = np.exp(theta[None, :] - theta[:, None])
        noise_term = self.noise * np.exp(-theta)
        p = self.w * expd
        f_values = p.sum(axis=1) + noise_term
        x = self.tau * f_values
        m = x.max()
        ex = np.exp(x - m)
        s = float(ex.sum())
        f_smooth = (m + math.log(s) - math.log(x.size)) / self.tau
        if not need_grad:
            return f_values, f_smooth, None
        np.fill_diagonal(p, 0.0)
        row = p.sum(axis=1)
        wts = ex / s
        grad = p.T @ wts - wts * (row + noise_term)
        return f_values, f_smooth, grad


def apg_solve(
    coeffs: ReducedCoeffs,
    state: PowerState,
    config: ApgConfig | None = None,
    se_prefactor: float = 1.0,
    iterate_hook=None,
) -> tuple[PowerState, ApgTrace]:
    """Accelerated projected gradient descent on the smoothed inverse-SINR max.

    Starts from state.theta (must satisfy theta <= theta_max), extrapolates
    with the momentum recurrence, steps with fixed or backtracked step size,
    and stops when the smoothed objective changes by less than config.tol.
    Non-convergence within max_iters is flagged on the returned trace.
    """
    cfg = config or ApgConfig()
    tau = cfg.resolve_tau(coeffs.n_users)
    theta_max = float(state.theta_max)
    theta = np.asarray(state.theta, dtype=float).copy()
    if np.any(theta > theta_max + 1e-9):
        raise ValueError("starting point violates theta <= theta_max")

    ev = _Evaluator(coeffs, tau)
    trace = ApgTrace()
    t0 = time.perf_counter()

    f_vals, f_sm, _ = ev.eval(theta)
    f_tr = float(f_vals.max())
    trace.append(0, f_sm, f_tr, _min_se(f_tr, se_prefactor), 0.0)
    best_f, best_theta = f_tr, theta.copy()

    theta_prev = theta.copy()
    t_prev = t_cur = 1.0
    alpha = cfg.alpha
    f_sm_prev = f_sm
    n_done = 0

    for n in range(1, cfg.max_iters + 1):
        y = theta + ((t_prev - 1.0) / t_cur) * (theta - theta_prev)
        cand, f_cand_vals, f_cand_sm, alpha = _step(ev, y, alpha, theta_max, cfg)

        if cfg.adaptive_restart and f_cand_sm > f_sm_prev:
            # momentum overshoot: restart from the last iterate without extrapolation
            t_prev = t_cur = 1.0
            cand, f_cand_vals, f_cand_sm, alpha = _step(ev, theta, alpha, theta_max, cfg)

        theta_prev, theta = theta, cand
        t_prev, t_cur = t_cur, momentum_next(t_cur)
        f_tr = float(f_cand_vals.max())
        trace.append(
            n, f_cand_sm, f_tr, _min_se(f_tr, se_prefactor), time.perf_counter() - t0
        )
        if iterate_hook is not None:
            iterate_hook(theta)
        if f_tr < best_f:
            best_f, best_theta = f_tr, theta.copy()
        n_done = n
        if abs(f_cand_sm - f_sm_prev) < cfg.tol:
            trace.converged = True
            break
        f_sm_prev = f_cand_sm

    trace.n_iters = n_done
    theta_out = best_theta if cfg.return_best else theta
    return PowerState(theta=theta_out, theta_max=theta_max), trace


def _step(ev: _Evaluator, y: np.ndarray, alpha: float, theta_max: float, cfg: ApgConfig):
    """One projected gradient step from y, backtracking the step size if enabled.

    A step accepted without any shrink grows alpha by 25% (capped at the
    configured value), so a collapse to the worst local curvature seen early
    does not pin the whole run to tiny steps.
    """
    f_y_vals, f_y_sm, g = ev.eval(y, need_grad=True)
    shrunk = False
    while True:
        cand = project(y - alpha * g, theta_max)
        f_c_vals, f_c_sm, _ = ev.eval(cand)
        if not cfg.backtracking:
            return cand, f_c_vals, f_c_sm, alpha
        dx = cand - y
        bound = f_y_sm + g @ dx + (dx @ dx) / (2.0 * alpha)
        if f_c_sm <= bound + 1e-12 * max(1.0, abs(bound)) or alpha < 1e-18:
            if not shrunk:
                alpha = min(alpha * 1.25, cfg.alpha)
            return cand, f_c_vals, f_c_sm, alpha
        alpha *= cfg.shrink
        shrunk = True


def _min_se(f_true: float, se_prefactor: float) -> float:
    """Minimum spectral efficiency implied by the worst inverse SINR."""
    return se_prefactor * math.log2(1.0 + 1.0 / f_true)
