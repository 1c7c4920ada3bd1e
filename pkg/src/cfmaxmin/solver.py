"""Alternating optimization of combining weights and transmit powers.

Each outer iteration recomputes the closed-form optimal weights at the current
powers, collapses the SINR onto the K power variables, and re-solves the
max-min power problem (smoothed APG, warm-started, or the bisection oracle).
Weight updates can only raise every user's SINR and the power step never
accepts a worse point, so the min-SE sequence is non-decreasing; the loop
stops when it improves by less than outer_tol. Power sub-solves run at a
tolerance at most outer_tol / 100 so their own stopping error stays below
the outer test; the smoothed solver runs at moderate smoothing while outer
steps are coarse and at the accuracy smoothing (bias 1e-3) near and after
convergence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .apg import ApgConfig, PowerState, apg_solve, inv_sinr
from .oracle import bisection_solve
from .receiver import optimal_weights
from .sinr import SinrTerms, reduce_coeffs, sinr, spectral_efficiency


@dataclass
class SolveConfig:
    outer_tol: float = 1e-5
    outer_max_iters: int = 50
    power_solver: str = "apg"      # "apg" | "oracle"
    apg: ApgConfig = field(default_factory=ApgConfig)
    oracle_tol_t: float = 1e-6

    def __post_init__(self) -> None:
        if self.power_solver not in ("apg", "oracle"):
            raise ValueError(f"unknown power solver: {self.power_solver!r}")


@dataclass
class SolveResult:
    min_se: float
    se_per_user: np.ndarray
    eta_star: np.ndarray
    weights_star: np.ndarray
    outer_iters: int
    total_power_iters: int
    wall_time_s: float
    converged: bool
    history: list[dict] = field(default_factory=list)


def alternating_solve(
    terms: SinrTerms,
    eta_max: float,
    config: SolveConfig | None = None,
    t_p: int | None = None,
    t_c: int | None = None,
) -> SolveResult:
    """Run the weight/power block updates from full power until min-SE settles.

    eta_max is the per-user (pre-antenna-split) cap; the box bound used is
    eta_max / L. t_p/t_c set the SE overhead factor (defaults 20/200).
    """
    cfg = config or SolveConfig()
    t_p = 20 if t_p is None else t_p
    t_c = 200 if t_c is None else t_c
    prefactor = 1.0 - t_p / t_c

    # The power step must out-resolve the outer progress test, else inner
    # truncation error masquerades as outer progress and the loop crawls to
    # the cap in ~outer_tol-sized increments. Two decades of headroom is
    # cheap (the smoothed objective is strongly curved near its floor).
    apg_cfg = cfg.apg
    inner_tol = 0.01 * cfg.outer_tol
    if inner_tol > 0.0 and apg_cfg.tol > inner_tol:
        apg_cfg = replace(apg_cfg, tol=inner_tol)

    # Smoothing schedule: moderate smoothing while the outer steps are coarse
    # (those solutions are discarded by the next weight update anyway), then
    # the accuracy smoothing once progress falls within a decade of the
    # stopping rule, so the rule measures converged power steps rather than
    # the drift of the smoothing bias under weight updates.
    scheduled = cfg.power_solver == "apg" and cfg.apg.tau is None
    apg_tight = (
        replace(apg_cfg, eps_smooth=min(apg_cfg.eps_smooth, 1e-3))
        if scheduled
        else apg_cfg
    )
    tight = False

    cap = eta_max / terms.n_ant
    theta_max = float(np.log(cap))
    theta = np.full(terms.n_users, theta_max)  # start from full power

    t0 = time.perf_counter()
    history: list[dict] = []
    weights = None
    total_inner = 0
    converged = False
    outer = 0
    min_se_prev = None

    for outer in range(1, cfg.outer_max_iters + 1):
        weights = optimal_weights(terms, np.exp(theta))
        coeffs = reduce_coeffs(weights, terms)

        f_now = inv_sinr(theta, coeffs)
        mse_now = _min_se(f_now, prefactor)
        if min_se_prev is None:
            min_se_prev = mse_now  # baseline: after the first weight update

        if cfg.power_solver == "apg":
            state, trace = apg_solve(
                coeffs,
                PowerState(theta, theta_max),
                apg_tight if tight else apg_cfg,
                se_prefactor=prefactor,
            )
            theta_new = state.theta
            total_inner += trace.n_iters
        else:
            res = bisection_solve(coeffs, cap, tol_t=cfg.oracle_tol_t)
            # guard the log against an (unreachable in valid instances) zero power
            eta_new = np.maximum(res.eta_star, cap * 1e-300)
            theta_new = np.log(eta_new)
            total_inner += res.feasibility_iters_total

        f_new = inv_sinr(theta_new, coeffs)
        mse_new = _min_se(f_new, prefactor)
        if mse_new < mse_now:
            # power step may not regress the incumbent (solver tolerance noise)
            theta_new, f_new, mse_new = theta, f_now, mse_now

        gamma = 1.0 / f_new
        history.append(
            {
                "outer_iter": outer,
                "min_se": mse_new,
                "min_sinr": float(gamma.min()),
                "max_inv_sinr": float(f_new.max()),
            }
        )
        theta = theta_new
        if abs(mse_new - min_se_prev) < cfg.outer_tol:
            converged = True
            break
        if scheduled and not tight and abs(mse_new - min_se_prev) < 10.0 * cfg.outer_tol:
            tight = True
        min_se_prev = mse_new

    if scheduled and weights is not None:
        # refine the last power step at the accuracy smoothing, warm-started,
        # before the final SE evaluation (a no-op when the schedule already
        # switched; cheap otherwise)
        state, tr = apg_solve(
            coeffs, PowerState(theta, theta_max), apg_tight, se_prefactor=prefactor
        )
        total_inner += tr.n_iters
        if _min_se(inv_sinr(state.theta, coeffs), prefactor) > _min_se(
            inv_sinr(theta, coeffs), prefactor
        ):
            theta = state.theta

    eta_star = np.exp(theta)
    gamma = sinr(eta_star, weights, terms)
    se = spectral_efficiency(gamma, t_p, t_c)
    return SolveResult(
        min_se=float(se.min()),
        se_per_user=se,
        eta_star=eta_star,
        weights_star=weights,
        outer_iters=outer,
        total_power_iters=total_inner,
        wall_time_s=time.perf_counter() - t0,
        converged=converged,
        history=history,
    )


def _min_se(f_values: np.ndarray, prefactor: float) -> float:
    return float(prefactor * np.log2(1.0 + 1.0 / f_values.max()))
