"""Closed-form receive combining via sequential rank-one inverse updates.

The optimal weights for user k solve B_k u = s_kk where B_k is the user's
interference-plus-noise matrix: a strictly positive diagonal plus K-1 weighted
rank-one terms. Starting from the diagonal's inverse, each interferer is
folded in with one rank-one inverse update, so a solve costs O((K-1) M^2)
instead of a fresh O(M^3) factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sinr import SinrTerms


@dataclass
class OpCounter:
    """Counts fused multiply-adds of the dominant rank-one downdates.

    Each applied update touches all M^2 entries of the running inverse once,
    so `ops` advances by M^2 per update; lower-order O(M) work is not counted.
    """

    ops: int = 0

    def add(self, n: int) -> None:
        self.ops += n


def solve_b_system(
    terms: SinrTerms,
    eta: np.ndarray,
    k: int,
    rhs: np.ndarray | None = None,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Solve B_k x = rhs (default rhs: user k's signal vector).

    B_k = sum_{i != k} eta_i s_ki s_ki^T + diag((pow_diag[k]^T eta + noise_diag[k]) / L).
    Interferers with eta_i = 0 or an all-zero coupling vector contribute
    nothing and are skipped. Updates are applied in increasing interferer
    index; the result is order-independent because B_k itself is.
    """
    m = terms.n_aps
    diag_b = (terms.pow_diag[k].T @ eta + terms.noise_diag[k]) / terms.n_ant
    if np.any(diag_b <= 0.0):
        raise ValueError("diagonal of B_k must be strictly positive")
    if rhs is None:
        rhs = terms.coh[k, k]

    active = [
        i
        for i in range(terms.n_users)
        if i != k and eta[i] > 0.0 and np.any(terms.coh[k, i] != 0.0)
    ]
    if not active:
        return rhs / diag_b

    # equilibrate: B = D^1/2 (I + sum eta_i v~ v~^T) D^1/2 with v~ = v / sqrt(D).
    # The scaled system starts at the identity, so the running inverse never
    # inherits the (large) dynamic range of the diagonal.
    root = np.sqrt(diag_b)
    inv = np.eye(m)
    for i in active:
        v = terms.coh[k, i] / root
        w = inv @ v
        denom = 1.0 + eta[i] * (v @ w)
        inv -= (eta[i] / denom) * np.outer(w, w)
        if counter is not None:
            counter.add(m * m)
    return (inv @ (rhs / root)) / root


def optimal_weights(
    terms: SinrTerms, eta: np.ndarray, counter: OpCounter | None = None
) -> np.ndarray:
    """Unit-norm SINR-maximizing combining weights for all users, (M, K)."""
    m, k_users = terms.n_aps, terms.n_users
    weights = np.empty((m, k_users))
    for k in range(k_users):
        x = solve_b_system(terms, eta, k, counter=counter)
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            raise ValueError(f"zero solution for user {k}; signal vector vanished")
        weights[:, k] = x / nrm
    return weights
