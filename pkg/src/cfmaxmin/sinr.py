"""Uplink SINR structure and spectral efficiency for central MRC combining.

The per-user SINR with combining weights u_k is a ratio of quadratic forms in
M-dimensional statistics vectors. The interference matrix for user k is a sum
of K-1 rank-one terms (coherent, pilot-sharing) plus a diagonal (non-coherent
power coupling and estimate mean-square), so we only ever store M-vectors:

    gamma_k = eta_k (u_k . s_kk)^2 /
              ( sum_{i!=k} eta_i (u_k . s_ki)^2
                + (1/L) sum_i eta_i u_k^2 . p_ki + (1/L) u_k^2 . n_k )

with s_ki the rank-one coupling vectors, p_ki the diagonal power coupling, and
n_k the estimate mean-square diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import EstimationStats, PilotBook


class DegenerateBeamError(ValueError):
    """Raised when a combining vector is orthogonal to its own signal vector."""


@dataclass(frozen=True)
class SinrTerms:
    """Frozen per-realization SINR building blocks (all noise-normalized)."""

    coh: np.ndarray         # (K, K, M) rank-one coupling vectors; [k, k] is the signal vector
    pow_diag: np.ndarray    # (K, K, M) diagonal power coupling mean_sq_mk * beta_mi
    noise_diag: np.ndarray  # (K, M) estimate mean-square diagonal
    n_ant: int              # antennas per AP

    @property
    def n_users(self) -> int:
        return self.noise_diag.shape[0]

    @property
    def n_aps(self) -> int:
        return self.noise_diag.shape[1]


@dataclass(frozen=True)
class ReducedCoeffs:
    """SINR collapsed onto K power variables for fixed combining weights.

    1/gamma_k = ( sum_{i!=k} coh[k,i] eta_i + sum_i ncoh[k,i] eta_i
                  + noise[k] ) / eta_k
    """

    coh: np.ndarray    # (K, K) coherent (co-pilot) ratios, zero diagonal
    ncoh: np.ndarray   # (K, K) non-coherent power coupling
    noise: np.ndarray  # (K,)

    @property
    def n_users(self) -> int:
        return self.noise.size


def build_sinr_terms(
    stats: EstimationStats, beta: np.ndarray, pilots: PilotBook, n_ant: int
) -> SinrTerms:
    """Assemble the frozen SINR terms from estimation statistics."""
    if np.any(beta <= 0.0):
        raise ValueError("beta must be strictly positive")
    if n_ant < 1:
        raise ValueError("n_ant must be >= 1")
    ratio = (stats.mean_sq / beta).T                       # (K, M): mean_sq_mk / beta_mk
    coh = pilots.gram_abs[:, :, None] * ratio[:, None, :] * beta.T[None, :, :]
    pow_diag = stats.mean_sq.T[:, None, :] * beta.T[None, :, :]
    return SinrTerms(
        coh=coh, pow_diag=pow_diag, noise_diag=stats.mean_sq.T.copy(), n_ant=n_ant
    )


def _projections(weights: np.ndarray, terms: SinrTerms):
    """Quadratic-form ingredients for every (k, i) pair at the given weights."""
    s = np.einsum("mk,kim->ki", weights, terms.coh)        # u_k . s_ki
    q = np.einsum("mk,kim->ki", weights**2, terms.pow_diag)
    r = np.einsum("mk,km->k", weights**2, terms.noise_diag)
    return s, q, r


def sinr(eta: np.ndarray, weights: np.ndarray, terms: SinrTerms) -> np.ndarray:
    """Per-user SINR for arbitrary powers eta (K,) and weights (M, K)."""
    s, q, r = _projections(weights, terms)
    signal = s.diagonal() ** 2 * eta
    cross = s**2
    cross = cross - np.diag(cross.diagonal())              # exclude the own rank-one term
    denom = cross @ eta + (q @ eta + r) / terms.n_ant
    return signal / denom


def spectral_efficiency(gamma: np.ndarray, t_p: int, t_c: int) -> np.ndarray:
    """SE in bit/s/Hz with the training overhead factor 1 - T_p/T_c."""
    return (1.0 - t_p / t_c) * np.log2(1.0 + gamma)


def reduce_coeffs(
    weights: np.ndarray, terms: SinrTerms, tol: float = 1e-24
) -> ReducedCoeffs:
    """Collapse the SINR onto the K powers for fixed weights.

    Raises DegenerateBeamError when some u_k is (numerically) orthogonal to
    its own signal vector, which would make the reduced form meaningless.
    The check is scale-free: cos^2 of the angle between u_k and the signal
    vector must exceed tol.
    """
    s, q, r = _projections(weights, terms)
    skk2 = s.diagonal() ** 2
    scale = np.einsum("mk,mk->k", weights, weights) * np.einsum(
        "kkm,kkm->k", terms.coh, terms.coh
    )
    bad = (skk2 < tol * scale) | (scale == 0.0)
    if np.any(bad):
        k_bad = int(np.argmax(bad))
        raise DegenerateBeamError(
            f"weights for user {k_bad} are orthogonal to the signal vector"
        )
    coh = s**2 / skk2[:, None]
    coh = coh - np.diag(coh.diagonal())
    ncoh = q / (terms.n_ant * skk2[:, None])
    noise = r / (terms.n_ant * skk2)
    return ReducedCoeffs(coh=coh, ncoh=ncoh, noise=noise)


def gamma_from_coeffs(eta: np.ndarray, coeffs: ReducedCoeffs) -> np.ndarray:
    """SINR from the reduced coefficients; zero-safe (eta_k = 0 gives 0)."""
    denom = (coeffs.coh + coeffs.ncoh) @ eta + coeffs.noise
    return eta / denom
