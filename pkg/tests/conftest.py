"""Shared builders and independent reference implementations.

The reference functions here (dense B_k assembly, loop-based SINR) deliberately
share no code with the vectorized library paths so agreement between the two is
meaningful evidence.
"""

import numpy as np
import pytest

from cfmaxmin import (
    ReducedCoeffs,
    SimParams,
    build_sinr_terms,
    realize,
)


def make_instance(
    seed,
    M=30,
    K=6,
    L=1,
    T_p=None,
    zeta_u_watt=0.2,
    zeta_p_watt=0.2,
    sigma_sh_db=8.0,
    D=1.0,
):
    """One end-to-end instance: (params, realization, SinrTerms)."""
    if T_p is None:
        T_p = max(K, 2)  # orthogonal pilots by default
    params = SimParams(
        M=M,
        K=K,
        L=L,
        D=D,
        T_p=T_p,
        zeta_u_watt=zeta_u_watt,
        zeta_p_watt=zeta_p_watt,
        sigma_sh_db=sigma_sh_db,
        seed=seed,
    )
    real = realize(params)
    terms = build_sinr_terms(real.stats, real.model.beta, real.pilots, params.L)
    return params, real, terms


def full_power(params):
    return np.full(params.K, params.eta_max / params.L)


def random_coeffs(rng, K, noise_scale=1.0):
    """Well-conditioned synthetic reduced coefficients for unit-level tests."""
    coh = rng.uniform(0.05, 1.0, size=(K, K))
    np.fill_diagonal(coh, 0.0)
    ncoh = rng.uniform(0.01, 0.5, size=(K, K))
    noise = rng.uniform(0.5, 2.0, size=K) * noise_scale
    return ReducedCoeffs(coh=coh, ncoh=ncoh, noise=noise)


def dense_b_matrix(terms, eta, k):
    """Assemble B_k explicitly: diagonal plus sum of interferer outer products."""
    diag = (terms.pow_diag[k].T @ eta + terms.noise_diag[k]) / terms.n_ant
    b = np.diag(diag)
    for i in range(terms.n_users):
        if i == k:
            continue
        v = terms.coh[k, i]
        b = b + eta[i] * np.outer(v, v)
    return b


def naive_sinr(eta, weights, terms):
    """Loop-based SINR evaluation straight from the quadratic forms."""
    K, M = terms.n_users, terms.n_aps
    out = np.empty(K)
    for k in range(K):
        w = weights[:, k]
        sig = float(w @ terms.coh[k, k])
        num = eta[k] * sig * sig
        inter = 0.0
        for i in range(K):
            if i == k:
                continue
            s = float(w @ terms.coh[k, i])
            inter += eta[i] * s * s
        diag = 0.0
        for m in range(M):
            tot = float(terms.pow_diag[k, :, m] @ eta) + terms.noise_diag[k, m]
            diag += w[m] * w[m] * tot
        out[k] = num / (inter + diag / terms.n_ant)
    return out


def naive_gamma_from_coeffs(eta, coeffs):
    """Loop-based evaluation of the reduced-form SINR."""
    K = coeffs.n_users
    out = np.empty(K)
    for k in range(K):
        den = coeffs.noise[k]
        for i in range(K):
            den += (coeffs.coh[k, i] + coeffs.ncoh[k, i]) * eta[i]
        out[k] = eta[k] / den
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
