"""Network geometry, large-scale fading, pilots, and channel-estimation statistics.

Everything downstream works on noise-normalized quantities: large-scale gains
and transmit powers are divided by the thermal noise power right after
generation, so no explicit noise variance appears in any SINR expression.
Distances are in km, raw powers in watts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

BOLTZMANN_J_PER_K = 1.381e-23
NOISE_TEMPERATURE_K = 290.0


def noise_power_watt(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power B * k_B * T_0 * 10^(NF/10) in watts."""
    return (
        bandwidth_hz
        * BOLTZMANN_J_PER_K
        * NOISE_TEMPERATURE_K
        * 10.0 ** (noise_figure_db / 10.0)
    )


@dataclass(frozen=True)
class SimParams:
    """Scenario parameters for one simulated network."""

    M: int = 150                # access points
    K: int = 20                 # single-antenna users
    L: int = 1                  # antennas per AP
    D: float = 1.0              # side of the square coverage area [km]
    T_c: int = 200              # coherence interval [symbols]
    T_p: int = 20               # uplink training length [symbols]
    zeta_p_watt: float = 0.2    # pilot transmit power [W]
    zeta_u_watt: float = 0.2    # uplink data power cap per user [W]
    sigma_sh_db: float = 8.0    # log-normal shadowing std dev [dB]
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 9.0
    seed: int = 0
    wrap_around: bool = True    # torus distances to suppress border effects
    pl_const_db: float = 140.7  # three-slope path-loss constants
    pl_d0_km: float = 0.01
    pl_d1_km: float = 0.05

    def __post_init__(self) -> None:
        if min(self.M, self.K, self.L) < 1:
            raise ValueError("M, K, L must all be >= 1")
        if not 1 <= self.T_p < self.T_c:
            raise ValueError("need 1 <= T_p < T_c")
        if min(self.zeta_p_watt, self.zeta_u_watt) <= 0.0:
            raise ValueError("transmit powers must be positive")
        if self.D <= 0.0 or self.bandwidth_hz <= 0.0:
            raise ValueError("D and bandwidth must be positive")
        if self.sigma_sh_db < 0.0:
            raise ValueError("shadowing std dev must be >= 0")
        if not 0.0 < self.pl_d0_km < self.pl_d1_km:
            raise ValueError("need 0 < pl_d0_km < pl_d1_km")

    @property
    def noise_power(self) -> float:
        return noise_power_watt(self.bandwidth_hz, self.noise_figure_db)

    @property
    def zeta_p(self) -> float:
        """Pilot power normalized by the noise power."""
        return self.zeta_p_watt / self.noise_power

    @property
    def eta_max(self) -> float:
        """Uplink power cap per user, normalized by the noise power."""
        return self.zeta_u_watt / self.noise_power

    @property
    def se_prefactor(self) -> float:
        """Training overhead factor 1 - T_p/T_c on spectral efficiency."""
        return 1.0 - self.T_p / self.T_c


@dataclass(frozen=True)
class LargeScaleModel:
    """AP/user positions plus the noise-normalized large-scale gain matrix."""

    ap_positions: np.ndarray      # (M, 2) km
    user_positions: np.ndarray    # (K, 2) km
    beta: np.ndarray | None = None  # (M, K), filled by large_scale_fading


@dataclass(frozen=True)
class PilotBook:
    """Pilot assignment and pairwise pilot correlation magnitudes."""

    t_p: int
    assignment: np.ndarray  # (K,) pilot index per user
    gram_abs: np.ndarray    # (K, K) |psi_k^H psi_i|, entries in {0, 1}


@dataclass(frozen=True)
class EstimationStats:
    """Per-link channel estimator statistics (noise-normalized)."""

    gain: np.ndarray      # (M, K) estimator scaling per link
    mean_sq: np.ndarray   # (M, K) mean-square channel estimate, < beta
    zeta_p: float         # normalized pilot power used


def generate_geometry(params: SimParams, rng: np.random.Generator) -> LargeScaleModel:
    """Drop M APs and K users uniformly on the [0, D]^2 square."""
    ap = rng.uniform(0.0, params.D, size=(params.M, 2))
    users = rng.uniform(0.0, params.D, size=(params.K, 2))
    return LargeScaleModel(ap_positions=ap, user_positions=users)


def pairwise_distances(
    ap_positions: np.ndarray,
    user_positions: np.ndarray,
    side_km: float | None = None,
) -> np.ndarray:
    """AP-to-user distances (M, K); torus metric when side_km is given."""
    diff = np.abs(ap_positions[:, None, :] - user_positions[None, :, :])
    if side_km is not None:
        # wrap-around: each axis distance is the shorter way around the torus
        diff = np.minimum(diff, side_km - diff)
    return np.hypot(diff[..., 0], diff[..., 1])


def path_loss_db(
    distance_km: np.ndarray | float,
    const_db: float = 140.7,
    d0_km: float = 0.01,
    d1_km: float = 0.05,
) -> np.ndarray | float:
    """Three-slope path loss in dB (continuous across both breakpoints).

    35 dB/decade beyond d1, 20 dB/decade between d0 and d1, flat below d0.
    """
    d = np.asarray(distance_km, dtype=float)
    # clamp arguments so the unused branches never see log10(0)
    d_mid = np.maximum(d, d0_km)
    d_far = np.maximum(d, d1_km)
    pl_far = -const_db - 35.0 * np.log10(d_far)
    pl_mid = -const_db - 15.0 * np.log10(d1_km) - 20.0 * np.log10(d_mid)
    pl_near = -const_db - 15.0 * np.log10(d1_km) - 20.0 * np.log10(d0_km)
    out = np.where(d > d1_km, pl_far, np.where(d > d0_km, pl_mid, pl_near))
    return float(out) if out.ndim == 0 else out


def large_scale_fading(
    geometry: LargeScaleModel, params: SimParams, rng: np.random.Generator
) -> LargeScaleModel:
    """Attach noise-normalized large-scale gains: path loss x shadowing / noise."""
    dist = pairwise_distances(
        geometry.ap_positions,
        geometry.user_positions,
        side_km=params.D if params.wrap_around else None,
    )
    pl_db = path_loss_db(dist, params.pl_const_db, params.pl_d0_km, params.pl_d1_km)
    shadow = params.sigma_sh_db * rng.standard_normal(size=dist.shape)
    beta_watt = 10.0 ** ((pl_db + shadow) / 10.0)
    return replace(geometry, beta=beta_watt / params.noise_power)


def assign_pilots(K: int, t_p: int, rng: np.random.Generator) -> PilotBook:
    """Orthonormal pilots: distinct when K <= T_p, else uniform random reuse."""
    if K <= t_p:
        assignment = np.arange(K)
    else:
        assignment = rng.integers(0, t_p, size=K)
    gram = (assignment[:, None] == assignment[None, :]).astype(float)
    return PilotBook(t_p=t_p, assignment=assignment, gram_abs=gram)


def estimation_stats(
    beta: np.ndarray, pilots: PilotBook, zeta_p: float, t_p: int
) -> EstimationStats:
    """Per-link estimator gain and mean-square estimate from large-scale gains.

    With pilot energy zt = zeta_p * T_p and contamination sum
    S_mk = sum_i beta_mi |psi_k^H psi_i|^2:

        gain_mk    = sqrt(zt) * beta_mk / (zt * S_mk + 1)
        mean_sq_mk = zt * beta_mk^2 / (zt * S_mk + 1)

    so 0 < mean_sq_mk < beta_mk always.
    """
    if np.any(beta <= 0.0):
        raise ValueError("beta must be strictly positive")
    zt = zeta_p * t_p
    # gram entries are 0/1 so |.|^2 == gram_abs
    denom = zt * (beta @ pilots.gram_abs) + 1.0
    gain = np.sqrt(zt) * beta / denom
    mean_sq = zt * beta**2 / denom
    return EstimationStats(gain=gain, mean_sq=mean_sq, zeta_p=zeta_p)


@dataclass(frozen=True)
class Realization:
    """One drawn network: geometry + fading, pilots, estimation statistics."""

    model: LargeScaleModel
    pilots: PilotBook
    stats: EstimationStats


def realize(params: SimParams, seed: int | None = None) -> Realization:
    """Draw a full network realization with a single seeded generator."""
    rng = np.random.default_rng(params.seed if seed is None else seed)
    geometry = generate_geometry(params, rng)
    model = large_scale_fading(geometry, params, rng)
    pilots = assign_pilots(params.K, params.T_p, rng)
    stats = estimation_stats(model.beta, pilots, params.zeta_p, params.T_p)
    return Realization(model=model, pilots=pilots, stats=stats)


def save_model_csv(model: LargeScaleModel, out_dir: str | Path) -> None:
    """Write positions and the gain matrix as a full-precision CSV bundle."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_matrix(out / "ap_positions.csv", model.ap_positions, ["x_km", "y_km"])
    _write_matrix(out / "user_positions.csv", model.user_positions, ["x_km", "y_km"])
    if model.beta is None:
        raise ValueError("model has no beta matrix to save")
    cols = [f"user_{k}" for k in range(model.beta.shape[1])]
    _write_matrix(out / "beta.csv", model.beta, cols)


def load_model_csv(in_dir: str | Path) -> LargeScaleModel:
    """Round-trip counterpart of save_model_csv."""
    src = Path(in_dir)
    ap = np.loadtxt(src / "ap_positions.csv", delimiter=",", skiprows=1, ndmin=2)
    users = np.loadtxt(src / "user_positions.csv", delimiter=",", skiprows=1, ndmin=2)
    beta = np.loadtxt(src / "beta.csv", delimiter=",", skiprows=1, ndmin=2)
    return LargeScaleModel(ap_positions=ap, user_positions=users, beta=beta)


def _write_matrix(path: Path, mat: np.ndarray, columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in np.atleast_2d(mat):
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
