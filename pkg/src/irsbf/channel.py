"""Random synthesis of BS->IRS and IRS->user mmWave channels."""
from dataclasses import dataclass, field

import numpy as np

from .arrays import ArrayGeometry, angle_to_spatial_freq, ula_steering, upa_steering
from .errors import InvalidArgument

# Extra attenuation of every NLoS path relative to the LoS path, dB.
NLOS_EXTRA_LOSS_DB = 10.0
AZIMUTH_RANGE = (-np.pi / 2, np.pi / 2)
ELEVATION_RANGE = (-np.pi / 4, np.pi / 4)


@dataclass(frozen=True)
class PathLossParams:
    rho_a: float = 61.4
    rho_b: float = 2.0
    sigma_xi_db: float = 5.8
    gain_tx_dbi: float = 9.82
    gain_rx_dbi: float = 0.0

    def __post_init__(self):
        if not self.sigma_xi_db >= 0:
            raise InvalidArgument("sigma_xi_db must be >= 0")
        if not self.rho_b > 0:
            raise InvalidArgument("rho_b must be > 0")

    @property
    def g_tx(self) -> float:
        """Linear amplitude gain of the IRS-side element pattern."""
        return 10.0 ** (self.gain_tx_dbi / 20.0)

    @property
    def g_rx(self) -> float:
        return 10.0 ** (self.gain_rx_dbi / 20.0)


@dataclass(frozen=True)
class ScenarioGeometry:
    bs_pos: tuple = (0.0, 0.0)
    irs_pos: tuple = ((40.0, 30.0), (30.0, 40.0))
    user_center: tuple = (40.0, 0.0)
    user_radius: float = 10.0

    def __post_init__(self):
        if not self.user_radius > 0:
            raise InvalidArgument("user_radius must be > 0")
        if len(self.irs_pos) == 0:
            raise InvalidArgument("at least one IRS position is required")
        for p in self.irs_pos:
            if distance(self.bs_pos, p) <= 0:
                raise InvalidArgument(f"IRS at {p} coincides with the BS")
            # The closest user sits at the disk edge nearest to the IRS.
            if distance(self.user_center, p) <= self.user_radius:
                raise InvalidArgument(f"IRS at {p} lies inside the user disk")


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization.

    ``w[g]`` is the M x N BS->IRS matrix of unit ``g`` and ``h[g, k]`` the
    length-M IRS->user vector of user ``k``.
    """

    w: np.ndarray
    h: np.ndarray
    user_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def g_irs(self) -> int:
        return self.w.shape[0]

    @property
    def m(self) -> int:
        return self.w.shape[1]

    @property
    def n_bs(self) -> int:
        return self.w.shape[2]

    @property
    def k_users(self) -> int:
        return self.h.shape[1]


def distance(a, b) -> float:
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def path_loss_db(r_m: float, params: PathLossParams, xi_db: float = 0.0) -> float:
    """Log-distance path loss ``rho_a + 10 rho_b log10(r) + xi`` in dB."""
    if not r_m > 0:
        raise InvalidArgument(f"distance must be > 0, got {r_m}")
    return params.rho_a + 10.0 * params.rho_b * np.log10(r_m) + xi_db


def sample_path_gain(pl_db: float, rng: np.random.Generator) -> complex:
    """Draw a CN(0, 10^(-pl_db/10)) complex gain."""
    std = np.sqrt(10.0 ** (-0.1 * pl_db) / 2.0)
    re, im = rng.normal(0.0, 1.0, size=2)
    return complex(std * re, std * im)


def _draw_angle(rng, bounds):
    return angle_to_spatial_freq(rng.uniform(*bounds))


def synth_bs_irs_channel(r_m, arrays: ArrayGeometry, params: PathLossParams,
                         n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Sparse BS->IRS channel for a link of length ``r_m`` meters.

    Sum of ``n_paths + 1`` rank-one terms ``nu_l a_I(az, el) a_B(phi)^H``; the
    first term is LoS, the rest are NLoS paths 10 dB weaker. Shadowing is drawn
    once for the link.
    """
    if n_paths < 0:
        raise InvalidArgument("n_paths must be >= 0")
    xi = rng.normal(0.0, params.sigma_xi_db) if params.sigma_xi_db > 0 else 0.0
    pl = path_loss_db(r_m, params, xi)
    w = np.zeros((arrays.m, arrays.n_bs), dtype=complex)
    for ell in range(n_paths + 1):
        gain = sample_path_gain(pl + (NLOS_EXTRA_LOSS_DB if ell else 0.0), rng)
        phi_b = _draw_angle(rng, AZIMUTH_RANGE)
        phi_i = _draw_angle(rng, AZIMUTH_RANGE)
        theta_i = _draw_angle(rng, ELEVATION_RANGE)
        a_b = ula_steering(phi_b, arrays.n_bs)
        a_i = upa_steering(phi_i, theta_i, arrays.m_az, arrays.m_el)
        w += gain * np.outer(a_i, a_b.conj())
    return w


def synth_irs_user_channel(r_m, arrays: ArrayGeometry, params: PathLossParams,
                           rng: np.random.Generator) -> np.ndarray:
    """Pure-LoS IRS->user channel ``sqrt(M) nu g_r g_t a_t``."""
    xi = rng.normal(0.0, params.sigma_xi_db) if params.sigma_xi_db > 0 else 0.0
    gain = sample_path_gain(path_loss_db(r_m, params, xi), rng)
    a_t = upa_steering(_draw_angle(rng, AZIMUTH_RANGE), _draw_angle(rng, ELEVATION_RANGE),
                       arrays.m_az, arrays.m_el)
    return np.sqrt(arrays.m) * gain * params.g_rx * params.g_tx * a_t


def draw_users(geom: ScenarioGeometry, k: int, rng: np.random.Generator) -> np.ndarray:
    """Area-uniform user positions in the service disk, shape (k, 2)."""
    r = geom.user_radius * np.sqrt(rng.uniform(size=k))
    ang = rng.uniform(0.0, 2 * np.pi, size=k)
    c = np.asarray(geom.user_center, dtype=float)
    return c + np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def synth_scenario(config, rng: np.random.Generator) -> ChannelSet:
    """Draw one channel realization.

    BS-IRS links are drawn first, then each user's position and links in
    turn, so user k's channel does not depend on how many users follow it.
    Sweeps over the user count thus compare nested user sets.
    """
    arrays = config.arrays
    geom, params = config.geometry, config.pathloss
    w = np.stack([
        synth_bs_irs_channel(distance(geom.bs_pos, p), arrays, params, config.n_paths, rng)
        for p in geom.irs_pos
    ])
    users = np.zeros((config.k_users, 2))
    h = np.zeros((arrays.g_irs, config.k_users, arrays.m), dtype=complex)
    for k in range(config.k_users):
        users[k] = draw_users(geom, 1, rng)[0]
        for g, p in enumerate(geom.irs_pos):
            h[g, k] = synth_irs_user_channel(distance(p, users[k]), arrays, params, rng)
    return ChannelSet(w=w, h=h, user_pos=users)
