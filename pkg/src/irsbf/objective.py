"""Effective channels, SINR, weighted sum-rate and its Lagrangian-dual surrogate."""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgument

LN2 = np.log(2.0)


@dataclass
class BeamformerState:
    """Joint optimization variables.

    p : (N, K) precoder, column k serves user k.
    theta : (M, G) reflection coefficients, column g belongs to IRS unit g.
    alpha, beta, rho : per-user auxiliaries of the dual and quadratic transforms.
    mu : power multiplier; zeta : (M*G,) unit-modulus multipliers.
    """

    p: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray = None
    beta: np.ndarray = None
    rho: np.ndarray = None
    mu: float = 0.0
    zeta: np.ndarray = None
    feasible: bool = field(default=True)

    def __post_init__(self):
        k = self.p.shape[1]
        if self.alpha is None:
            self.alpha = np.zeros(k)
        if self.beta is None:
            self.beta = np.zeros(k, dtype=complex)
        if self.rho is None:
            self.rho = np.zeros(k, dtype=complex)
        if self.zeta is None:
            self.zeta = np.zeros(self.theta.size)

    @property
    def theta_vec(self) -> np.ndarray:
        """Column-major stacking of ``theta``."""
        return self.theta.reshape(-1, order="F")

    def copy(self, **changes) -> "BeamformerState":
        fields = {k: (v.copy() if isinstance(v, np.ndarray) else v)
                  for k, v in vars(self).items()}
        fields.update(changes)
        return replace(self, **fields)


def theta_from_vec(theta_vec, m: int) -> np.ndarray:
    return np.asarray(theta_vec).reshape((m, -1), order="F")


def effective_channels(channels, theta) -> np.ndarray:
    """Rows are the effective downlink channels seen by each user.

    Row k equals ``sum_g h_{g,k}^H diag(theta_g)^H W_g``, so ``(H @ P)[k, j]``
    is the gain of stream j at user k.
    """
    theta = np.asarray(theta)
    if theta.shape != (channels.m, channels.g_irs):
        raise InvalidArgument(f"theta must be {channels.m}x{channels.g_irs}, got {theta.shape}")
    # conj(h[g,k,m]) conj(theta[m,g]) W[g,m,n]
    return np.einsum("gkm,mg,gmn->kn", channels.h.conj(), theta.conj(), channels.w)


def effective_channel(channels, theta, k: int) -> np.ndarray:
    """Column form of user ``k``'s effective channel."""
    if not 0 <= k < channels.k_users:
        raise InvalidArgument(f"user index {k} out of range")
    return effective_channels(channels, theta)[k].conj()


def sinr_vector(hh, p, noise_power) -> np.ndarray:
    """SINR of every user given effective-channel rows ``hh`` and precoder ``p``."""
    g = np.abs(hh @ p) ** 2
    signal = np.diag(g).copy()
    return signal / (g.sum(axis=1) - signal + noise_power)


def sinr(channels, state, k: int, noise_power: float) -> float:
    if not 0 <= k < channels.k_users:
        raise InvalidArgument(f"user index {k} out of range")
    return float(sinr_vector(effective_channels(channels, state.theta), state.p, noise_power)[k])


def rate_from_sinr(gamma, omega) -> float:
    return float(np.sum(omega * np.log1p(gamma)) / LN2)


def f2_from_sinr(gamma, alpha, omega) -> float:
    terms = omega * np.log1p(alpha) - omega * alpha + omega * (1 + alpha) * gamma / (1 + gamma)
    return float(np.sum(terms) / LN2)


def weighted_sum_rate(channels, state, weights, noise_power: float) -> float:
    """Weighted sum-rate in bits/s/Hz."""
    hh = effective_channels(channels, state.theta)
    return rate_from_sinr(sinr_vector(hh, state.p, noise_power), weights)


def surrogate_f2(channels, state, weights, noise_power: float) -> float:
    """Lagrangian-dual-transform surrogate; equals the sum-rate when alpha = SINR."""
    if np.any(state.alpha < 0):
        raise InvalidArgument("alpha must be non-negative")
    hh = effective_channels(channels, state.theta)
    return f2_from_sinr(sinr_vector(hh, state.p, noise_power), state.alpha, weights)


def update_alpha(channels, state, noise_power: float) -> np.ndarray:
    return sinr_vector(effective_channels(channels, state.theta), state.p, noise_power)
