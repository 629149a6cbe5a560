"""Active beamforming: quadratic-transform auxiliaries, closed-form precoder and
the bisection on the power multiplier, plus the zero-forcing baseline.

All functions take the effective channels as a (K, N) array ``hh`` whose row k
is the conjugate-transposed effective channel of user k.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericFailure, RankDeficient, ZFInfeasible

MAX_BISECTION_ITERS = 200
# Relative eigenvalue threshold below which the mu = 0 system counts as singular.
RANK_TOL = 1e-12
MU_FLOOR_REL = 1e-12
# Bound on mu * |power - p_max| relative to p_max.
SLACK_TOL = 1e-6


@dataclass(frozen=True)
class PowerBudget:
    p_max_watts: float
    tolerance_rel: float = 1e-8

    def __post_init__(self):
        if not self.p_max_watts > 0:
            raise ValueError("p_max_watts must be > 0")


def weighted_alpha(alpha, omega):
    """``omega_k (1 + alpha_k)``."""
    return np.asarray(omega) * (1.0 + np.asarray(alpha))


def transmit_power(p) -> float:
    return float(np.sum(np.abs(p) ** 2))


def f4(hh, p, alpha, omega, noise_power) -> float:
    """Multi-ratio objective in the precoder at fixed auxiliaries."""
    g = np.abs(hh @ p) ** 2
    return float(np.sum(weighted_alpha(alpha, omega) * np.diag(g) / (g.sum(axis=1) + noise_power)))


def f5(hh, p, beta, alpha, omega, noise_power) -> float:
    """Quadratic transform of :func:`f4`; concave in ``p`` for fixed ``beta``."""
    g = hh @ p
    ab = weighted_alpha(alpha, omega)
    lin = 2 * np.sqrt(ab) * np.real(np.conj(beta) * np.diag(g))
    quad = np.abs(beta) ** 2 * ((np.abs(g) ** 2).sum(axis=1) + noise_power)
    return float(np.sum(lin - quad))


def update_beta(hh, p, alpha, omega, noise_power) -> np.ndarray:
    g = hh @ p
    denom = (np.abs(g) ** 2).sum(axis=1) + noise_power
    return np.sqrt(weighted_alpha(alpha, omega)) * np.diag(g) / denom


def _system(hh, beta, alpha, omega):
    y = hh.conj().T
    x = (y * np.abs(beta) ** 2) @ y.conj().T
    x = (x + x.conj().T) / 2
    rhs = y * (np.sqrt(weighted_alpha(alpha, omega)) * beta)
    return x, rhs


def _is_singular(x) -> bool:
    ev = np.linalg.eigvalsh(x)
    return ev[-1] <= 0 or ev[0] <= RANK_TOL * ev[-1]


def _solve(mu, x, rhs):
    a = x + mu * np.eye(x.shape[0])
    return scipy.linalg.solve(a, rhs, assume_a="pos")


def precoder_for_mu(mu, hh, beta, alpha, omega) -> np.ndarray:
    """Closed-form maximizer of :func:`f5` over the precoder for multiplier ``mu``.

    Raises RankDeficient when ``mu == 0`` and the beta-weighted channel Gram
    matrix is singular.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    x, rhs = _system(hh, beta, alpha, omega)
    if mu == 0 and _is_singular(x):
        raise RankDeficient("mu = 0 system is rank deficient")
    return _solve(mu, x, rhs)


def update_precoder(hh, beta, alpha, omega, budget: PowerBudget):
    """Optimal precoder and power multiplier under the total power budget.

    Returns ``(p, mu)``. When the unconstrained solution fits the budget,
    ``mu = 0``; otherwise ``mu > 0`` is bisected until the power meets the
    budget to ``budget.tolerance_rel`` and ``mu * |power - p_max|`` is below
    ``SLACK_TOL * p_max``.
    """
    p_max, tol = budget.p_max_watts, budget.tolerance_rel
    x, rhs = _system(hh, beta, alpha, omega)
    n = x.shape[0]
    if not np.any(rhs):
        return np.zeros_like(rhs), 0.0

    # power(mu) from one eigendecomposition; the returned precoder still comes
    # from a linear solve.
    lam, u = np.linalg.eigh(x)
    proj = np.sum(np.abs(u.conj().T @ rhs) ** 2, axis=1)

    def power(mu):
        return float(np.sum(proj / (np.maximum(lam, 0.0) + mu) ** 2))

    if _is_singular(x):
        lo = MU_FLOOR_REL * np.real(np.trace(x)) / n
        if power(lo) <= p_max:
            return _solve(lo, x, rhs), lo
    else:
        p0 = _solve(0.0, x, rhs)
        if transmit_power(p0) <= p_max:
            return p0, 0.0
        lo = 0.0

    # Bracket the root: power(lo) > p_max >= power(hi).
    hi = 1.0
    for _ in range(2100):
        if power(hi) <= p_max:
            break
        lo, hi = hi, 2 * hi
    else:
        raise NumericFailure("could not bracket the power multiplier from above")
    while hi / 2 > lo and power(hi / 2) <= p_max:
        hi /= 2
    lo = max(lo, hi / 2)

    for _ in range(MAX_BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        pw = power(mid)
        gap = abs(pw - p_max)
        if gap <= tol * p_max and mid * gap <= SLACK_TOL * p_max:
            return _solve(mid, x, rhs), mid
        if pw > p_max:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            return _solve(hi, x, rhs), hi
    raise NumericFailure("power-multiplier bisection did not converge",
                         residual=abs(power(hi) - p_max) / p_max)


def zf_precoder(hh, budget: PowerBudget) -> np.ndarray:
    """Zero-forcing precoder with equal per-user power summing to the budget."""
    k, n = hh.shape
    if k > n:
        raise ZFInfeasible(f"zero forcing needs K <= N, got K={k}, N={n}")
    s = np.linalg.svd(hh, compute_uv=False)
    if s.size == 0 or s[0] == 0 or s[-1] <= 1e-10 * s[0]:
        raise ZFInfeasible("effective channel matrix is rank deficient")
    gram = hh @ hh.conj().T
    q = hh.conj().T @ np.linalg.solve(gram, np.eye(k))
    q /= np.linalg.norm(q, axis=0)
    return q * np.sqrt(budget.p_max_watts / k)
