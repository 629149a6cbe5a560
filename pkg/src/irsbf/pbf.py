"""Passive beamforming: reflection vectors, the rho update, the quadratic form
in the stacked phase vector, and its unit-modulus-relaxed dual solve.

The stacked phase vector is the column-major vectorization of the (M, G)
phase matrix, so entry ``g*M + m`` belongs to element m of IRS unit g.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg.blas import zgerc

from .abf import weighted_alpha
from .errors import InvalidArgument, NumericFailure

log = logging.getLogger(__name__)

SNAP_TOL = 1e-6
COND_LIMIT = 1e14


@dataclass(frozen=True)
class PhaseCodebook:
    """B-bit uniform phase alphabet; ``bits=None`` means continuous phases."""

    bits: int = None

    def __post_init__(self):
        if self.bits is not None and (int(self.bits) != self.bits or self.bits < 1):
            raise InvalidArgument("bits must be a positive integer or None")

    @classmethod
    def from_config(cls, bits):
        return cls(None if bits == "continuous" else int(bits))

    @property
    def continuous(self) -> bool:
        return self.bits is None

    @property
    def phases(self) -> np.ndarray:
        if self.continuous:
            raise InvalidArgument("continuous codebook has no finite phase set")
        levels = 2 ** self.bits
        return 2 * np.pi * np.arange(levels) / levels


def reflection_vector(channels, p_j, g: int, k: int) -> np.ndarray:
    """``diag(h_{g,k}^H) W_g p_j`` (unit reflection amplitude)."""
    return channels.h[g, k].conj() * (channels.w[g] @ p_j)


def stack(v_parts) -> np.ndarray:
    """Concatenate per-unit vectors in IRS order, matching the phase stacking."""
    v_parts = [np.asarray(v) for v in v_parts]
    if not v_parts:
        raise InvalidArgument("need at least one IRS unit")
    return np.concatenate(v_parts)


def reflection_vectors(channels, p) -> np.ndarray:
    """All stacked reflection vectors as a (K, K, M*G) array indexed [k, j]."""
    wp = np.einsum("gmn,nj->gmj", channels.w, p)
    v = np.einsum("gkm,gmj->kjgm", channels.h.conj(), wp)
    k = channels.k_users
    return v.reshape(k, p.shape[1], -1)


def stream_gains(v, theta_vec) -> np.ndarray:
    """``s[k, j] = theta^H v_{k,j}``, the gain of stream j at user k."""
    return v @ np.conj(theta_vec)


def f7(v, theta_vec, alpha, omega, noise_power) -> float:
    g = np.abs(stream_gains(v, theta_vec)) ** 2
    return float(np.sum(weighted_alpha(alpha, omega) * np.diag(g) / (g.sum(axis=1) + noise_power)))


def f8(v, theta_vec, rho, alpha, omega, noise_power) -> float:
    s = stream_gains(v, theta_vec)
    lin = 2 * np.sqrt(weighted_alpha(alpha, omega)) * np.real(np.conj(rho) * np.diag(s))
    quad = np.abs(rho) ** 2 * ((np.abs(s) ** 2).sum(axis=1) + noise_power)
    return float(np.sum(lin - quad))


def f9(a, b, theta_vec, rho, noise_power) -> float:
    t = np.asarray(theta_vec)
    return float(-np.real(t.conj() @ a @ t) + 2 * np.real(t.conj() @ b)
                 - np.sum(np.abs(rho) ** 2) * noise_power)


def update_rho(v, theta_vec, alpha, omega, noise_power) -> np.ndarray:
    s = stream_gains(v, theta_vec)
    denom = (np.abs(s) ** 2).sum(axis=1) + noise_power
    return np.sqrt(weighted_alpha(alpha, omega)) * np.diag(s) / denom


def assemble_quadratic(v, rho, alpha, omega):
    """Return ``(A, b)`` of the concave quadratic in the stacked phase vector."""
    k = v.shape[0]
    scaled = (v * np.abs(rho)[:, None, None]).reshape(k * v.shape[1], -1)
    a = scaled.T @ scaled.conj()
    a = (a + a.conj().T) / 2
    vkk = v[np.arange(k), np.arange(k)]
    b = (np.sqrt(weighted_alpha(alpha, omega)) * np.conj(rho)) @ vkk
    return a, b


@dataclass
class DualSolution:
    theta: np.ndarray
    zeta: np.ndarray
    sweeps: int = 0
    # True for b = 0 and for relaxed problems whose optimum is not unique.
    degenerate: bool = False
    ridge: float = 0.0
    # Coordinates left strictly inside the unit disk with a zero multiplier.
    interior: np.ndarray = None

    def __iter__(self):
        return iter((self.theta, self.zeta))


def _refresh(a, b, zeta):
    fac = scipy.linalg.cho_factor(a + np.diag(zeta))
    # Fortran order lets the rank-one updates run in place.
    d = np.asfortranarray(scipy.linalg.cho_solve(fac, np.eye(len(zeta), dtype=complex)))
    return d, scipy.linalg.cho_solve(fac, b)


def _dual_value(b, theta, zeta):
    return float(np.real(np.vdot(b, theta)) + zeta.sum())


def solve_dual_theta(a, b, unit_tol=1e-8, tol=1e-10, max_sweeps=500,
                     newton_after=25, max_newton=100) -> DualSolution:
    """Maximize ``-t^H A t + 2 Re(t^H b)`` subject to ``|t_i| <= 1``.

    Cyclic coordinate descent on the dual multipliers: for coordinate i with
    the other multipliers fixed, the minimizing multiplier drives ``|t_i|``
    to one, ``zeta_i <- max(0, zeta_i + (|t_i| - 1) / D_ii)`` with
    ``D = (A + diag(zeta))^-1``; ``D`` and ``t = D b`` are carried by
    rank-one updates and refactored once per sweep. Stops when the KKT gap
    falls below ``tol``, or below ``unit_tol`` once ``t`` or the dual value
    stops moving.

    Ill-conditioned duals make the sweeps crawl; after ``newton_after``
    sweeps, or on a frozen sweep, the multipliers are finished by projected
    Newton steps instead. A Newton run that stalls above the gap tolerance
    marks the solution ``degenerate``: the relaxed optimum is then a flat face
    and the returned point only certifies the dual bound.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = b.shape[0]
    if a.shape != (n, n):
        raise InvalidArgument("A must be square and match b")
    if not np.any(b):
        return DualSolution(np.ones(n, dtype=complex), np.zeros(n), degenerate=True,
                            interior=np.zeros(0, dtype=int))

    ridge = 0.0
    tr = float(np.real(np.trace(a)))
    if tr > 0 and np.linalg.cond(a) > COND_LIMIT:
        ridge = 1e-12 * tr / n
        a = a + ridge * np.eye(n)
    zeta = np.maximum(np.abs(b), 1e-12 * np.max(np.abs(b)))

    d, theta = _refresh(a, b, zeta)
    dual = np.inf
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        start = theta.copy()
        for i in range(n):
            dii = np.real(d[i, i])
            new = max(0.0, zeta[i] + (abs(theta[i]) - 1.0) / dii)
            delta = new - zeta[i]
            if delta == 0.0:
                continue
            col = d[:, i].copy()
            denom = 1.0 + delta * dii
            theta -= (delta * theta[i] / denom) * col
            d = zgerc(-delta / denom, col, col, a=d, overwrite_a=1)
            zeta[i] = new
        d, theta = _refresh(a, b, zeta)
        change = np.max(np.abs(theta - start))
        gap = _kkt_gap(theta, zeta)
        prev, dual = dual, _dual_value(b, theta, zeta)
        if gap < tol or (gap < unit_tol and (change < tol or prev - dual <= 1e-14 * abs(dual))):
            converged = True
            break
        # A frozen sweep with a large gap means D(zeta) is too ill conditioned
        # for coordinate steps to make progress.
        if sweep >= newton_after or change < tol:
            break

    degenerate = False
    if not converged:
        zeta, theta, status, gap = _projected_newton(a, b, zeta, tol, unit_tol, max_newton)
        if status == "maxiter":
            raise NumericFailure(f"dual phase solve did not converge after {sweep} sweeps "
                                 f"and {max_newton} Newton steps", residual=float(gap))
        if status == "stalled":
            # Dual optimal to rounding but the primal readout is not unique:
            # the relaxed optimum has a flat face and zero multipliers.
            degenerate = True
            log.info("relaxed phase solve is degenerate (KKT gap %.3g)", gap)

    mod = np.abs(theta)
    near = np.abs(mod - 1.0) <= SNAP_TOL
    theta[near] /= mod[near]
    over = mod > 1.0 + SNAP_TOL
    theta[over] /= mod[over]
    interior = np.flatnonzero(mod < 1.0 - SNAP_TOL)
    if interior.size:
        log.info("relaxed phase solve left %d of %d coordinates inside the unit disk",
                 interior.size, n)
    return DualSolution(theta, zeta, sweeps=sweep, degenerate=degenerate, ridge=ridge,
                        interior=interior)


def _projected_newton(a, b, zeta, tol, unit_tol, max_iter):
    """Bound-constrained Newton on the dual ``b^H D(zeta) b + sum(zeta)``.

    Gradient ``1 - |t|^2`` and Hessian ``2 Re(conj(t_i) D_ij t_j)``; multipliers
    pinned at zero with a positive gradient are held fixed.
    """
    zeta = zeta.copy()
    d, theta = _refresh(a, b, zeta)
    f = _dual_value(b, theta, zeta)
    gap = _kkt_gap(theta, zeta)
    for _ in range(max_iter):
        grad = 1.0 - np.abs(theta) ** 2
        free = ~((zeta <= 1e-15 * max(zeta.max(), 1.0)) & (grad > 0))
        step = np.zeros_like(zeta)
        if free.any():
            hess = 2.0 * np.real(np.conj(theta)[:, None] * d * theta[None, :])
            hf = hess[np.ix_(free, free)]
            hf = hf + 1e-14 * np.trace(hf) / hf.shape[0] * np.eye(hf.shape[0])
            step[free] = -np.linalg.solve(hf, grad[free])
        s = 1.0
        for _ in range(60):
            trial = np.maximum(zeta + s * step, 0.0)
            d_t, theta_t = _refresh(a, b, trial)
            f_t = _dual_value(b, theta_t, trial)
            if f_t <= f + 1e-4 * grad @ (trial - zeta) or abs(f_t - f) <= 1e-15 * abs(f):
                break
            s *= 0.5
        stalled = abs(f - f_t) <= 1e-15 * abs(f)
        zeta, d, theta, f = trial, d_t, theta_t, f_t
        gap = _kkt_gap(theta, zeta)
        if gap < tol or (stalled and gap < unit_tol):
            return zeta, theta, "converged", gap
        if stalled:
            return zeta, theta, "stalled", gap
    return zeta, theta, ("converged" if gap < unit_tol else "maxiter"), gap


def _kkt_gap(theta, zeta):
    mod = np.abs(theta)
    active = np.abs(mod[zeta > 0] - 1.0)
    return max(active.max(initial=0.0), np.max(mod - 1.0, initial=0.0))


def kkt_residuals(a, b, theta, zeta, ridge=0.0) -> dict:
    """Stationarity backward error, primal/dual feasibility and slackness."""
    a = np.asarray(a) + ridge * np.eye(len(b))
    az = a + np.diag(zeta)
    stat = np.max(np.abs(az @ theta - b))
    # Backward error: D(zeta) is near singular on flat relaxed optima.
    scale = np.linalg.norm(az, np.inf) * np.max(np.abs(theta)) + np.max(np.abs(b))
    mod2 = np.abs(theta) ** 2
    return {
        "stationarity": float(stat / max(scale, 1e-300)),
        "primal": float(np.max(np.sqrt(mod2)) - 1.0),
        "dual": float(np.min(zeta)),
        "slackness": float(np.max(np.abs(zeta * (mod2 - 1.0)))),
    }


def unit_modulus_ascent(a, b, theta, start, sweeps=20) -> np.ndarray:
    """Unit-modulus point whose quadratic objective is at least that of ``start``.

    Used when the relaxed solve leaves coordinates inside the disk. Begins from
    the better of ``start`` and the phase projection of ``theta`` and runs
    element-wise exact maximization on the unit circle, which never decreases
    ``-t^H A t + 2 Re(t^H b)``.
    """
    def obj(t):
        return float(-np.real(t.conj() @ a @ t) + 2 * np.real(t.conj() @ b))

    cand = project_unit(theta)
    t = cand if obj(cand) >= obj(start) else project_unit(start)
    t = t.copy()
    at = a @ t
    diag = np.real(np.diag(a))
    for _ in range(sweeps):
        prev = t.copy()
        for i in range(len(t)):
            c = b[i] - (at[i] - diag[i] * t[i])
            if c == 0:
                continue
            new = c / abs(c)
            at += a[:, i] * (new - t[i])
            t[i] = new
        if np.max(np.abs(t - prev)) < 1e-12:
            break
    return t


def project_unit(theta_vec) -> np.ndarray:
    """Map every coefficient onto the unit circle, keeping its phase."""
    t = np.asarray(theta_vec, dtype=complex)
    mod = np.abs(t)
    out = np.ones_like(t)
    nz = mod > 0
    out[nz] = t[nz] / mod[nz]
    return out


def quantize_phases(theta_vec, codebook: PhaseCodebook) -> np.ndarray:
    """Nearest-phase projection onto the codebook; ties go to the smaller phase."""
    if codebook.continuous:
        return project_unit(theta_vec)
    levels = 2 ** codebook.bits
    phase = np.mod(np.angle(theta_vec), 2 * np.pi)
    idx = np.mod(np.ceil(phase / (2 * np.pi / levels) - 0.5), levels)
    return np.exp(2j * np.pi * idx / levels)


def random_phases(m_tot: int, codebook: PhaseCodebook, rng: np.random.Generator) -> np.ndarray:
    if codebook.continuous:
        return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=m_tot))
    levels = 2 ** codebook.bits
    return np.exp(2j * np.pi * rng.integers(0, levels, size=m_tot) / levels)
