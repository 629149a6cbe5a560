"""Alternating optimization of precoder and IRS phases for weighted sum-rate."""
from dataclasses import dataclass, field

import numpy as np

from . import abf, pbf
from .errors import NumericFailure
from .objective import (BeamformerState, effective_channels, f2_from_sinr, rate_from_sinr,
                        sinr_vector, theta_from_vec)


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 50
    conv_tol_rel: float = 1e-5
    record_trace: bool = True
    record_chain: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.conv_tol_rel > 0:
            raise ValueError("conv_tol_rel must be > 0")


@dataclass
class SolveTrace:
    """Per-iteration record of one solve.

    ``f1_per_iter[0]`` is the sum-rate of the initial point; entry t is the
    rate after iteration t. ``f2_per_iter[t-1]`` is the surrogate after
    iteration t. ``chain`` holds, per iteration, the surrogate before the
    alpha step and after the alpha, precoder and phase steps.
    """

    f1_per_iter: list = field(default_factory=list)
    f2_per_iter: list = field(default_factory=list)
    chain: list = field(default_factory=list)
    iters_used: int = 0
    converged: bool = False
    final_rate_continuous: float = float("nan")
    final_rate_quantized: float = None
    interior_coords: int = 0


def check_convergence(trace, opts: SolveOptions) -> bool:
    """True when the last surrogate change is within the relative tolerance."""
    f = trace.f2_per_iter if isinstance(trace, SolveTrace) else list(trace)
    if len(f) < 2:
        return False
    return abs(f[-1] - f[-2]) <= opts.conv_tol_rel * abs(f[-1])


def initial_state(channels, p_max, rng) -> BeamformerState:
    """Random continuous phases and equal-power matched-filter precoding."""
    m, g = channels.m, channels.g_irs
    theta = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(m, g), ))
    hh = effective_channels(channels, theta)
    p = hh.conj().T.copy()
    norms = np.linalg.norm(p, axis=0)
    k = channels.k_users
    p[:, norms > 0] /= norms[norms > 0]
    p[:, norms == 0] = 1.0 / np.sqrt(channels.n_bs)
    return BeamformerState(p=p * np.sqrt(p_max / k), theta=theta)


def _f2(channels, theta, p, alpha, omega, noise):
    return f2_from_sinr(sinr_vector(effective_channels(channels, theta), p, noise), alpha, omega)


def run_wsm(config, channels, opts: SolveOptions = None, rng=None, state=None):
    """Run the alternating loop from a feasible start; return ``(state, trace)``."""
    if opts is None:
        opts = SolveOptions(config.max_iters, config.conv_tol_rel)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    noise, omega = config.noise_watts, config.omega
    budget = abf.PowerBudget(config.p_max_watts)
    codebook = pbf.PhaseCodebook.from_config(config.bits)
    m = channels.m
    st = initial_state(channels, config.p_max_watts, rng) if state is None else state.copy()
    trace = SolveTrace()

    hh = effective_channels(channels, st.theta)
    trace.f1_per_iter.append(rate_from_sinr(sinr_vector(hh, st.p, noise), omega))
    for t in range(1, opts.max_iters + 1):
        try:
            gamma = sinr_vector(hh, st.p, noise)
            if opts.record_chain:
                before = f2_from_sinr(gamma, st.alpha, omega)
            st.alpha = gamma
            if opts.record_chain:
                after_alpha = f2_from_sinr(gamma, st.alpha, omega)

            st.beta = abf.update_beta(hh, st.p, st.alpha, omega, noise)
            st.p, st.mu = abf.update_precoder(hh, st.beta, st.alpha, omega, budget)
            if opts.record_chain:
                after_p = _f2(channels, st.theta, st.p, st.alpha, omega, noise)

            v = pbf.reflection_vectors(channels, st.p)
            tv = st.theta_vec
            st.rho = pbf.update_rho(v, tv, st.alpha, omega, noise)
            a, b = pbf.assemble_quadratic(v, st.rho, st.alpha, omega)
            sol = pbf.solve_dual_theta(a, b)
            new = sol.theta
            if sol.interior.size or sol.degenerate:
                trace.interior_coords += int(sol.interior.size)
                new = pbf.unit_modulus_ascent(a, b, sol.theta, tv)
            st.theta, st.zeta = theta_from_vec(new, m), sol.zeta
        except NumericFailure as exc:
            raise NumericFailure(f"iteration {t}: {exc}", residual=exc.residual) from exc

        hh = effective_channels(channels, st.theta)
        gamma = sinr_vector(hh, st.p, noise)
        f2 = f2_from_sinr(gamma, st.alpha, omega)
        if opts.record_chain:
            trace.chain.append((before, after_alpha, after_p, f2))
        trace.f2_per_iter.append(f2)
        trace.f1_per_iter.append(rate_from_sinr(gamma, omega))
        trace.iters_used = t
        if check_convergence(trace, opts):
            trace.converged = True
            break

    trace.final_rate_continuous = rate_from_sinr(
        sinr_vector(effective_channels(channels, st.theta), st.p, noise), omega)
    if not codebook.continuous:
        q = theta_from_vec(pbf.quantize_phases(st.theta_vec, codebook), m)
        trace.final_rate_quantized = rate_from_sinr(
            sinr_vector(effective_channels(channels, q), st.p, noise), omega)
    if not opts.record_trace:
        trace.f1_per_iter, trace.f2_per_iter = trace.f1_per_iter[-1:], trace.f2_per_iter[-1:]
    return st, trace


def quantized_rate(config, channels, state, bits) -> float:
    """Sum-rate after projecting the state's phases onto a ``bits``-bit codebook."""
    q = pbf.quantize_phases(state.theta_vec, pbf.PhaseCodebook.from_config(bits))
    hh = effective_channels(channels, theta_from_vec(q, channels.m))
    return rate_from_sinr(sinr_vector(hh, state.p, config.noise_watts), config.omega)


def run_baseline(config, channels, rng):
    """ZF precoding over random codebook phases; returns ``(state, rate)``."""
    codebook = pbf.PhaseCodebook.from_config(config.bits)
    theta = theta_from_vec(pbf.random_phases(channels.m * channels.g_irs, codebook, rng),
                           channels.m)
    hh = effective_channels(channels, theta)
    p = abf.zf_precoder(hh, abf.PowerBudget(config.p_max_watts))
    rate = rate_from_sinr(sinr_vector(hh, p, config.noise_watts), config.omega)
    return BeamformerState(p=p, theta=theta), rate
