"""Quick oracle and invariant battery behind ``irsbf selftest``."""
import numpy as np

from . import abf, pbf
from .arrays import ula_steering, upa_steering
from .channel import ChannelSet, synth_scenario
from .config import SystemConfig
from .engine import SolveOptions, run_wsm
from .objective import (effective_channels, f2_from_sinr, rate_from_sinr, sinr_vector,
                        theta_from_vec)


def crandn(rng, *shape):
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)


def random_channels(rng, n=4, g=2, m=3, k=2, scale=1.0) -> ChannelSet:
    """Unstructured Gaussian channels for algebraic checks."""
    return ChannelSet(w=scale * crandn(rng, g, m, n), h=crandn(rng, g, k, m))


def random_phases_matrix(rng, m, g):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, size=(m, g)))


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def run_selftest(seed=0, verbose=True) -> bool:
    rng = np.random.default_rng(seed)
    results = []

    def check(name, ok):
        results.append(ok)
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")

    v = ula_steering(0.3, 32)
    u = upa_steering(0.4, 0.7, 10, 2)
    check("steering vectors are unit norm", abs(np.linalg.norm(v) - 1) < 1e-12
          and abs(np.linalg.norm(u) - 1) < 1e-12)
    check("planar steering is a Kronecker product",
          np.allclose(u, np.kron(ula_steering(0.4, 10), ula_steering(0.7, 2)), atol=1e-14))

    ch = random_channels(rng, n=6, g=2, m=4, k=3)
    omega = rng.uniform(0.5, 2.0, size=3)
    noise = 0.1
    worst = 0.0
    for _ in range(50):
        theta = random_phases_matrix(rng, 4, 2)
        p = crandn(rng, 6, 3)
        gamma = sinr_vector(effective_channels(ch, theta), p, noise)
        worst = max(worst, _rel(f2_from_sinr(gamma, gamma, omega), rate_from_sinr(gamma, omega)))
    check(f"dual-transform tightness (worst rel err {worst:.1e})", worst <= 1e-10)

    theta = random_phases_matrix(rng, 4, 2)
    hh = effective_channels(ch, theta)
    p = crandn(rng, 6, 3)
    alpha = rng.uniform(0, 2, size=3)
    beta = abf.update_beta(hh, p, alpha, omega, noise)
    check("precoder quadratic-transform tightness",
          _rel(abf.f5(hh, p, beta, alpha, omega, noise), abf.f4(hh, p, alpha, omega, noise))
          <= 1e-10)
    vv = pbf.reflection_vectors(ch, p)
    tv = theta.reshape(-1, order="F")
    rho = pbf.update_rho(vv, tv, alpha, omega, noise)
    check("phase quadratic-transform tightness",
          _rel(pbf.f8(vv, tv, rho, alpha, omega, noise), pbf.f7(vv, tv, alpha, omega, noise))
          <= 1e-10)
    check("stacked reflection identity",
          np.allclose(pbf.stream_gains(vv, tv), hh @ p, rtol=0, atol=1e-12 * np.abs(hh @ p).max()))

    budget = abf.PowerBudget(1.0)
    small = beta * 1e-3
    pp, mu = abf.update_precoder(hh, small, alpha, omega, budget)
    check("power multiplier meets the budget",
          mu > 0 and abs(abf.transmit_power(pp) - 1.0) <= 1e-8)

    a, b = pbf.assemble_quadratic(vv, rho, alpha, omega)
    sol = pbf.solve_dual_theta(a, b)
    kkt = pbf.kkt_residuals(a, b, sol.theta, sol.zeta, sol.ridge)
    check("relaxed phase solve satisfies KKT",
          kkt["dual"] >= 0 and kkt["primal"] <= 1e-8 and kkt["slackness"] <= 1e-6)

    cfg = SystemConfig()
    chs = synth_scenario(cfg, np.random.default_rng(seed))
    _, trace = run_wsm(cfg, chs, SolveOptions(max_iters=30), np.random.default_rng(seed + 1))
    f1 = np.array(trace.f1_per_iter)
    check("sum-rate trace is non-decreasing", bool(np.all(np.diff(f1) >= -1e-8)))
    _, trace2 = run_wsm(cfg, chs, SolveOptions(max_iters=30), np.random.default_rng(seed + 1))
    check("solves are reproducible", trace2.f1_per_iter == trace.f1_per_iter)

    ok = all(results)
    if verbose:
        print(f"{sum(results)}/{len(results)} checks passed")
    return ok


__all__ = ["run_selftest", "random_channels", "crandn", "random_phases_matrix", "theta_from_vec"]
