"""Monte-Carlo experiment runner and CSV output.

Trial ``i`` of a sweep point uses seed ``config.seed + i`` for everything it
draws (channel, initial point, baseline phases), so a row depends only on the
config and the set of trial indices, never on execution order.

Sweep CSV columns::

    sweep_param,value,algo,mean_rate_bpshz,std_rate,n_trials,n_failed,seed

``algo`` is ``proposed_continuous``, ``proposed_quantized`` (finite ``bits``
only) or ``zf_random``. Convergence CSV columns::

    k_users,m_tot,iteration,mean_f1_bpshz,n_trials,seed

where iteration 0 is the initial point and traces that stopped early are
held at their final value.
"""
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import synth_scenario
from .config import CONTINUOUS, ConfigError
from .engine import SolveOptions, quantized_rate, run_baseline, run_wsm
from .errors import NumericFailure

log = logging.getLogger(__name__)

SWEEP_PARAMS = ("m_el", "m_az", "bits", "p_max_dbm", "k_users", "trials")
CSV_COLUMNS = ("sweep_param", "value", "algo", "mean_rate_bpshz", "std_rate", "n_trials",
               "n_failed", "seed")
CONV_COLUMNS = ("k_users", "m_tot", "iteration", "mean_f1_bpshz", "n_trials", "seed")
PROPOSED, QUANTIZED, BASELINE = "proposed_continuous", "proposed_quantized", "zf_random"


class AllTrialsFailed(RuntimeError):
    pass


@dataclass
class SweepRow:
    sweep_param: str
    value: object
    algo: str
    mean_rate: float
    std_rate: float
    n_trials: int
    n_failed: int
    seed: int


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def get(self, value, algo) -> SweepRow:
        for r in self.rows:
            if r.value == value and r.algo == algo:
                return r
        raise KeyError((value, algo))

    def series(self, algo):
        """``(values, means)`` for one algorithm in sweep order."""
        rows = [r for r in self.rows if r.algo == algo]
        return [r.value for r in rows], np.array([r.mean_rate for r in rows])


def trial_streams(seed: int):
    """Independent generators for channel, initial point and baseline phases."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def run_trial(config, trial_index: int, bits_list=None) -> dict:
    """One (channel, solve, baseline) draw.

    Returns rates keyed by algo; the quantized rate is a dict keyed by bits
    when ``bits_list`` is given. A failed sub-solver maps to ``None``.
    """
    ch_rng, init_rng, base_rng = trial_streams(config.seed + trial_index)
    channels = synth_scenario(config, ch_rng)
    out = {}
    opts = SolveOptions(config.max_iters, config.conv_tol_rel, record_trace=False)
    try:
        state, trace = run_wsm(config, channels, opts, init_rng)
        out[PROPOSED] = trace.final_rate_continuous
        if bits_list is not None:
            out[QUANTIZED] = {b: (trace.final_rate_continuous if b == CONTINUOUS
                                  else quantized_rate(config, channels, state, b))
                              for b in bits_list}
        elif not config.continuous:
            out[QUANTIZED] = trace.final_rate_quantized
    except NumericFailure as exc:
        log.warning("trial %d: proposed solve failed: %s", trial_index, exc)
        out[PROPOSED] = None
        if bits_list is not None:
            out[QUANTIZED] = {b: None for b in bits_list}
        elif not config.continuous:
            out[QUANTIZED] = None
    if bits_list is not None:
        out[BASELINE] = {}
        for b in bits_list:
            try:
                out[BASELINE][b] = run_baseline(config.replace(bits=b), channels,
                                                trial_streams(config.seed + trial_index)[2])[1]
            except NumericFailure:
                out[BASELINE][b] = None
    else:
        try:
            out[BASELINE] = run_baseline(config, channels, base_rng)[1]
        except NumericFailure as exc:
            log.warning("trial %d: baseline failed: %s", trial_index, exc)
            out[BASELINE] = None
    return out


def _map_trials(config, n, bits_list, workers):
    args = [(config, i, bits_list) for i in range(n)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_trial_star, args))
    return [_trial_star(a) for a in args]


def _trial_star(a):
    return run_trial(*a)


def _aggregate(param, value, algo, rates, seed):
    ok = [r for r in rates if r is not None]
    n_failed = len(rates) - len(ok)
    if not ok:
        return SweepRow(param, value, algo, math.nan, math.nan, len(rates), n_failed, seed)
    arr = np.asarray(ok, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return SweepRow(param, value, algo, float(arr.mean()), std, len(rates), n_failed, seed)


def _check_rows(rows):
    if rows and all(r.n_failed == r.n_trials for r in rows if r.algo == PROPOSED):
        raise AllTrialsFailed("every proposed-algorithm trial failed")


def run_point(config, param="none", value="-", workers=1) -> list:
    """Aggregate rows for a single scenario."""
    results = _map_trials(config, config.trials, None, workers)
    algos = [PROPOSED] + ([] if config.continuous else [QUANTIZED]) + [BASELINE]
    return [_aggregate(param, value, a, [r[a] for r in results], config.seed) for a in algos]


def run_sweep(config, param: str, values, workers=1) -> SweepResult:
    """Sweep one scenario parameter; each value gets ``trials`` fresh draws."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep '{param}'; choose from {', '.join(SWEEP_PARAMS)}")
    if param == "k_users" and config.weights != "equal":
        raise ConfigError("sweeping k_users requires weights = 'equal'")
    result = SweepResult()
    if param == "bits":
        # The loop ignores the phase resolution, so one solve serves every value.
        values = [v if v == CONTINUOUS else int(v) for v in values]
        for v in values:
            config.replace(bits=v)  # validates
        results = _map_trials(config, config.trials, values, workers)
        for v in values:
            result.rows.append(_aggregate(param, v, PROPOSED,
                                          [r[PROPOSED] for r in results], config.seed))
            if v != CONTINUOUS:
                result.rows.append(_aggregate(param, v, QUANTIZED,
                                              [r[QUANTIZED][v] for r in results], config.seed))
            result.rows.append(_aggregate(param, v, BASELINE,
                                          [r[BASELINE][v] for r in results], config.seed))
    else:
        for v in values:
            cfg = config.replace(**{param: float(v) if param == "p_max_dbm" else int(v)})
            result.rows.extend(run_point(cfg, param, v, workers))
    _check_rows(result.rows)
    return result


@dataclass
class ConvergenceResult:
    rows: list = field(default_factory=list)
    # (k_users, m_tot) -> list of per-trial (iters_used, converged, f1 trace)
    traces: dict = field(default_factory=dict)


def run_convergence(config, cases=((2, 1), (2, 2), (4, 1), (4, 2)), trials=None,
                    workers=1) -> ConvergenceResult:
    """Average sum-rate per iteration for several ``(k_users, m_el)`` cases."""
    trials = config.trials if trials is None else trials
    out = ConvergenceResult()
    for k, m_el in cases:
        cfg = config.replace(k_users=k, m_el=m_el)
        args = [(cfg, i) for i in range(trials)]
        if workers and workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                per = list(ex.map(_trace_star, args))
        else:
            per = [_trace_star(a) for a in args]
        per_ok = [p for p in per if p is not None]
        out.traces[(k, cfg.m_tot)] = per_ok
        if not per_ok:
            continue
        length = max(len(p[2]) for p in per_ok)
        padded = np.array([p[2] + [p[2][-1]] * (length - len(p[2])) for p in per_ok])
        for it, mean in enumerate(padded.mean(axis=0)):
            out.rows.append((k, cfg.m_tot, it, float(mean), len(per_ok), config.seed))
    return out


def _trace_star(a):
    cfg, i = a
    ch_rng, init_rng, _ = trial_streams(cfg.seed + i)
    channels = synth_scenario(cfg, ch_rng)
    try:
        _, trace = run_wsm(cfg, channels, SolveOptions(cfg.max_iters, cfg.conv_tol_rel),
                           init_rng)
    except NumericFailure as exc:
        log.warning("trial %d: solve failed: %s", i, exc)
        return None
    return trace.iters_used, trace.converged, list(trace.f1_per_iter)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def emit_csv(result, path) -> None:
    """Write a sweep (or list of rows) with full-precision floats."""
    rows = result.rows if isinstance(result, SweepResult) else result
    _write(path, CSV_COLUMNS, [(r.sweep_param, r.value, r.algo, r.mean_rate, r.std_rate,
                                r.n_trials, r.n_failed, r.seed) for r in rows])


def emit_convergence_csv(result: ConvergenceResult, path) -> None:
    _write(path, CONV_COLUMNS, result.rows)


def read_csv(path) -> list:
    """Parse a sweep CSV back into rows with numeric columns converted."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["mean_rate_bpshz"] = float(r["mean_rate_bpshz"])
        r["std_rate"] = float(r["std_rate"])
        for k in ("n_trials", "n_failed", "seed"):
            r[k] = int(r[k])
    return rows
