import math
import subprocess
import sys

import numpy as np
import pytest

from irsbf import SystemConfig, cli, harness
from irsbf.errors import NumericFailure
from irsbf.harness import (CSV_COLUMNS, SweepResult, SweepRow, emit_csv, read_csv,
                           run_convergence, run_point, run_sweep)


@pytest.fixture(scope="module")
def small():
    return SystemConfig(trials=4, seed=11)


def test_empty_result_is_header_only(tmp_path):
    p = tmp_path / "e.csv"
    emit_csv(SweepResult(), p)
    assert p.read_bytes() == (",".join(CSV_COLUMNS) + "\n").encode()


def test_one_row_round_trip(tmp_path):
    row = SweepRow("m_el", 2, "zf_random", 0.1 + 0.2, 1 / 3, 5, 1, 7)
    p = tmp_path / "one.csv"
    emit_csv(SweepResult([row]), p)
    lines = p.read_text(encoding="utf-8").split("\n")
    assert len(lines) == 3 and lines[2] == ""
    (back,) = read_csv(p)
    assert back["mean_rate_bpshz"] == 0.1 + 0.2
    assert back["std_rate"] == 1 / 3
    assert (back["n_trials"], back["n_failed"], back["seed"]) == (5, 1, 7)
    assert back["value"] == "2" and back["algo"] == "zf_random"


def test_round_trip_bit_exact(tmp_path, rng):
    vals = rng.standard_normal(50) * 10.0 ** rng.integers(-12, 3, size=50)
    rows = [SweepRow("p_max_dbm", i, "proposed_continuous", v, abs(v), 3, 0, 0)
            for i, v in enumerate(vals)]
    p = tmp_path / "many.csv"
    emit_csv(rows, p)
    back = read_csv(p)
    assert [r["mean_rate_bpshz"] for r in back] == list(vals)


def test_nan_written_for_all_failed_point(tmp_path):
    row = SweepRow("m_el", 1, "zf_random", math.nan, math.nan, 3, 3, 0)
    p = tmp_path / "nan.csv"
    emit_csv([row], p)
    assert math.isnan(read_csv(p)[0]["mean_rate_bpshz"])


def test_point_rows(small):
    rows = run_point(small)
    assert [r.algo for r in rows] == ["proposed_continuous", "zf_random"]
    for r in rows:
        assert r.n_trials == 4 and r.n_failed == 0 and r.std_rate >= 0
    q = run_point(small.replace(bits=2))
    assert [r.algo for r in q] == ["proposed_continuous", "proposed_quantized", "zf_random"]
    assert q[0].mean_rate == rows[0].mean_rate


def test_trial_order_independent(small):
    serial = run_point(small)
    parallel = run_point(small, workers=2)
    assert [(r.mean_rate, r.std_rate) for r in serial] == \
        [(r.mean_rate, r.std_rate) for r in parallel]


def test_trials_depend_on_seed_plus_index(small):
    # Trials 1..3 of seed 11 are trials 0..2 of seed 12.
    a = [harness.run_trial(small, i) for i in (1, 2, 3)]
    b = [harness.run_trial(small.replace(seed=12), i) for i in (0, 1, 2)]
    assert a == b


def test_bits_sweep_shares_solve(small):
    res = run_sweep(small, "bits", ["continuous", 1, 2])
    cont = res.get("continuous", "proposed_continuous").mean_rate
    for b in (1, 2):
        assert res.get(b, "proposed_continuous").mean_rate == cont
        assert res.get(b, "proposed_quantized").mean_rate <= cont + 1e-9


def test_sweep_rejects_unknown_param(small):
    from irsbf.errors import ConfigError
    with pytest.raises(ConfigError):
        run_sweep(small, "noise_dbm", [1])


def test_sweep_byte_identical(tmp_path, small):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_sweep(small, "m_el", [1, 2]), a)
    emit_csv(run_sweep(small, "m_el", [1, 2]), b)
    assert a.read_bytes() == b.read_bytes()


def test_failures_counted_not_fatal(small, monkeypatch):
    calls = {"n": 0}
    real = harness.run_wsm

    def flaky(*a, **kw):
        calls["n"] += 1
        if calls["n"] % 2:
            raise NumericFailure("boom")
        return real(*a, **kw)

    monkeypatch.setattr(harness, "run_wsm", flaky)
    rows = run_point(small)
    assert rows[0].n_failed == 2 and rows[0].n_trials == 4
    assert np.isfinite(rows[0].mean_rate)


def test_convergence_traces(small):
    res = run_convergence(small, cases=((2, 1), (2, 2)), trials=4)
    for (k, m_tot), per in res.traces.items():
        for iters, _, f1 in per:
            assert np.all(np.diff(f1) >= -1e-8)
            assert len(f1) == iters + 1
    iters = {}
    for k, m_tot, it, mean, n, seed in res.rows:
        iters.setdefault(m_tot, []).append(mean)
    assert iters[40][-1] > iters[20][-1]


def test_cli_run_and_sweep(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["run", "--trials", "2", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["algo"] for r in rows] == ["proposed_continuous", "zf_random"]
    out2 = tmp_path / "s.csv"
    assert cli.main(["sweep", "--param", "p_max_dbm", "--values", "20,30",
                     "--trials", "2", "--seed", "3", "--out", str(out2)]) == 0
    assert {r["seed"] for r in read_csv(out2)} == {3}


def test_cli_convergence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"trials": 2, "max_iters": 5}')
    out = tmp_path / "conv.csv"
    assert cli.main(["convergence", "--config", str(cfg), "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header == ",".join(harness.CONV_COLUMNS)


def test_cli_exit_codes(tmp_path, monkeypatch):
    bad = tmp_path / "bad.json"
    bad.write_text('{"m_el": 0}')
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.json"),
                     "--out", str(tmp_path / "x.csv")]) == 3
    assert cli.main(["run", "--trials", "1", "--out", str(tmp_path / "no" / "x.csv")]) == 3

    def boom(*a, **kw):
        raise NumericFailure("boom")

    monkeypatch.setattr(harness, "run_wsm", boom)
    assert cli.main(["run", "--trials", "2", "--out", str(tmp_path / "f.csv")]) == 4


def test_module_entry_point_selftest():
    proc = subprocess.run([sys.executable, "-m", "irsbf", "selftest"], capture_output=True,
                          text=True, timeout=300)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "checks passed" in proc.stdout
