import csv
import io
import math

import pytest

from qgt import mc
from qgt.ensemble import EnsembleSpec, Scheme
from qgt.errors import ParameterError

SPEC = EnsembleSpec(Scheme.LDPC, 3, 30)


def cfg(**kw):
    base = dict(spec=SPEC, size=600, gammas=(0.01, 0.03), min_trials=4, min_error_events=20, max_trials=30)
    base.update(kw)
    return mc.SimConfig(**base)


def _key(r):
    d = r.to_dict()
    d.pop("wall_time")
    return d


def test_deterministic_and_thread_independent():
    a = mc.sweep(cfg())
    b = mc.sweep(cfg())
    c = mc.sweep(cfg(), threads=2)
    assert [_key(r) for r in a] == [_key(r) for r in b] == [_key(r) for r in c]


def test_stopping_rule_prefix():
    r = mc.run_point(cfg(), 0.03)
    assert r.trials >= 4 and (r.misdetected >= 20 or r.trials == 30)
    # the same point with a one-trial-shorter cap never sees more events
    r2 = mc.run_point(cfg(max_trials=max(4, r.trials - 1)), 0.03)
    assert r2.trials <= r.trials and r2.misdetected <= r.misdetected


def test_batched_run_matches_serial():
    serial = mc.run_point(cfg(), 0.03)
    batched = mc.run_point(cfg(), 0.03, batch=7)
    assert _key(serial) == _key(batched)


def test_zero_prevalence_is_undefined():
    r = mc.run_point(cfg(max_trials=5), 0.0)
    assert r.defectives == 0 and r.misdetection_rate is None and r.tests_per_defective is None
    buf = io.StringIO()
    mc.write_csv([r], buf)
    row = next(csv.DictReader(io.StringIO(buf.getvalue())))
    assert row["misdetection_rate"] == "NA" and row["rel_stderr"] == "NA"


def test_error_bars():
    r = mc.run_point(cfg(max_trials=5), 0.0)
    r.misdetected = 100
    assert mc.mc_error_bars(r) == pytest.approx(0.1)
    r.misdetected = 1
    assert mc.mc_error_bars(r) == 1.0
    r.misdetected = 0
    assert mc.mc_error_bars(r) is None


def test_no_false_alarms_and_consistent_counts():
    for r in mc.sweep(cfg(gammas=(0.005, 0.02, 0.05))):
        assert r.false_alarms == 0
        assert 0 <= r.misdetected <= r.defectives
        assert 0 <= r.successes <= r.trials
        assert r.omega == pytest.approx(3 / 30)


def test_single_point_sweep_equals_run_point():
    c = cfg(gammas=(0.02,))
    assert _key(mc.sweep(c)[0]) == _key(mc.run_point(c, 0.02))


def test_common_random_numbers_monotone():
    # shared seeds: more defectives at higher prevalence, trial for trial
    rs = mc.sweep(cfg(gammas=(0.01, 0.02, 0.04), min_trials=5, max_trials=5, min_error_events=0))
    ds = [r.defectives for r in rs]
    assert ds == sorted(ds)


def test_rate_sweep():
    c = mc.SimConfig(EnsembleSpec(Scheme.GLDPC, 2, 120, 2), 4000, gammas=(0.005,), omegas=(0.03, 0.06),
                     min_trials=2, max_trials=2)
    rs = mc.sweep(c)
    assert [r.omega <= om + 1e-12 for r, om in zip(rs, (0.03, 0.06))] == [True, True]
    assert rs[0].dc > rs[1].dc
    for r in rs:
        assert (r.nb * r.dv) % r.dc == 0


def test_coupled_window_point():
    spec = EnsembleSpec(Scheme.LDPC, 3, 30).with_coupling(2, 8)
    c = mc.SimConfig(spec, 300, gammas=(0.01,), decoder="window", W=4, min_trials=3, max_trials=3)
    r = mc.sweep(c)[0]
    assert (r.w, r.L, r.nb, r.W, r.decoder) == (2, 8, 300, 4, "window")
    assert r.omega == pytest.approx(3 / 30)  # the column carries the uncoupled rate


def test_csv_layout():
    buf = io.StringIO()
    mc.write_csv(mc.sweep(cfg(gammas=(0.02,), max_trials=4)), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == mc.CSV_COLUMNS
    row = dict(zip(mc.CSV_COLUMNS, lines[1].split(",")))
    assert row["W"] == "NA" and row["decoder"] == "full" and float(row["gamma"]) == 0.02
    assert math.isclose(float(row["tests_per_defective"]), 0.1 / 0.02)


def test_config_validation():
    with pytest.raises(ParameterError):
        cfg(gammas=())
    with pytest.raises(ParameterError):
        cfg(gammas=(0.02, 0.01))
    with pytest.raises(ParameterError):
        cfg(min_trials=50)
    with pytest.raises(ParameterError):
        cfg(decoder="window", W=3)
    with pytest.raises(ParameterError):
        cfg(omegas=(0.05,))
    with pytest.raises(ParameterError):
        mc.run_point(cfg(size=601), 0.01)
