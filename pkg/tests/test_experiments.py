import csv
import json
import os

import pytest

from anonlab.errors import ConfigurationError
from anonlab.experiments import (Cell, SweepConfig, aggregate_cell, run_cell,
                                 run_sweep, run_trial)
from anonlab.population import TWO_STATE, ModelSpec, PriorSpec


def two_state_config(**kw):
    spec = ModelSpec(TWO_STATE)
    defaults = dict(spec=spec, prior=PriorSpec.uniform(spec),
                    n_values=(10,), betas_m=(1.0,), betas_l=(1.0,),
                    trials=3, seed=5, attacks=("threshold", "nearest"))
    defaults.update(kw)
    return SweepConfig(**defaults)


def strip_timing(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    drop = rows[0].index("wall_s")
    return [tuple(v for i, v in enumerate(row) if i != drop) for row in rows]


def test_config_validation():
    with pytest.raises(ConfigurationError):
        two_state_config(trials=0)
    with pytest.raises(ConfigurationError):
        two_state_config(betas_m=())
    with pytest.raises(ConfigurationError):
        two_state_config(attacks=("bogus",))
    with pytest.raises(ConfigurationError):
        two_state_config(n_values=(50,), oracle_entropy=True)


def test_cell_alpha_default_rule():
    config = two_state_config(alpha=None)
    assert config.cell_alpha(Cell(10, 2.8, 2.8)) == pytest.approx(0.8)
    assert config.cell_alpha(Cell(10, 1.2, 2.8)) == pytest.approx(0.1)
    assert two_state_config(alpha=0.5).cell_alpha(Cell(10, 2.8, 2.8)) == 0.5


def test_trial_determinism():
    config = two_state_config()
    cell = Cell(10, 2.0, 2.0)
    a = run_trial(config, 0, cell, 1)
    b = run_trial(config, 0, cell, 1)
    assert a.results == b.results
    assert a.k == b.k
    assert (a.ev_first_step, a.ev_prior_prox, a.ev_w_sep) == \
        (b.ev_first_step, b.ev_prior_prox, b.ev_w_sep)


def test_trial_minimal_cell():
    config = two_state_config(n_values=(2,), trials=1)
    rec = run_trial(config, 0, Cell(2, 0.0, 0.0), 0)
    assert rec.m == 1 and rec.l == 1
    assert set(rec.results) == {"threshold", "nearest"}


def test_trial_runtime_budget():
    import time
    config = two_state_config(n_values=(50,), alpha=0.5)
    start = time.perf_counter()
    run_trial(config, 0, Cell(50, 2.5, 2.5), 0)
    assert time.perf_counter() - start < 1.0


def test_entropy_recorded_when_enabled():
    config = two_state_config(n_values=(4,), oracle_entropy=True, trials=2)
    rec = run_trial(config, 0, Cell(4, 1.5, 1.5), 0)
    assert rec.entropy is not None
    assert 0 <= rec.entropy <= 1.4


def test_sweep_single_cell(tmp_path):
    config = two_state_config(trials=1)
    result = run_sweep(config, tmp_path)
    assert len(result.rows) == 2  # one row per attack
    assert os.path.exists(tmp_path / "sweep.csv")
    meta = json.load(open(tmp_path / "sweep.meta.json"))
    assert meta["config"]["seed"] == 5


def test_sweep_reproducible_excluding_timing(tmp_path):
    config = two_state_config(betas_m=(1.0, 2.0), betas_l=(1.0, 2.0))
    run_sweep(config, tmp_path / "a")
    run_sweep(config, tmp_path / "b")
    assert strip_timing(tmp_path / "a" / "sweep.csv") == \
        strip_timing(tmp_path / "b" / "sweep.csv")


def test_sweep_resume_reproduces_deleted_cell(tmp_path):
    config = two_state_config(betas_m=(1.0, 2.0), betas_l=(1.0,))
    run_sweep(config, tmp_path)
    full = strip_timing(tmp_path / "sweep.csv")
    # drop one cell's rows and re-run: only that cell is recomputed and the
    # file is restored exactly
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    kept = [r for r in rows if r["beta_m"] != "2"]
    assert len(kept) < len(rows)
    with open(tmp_path / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=rows[0].keys())
        writer.writeheader()
        writer.writerows(kept)
    recomputed = []
    run_sweep(config, tmp_path,
              progress=lambda msg: recomputed.append("cached" not in msg))
    assert sum(recomputed) == 1
    assert strip_timing(tmp_path / "sweep.csv") == full


def test_parallel_trials_match_serial(tmp_path):
    config = two_state_config(trials=4)
    cell = Cell(10, 1.5, 1.5)
    serial = run_cell(config, 0, cell, threads=1)
    parallel = run_cell(config, 0, cell, threads=2)
    assert _rows_equal(aggregate_cell(config, cell, serial),
                       aggregate_cell(config, cell, parallel))


def _rows_equal(a, b):
    skip = {"wall_s"}
    for ra, rb in zip(a, b):
        for key in ra:
            if key not in skip and ra[key] != rb[key]:
                return False
    return True


def test_accuracy_increases_along_diagonal():
    # chance-level matching for short traces, strong matching for long ones
    config = two_state_config(n_values=(10,), trials=40,
                              attacks=("nearest",), alpha=0.5)
    low = aggregate_cell(config, Cell(10, 1.0, 1.0),
                         run_cell(config, 0, Cell(10, 1.0, 1.0)))
    high = aggregate_cell(config, Cell(10, 3.0, 3.0),
                          run_cell(config, 1, Cell(10, 3.0, 3.0)))
    assert high[0]["accuracy"] > low[0]["accuracy"]
    assert high[0]["accuracy"] >= 0.8
