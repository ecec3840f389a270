import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ougf import harness as hs
from ougf.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

HALVES = {"family": "atom_list", "theta": 1.0, "atoms": [{"rate": 1.0, "partition": [0.5, 0.5]}]}


def cfg(**kw):
    base = {"kind": "moment", "model": HALVES, "times": [0.0, 0.5], "q": [2.0], "reps": 40,
            "seed": 3, "workers": 1}
    base.update(kw)
    return hs.parse_config(base)


# -- statistics ----------------------------------------------------------------

def test_compare_stats_examples():
    c = hs.compare_stats(1.1, 0.05, 1.0)
    assert c.zscore == pytest.approx(2.0) and c.passed
    assert not hs.compare_stats(1.2, 0.05, 1.0).passed
    assert not hs.compare_stats(0.85, 0.05, 1.0).passed
    assert hs.compare_stats(1.0, 0.0, 1.0) == hs.Comparison(0.0, True)
    assert not hs.compare_stats(1.0 + 1e-9, 0.0, 1.0).passed
    with pytest.raises(ValueError):
        hs.compare_stats(1.0, -1.0, 1.0)


@given(est=st.floats(-1e6, 1e6), se=st.floats(1e-6, 1e3), target=st.floats(-1e6, 1e6))
def test_compare_stats_symmetric(est, se, target):
    a, b = hs.compare_stats(est, se, target), hs.compare_stats(target, se, est)
    assert a.zscore == -b.zscore and a.passed == b.passed


# -- config --------------------------------------------------------------------

def test_parse_config_defaults_and_errors():
    c = hs.parse_config({"kind": "moment", "model": HALVES})
    assert c.reps == 1000 and c.seed == 0 and c.workers is None and math.isinf(c.level)
    with pytest.raises(hs.ConfigError) as info:
        hs.parse_config({"kind": "nope"})
    assert len(info.value.violations) == 2


def test_config_hash_ignores_workers():
    a, b = cfg(workers=1), cfg(workers=4)
    assert a.config_hash == b.config_hash
    assert a.config_hash != cfg(seed=4).config_hash


def test_overrides_precedence():
    c = cfg(seed=3)
    env = {"OUGF_SEED": "11", "OUGF_THREADS": "2"}
    assert hs.with_overrides(c, env=env).seed == 11
    assert hs.with_overrides(c, env=env).workers == 2
    assert hs.with_overrides(c, seed=5, workers=1, env=env).seed == 5
    assert hs.with_overrides(c, env={}) is c


def test_all_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.toml")):
        c = hs.load_config(path)
        assert c.kind in hs.KINDS


# -- validation ----------------------------------------------------------------

def test_validation_messages():
    bad = hs.load_config(CONFIGS / "bad.toml")
    msgs = hs.validate(bad)
    assert "theta > 0 is required for the law of large numbers" in msgs
    assert "kappa(0) <= 0 violates supercriticality" in msgs
    rrt_model = {"family": "rrt", "theta": 1.0}
    msgs = hs.validate(cfg(kind="martingale", model=rrt_model, q=[0.5]))
    assert any("q not in dom(kappa)" in m for m in msgs)
    msgs = hs.validate(cfg(model=rrt_model, times=[1.0], q=[2.0]))
    assert any("moment condition" in m for m in msgs)
    msgs = hs.validate(cfg(kind="rrt", model=rrt_model, times=[1.0], q=[2.0]))
    assert any("q > e^t" in m for m in msgs)
    assert hs.validate(cfg()) == []


def test_run_refuses_invalid_config():
    with pytest.raises(hs.ConfigError) as info:
        hs.run_experiment(hs.load_config(CONFIGS / "bad.toml"))
    assert len(info.value.violations) == 2


def test_condition_report():
    text, ok = hs.condition_report(hs.load_config(CONFIGS / "lln.toml"))
    assert ok and text.count("PASS") == 5
    text, ok = hs.condition_report(hs.load_config(CONFIGS / "bad.toml"))
    assert not ok and "FAIL  theta > 0" in text


# -- experiments ---------------------------------------------------------------

def test_moment_rows_and_exact_time_zero():
    rep = hs.run_experiment(cfg())
    assert [r.t for r in rep.rows] == [0.0, 0.5]
    zero = rep.rows[0]
    assert (zero.estimate, zero.stderr, zero.zscore, zero.target) == (1.0, 0.0, 0.0, 1.0)
    assert rep.metadata["seed"] == 3 and rep.metadata["kind"] == "moment"


def test_runs_are_deterministic():
    a, b = hs.run_experiment(cfg()), hs.run_experiment(cfg())
    assert hs.report_csv(a) == hs.report_csv(b)
    c = hs.run_experiment(cfg(seed=4))
    assert hs.report_csv(a) != hs.report_csv(c)


def test_rrt_target():
    c = cfg(kind="rrt", model={"family": "rrt"}, times=[math.log(4 / 3)], q=[2.0], reps=4,
            options={"n_values": [50, 200]})
    rep = hs.run_experiment(c)
    assert [r.statistic for r in rep.rows] == ["rrt_moment[n=50]", "rrt_moment[n=200]"]
    for r in rep.rows:
        assert r.target == pytest.approx(2.2567583341910251, rel=1e-13)
        assert r.reps == 4


def test_rrt_replications_shape():
    arr = hs.rrt_replications([10, 20], [0.0, 0.5], [2.0, 3.0], 3, 1)
    assert arr.shape == (3, 2, 2, 2)
    assert arr[:, :, 0, :] == pytest.approx(1.0)


# -- output --------------------------------------------------------------------

def test_empty_report_csv_is_header_only():
    rep = hs.ExperimentReport("moment", [])
    assert hs.report_csv(rep) == ",".join(hs.COLUMNS) + "\n"


def test_csv_uses_round_trip_precision():
    row = hs.ReportRow("moment", "moment", 0.1, 2.0, 1 / 3, 0.0, math.e, 0.0, 10, 0)
    text = hs.report_csv(hs.ExperimentReport("moment", [row]))
    rec = next(csv.DictReader(io.StringIO(text)))
    assert rec["estimate"] == "0.33333333333333331"
    assert float(rec["target"]) == math.e and rec["reps"] == "10"


def test_json_round_trip(tmp_path):
    rep = hs.run_experiment(cfg())
    path = tmp_path / "r.json"
    text = hs.emit_report(rep, "json", path)
    assert json.loads(text)["columns"] == list(hs.COLUMNS)
    assert hs.read_report_json(path) == rep
    with pytest.raises(ValueError):
        hs.emit_report(rep, "xml", path)


# -- command line --------------------------------------------------------------

def write_config(tmp_path, body):
    p = tmp_path / "c.toml"
    p.write_text(body)
    return p


SMALL = """kind = "moment"
seed = 1
reps = 20
times = [0.5]
q = [2.0]
workers = 1

[model]
family = "atom_list"
theta = 1.0
atoms = [{rate = 1.0, partition = [0.5, 0.5]}]
"""


def test_cli_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(write_config(tmp_path, SMALL)), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1 and rows[0]["experiment"] == "moment"
    assert "1 rows" in capsys.readouterr().err


def test_cli_seed_override_changes_output(tmp_path, capsys):
    path = str(write_config(tmp_path, SMALL))
    main(["run", "--config", path])
    a = capsys.readouterr().out
    main(["run", "--config", path, "--seed", "2", "--threads", "1"])
    b = capsys.readouterr().out
    main(["run", "--config", path, "--seed", "1"])
    c = capsys.readouterr().out
    assert a != b and a == c


def test_cli_exit_codes(tmp_path, capsys):
    bad = str(CONFIGS / "bad.toml")
    assert main(["run", "--config", bad]) == 2
    assert "precondition violated: theta > 0" in capsys.readouterr().err
    assert main(["check-conditions", "--config", bad]) == 1
    assert main(["check-conditions", "--config", str(CONFIGS / "lln.toml")]) == 0
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["run", "--config", str(write_config(tmp_path, 'kind = "x"\n'))]) == 2


def test_module_entry_point(tmp_path):
    path = str(write_config(tmp_path, SMALL))
    res = subprocess.run([sys.executable, "-m", "ougf", "run", "--config", path, "--format", "json"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["experiment"] == "moment"
