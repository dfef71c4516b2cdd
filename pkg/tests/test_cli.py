import json

import pytest

from nmcom import cli
from nmcom.cli import ConfigError, ExperimentConfig, bind_audit, constants_report, run_experiment


def strip_clock(report):
    out = {k: v for k, v in report.items() if k != "wall_clock"}
    out["config"] = {k: v for k, v in report["config"].items() if k != "output"}
    return out


def test_report_reproducible(tmp_path):
    cfg = ExperimentConfig(seed=11, trials=4)
    a = run_experiment(cfg)
    b = run_experiment(ExperimentConfig(seed=11, trials=4))
    assert json.dumps(strip_clock(a), sort_keys=True) == json.dumps(strip_clock(b), sort_keys=True)
    out = tmp_path / "r.json"
    run_experiment(ExperimentConfig(seed=11, trials=4, output=str(out)))
    assert strip_clock(json.loads(out.read_text())) == json.loads(json.dumps(strip_clock(a)))


def test_completeness_experiment():
    r = run_experiment(ExperimentConfig(seed=1, kind="completeness", trials=5))
    assert r["aggregate"]["accept_rate"] == 1.0 and r["ok"]


def test_copier_equal_tags_experiment():
    r = run_experiment(ExperimentConfig(seed=1, adversary="copier", tags=(2, 2), trials=5))
    assert r["aggregate"]["bot_tag_rate"] == 1.0 and r["ok"]


def test_rates_recomputable_from_records():
    r = run_experiment(ExperimentConfig(seed=3, adversary="abort", trials=6))
    assert r["aggregate"]["accept_rate"] == sum(t["b"] for t in r["trials"]) / 6


@pytest.mark.parametrize("field,kw", [
    ("group", {"group": "nope"}),
    ("protocol", {"protocol": "7"}),
    ("tags", {"protocol": "2", "tags": (4, 1)}),
    ("adversary", {"adversary": "wizard"}),
    ("trials", {"trials": 0}),
])
def test_config_errors_name_field(field, kw):
    with pytest.raises(ConfigError) as exc:
        run_experiment(ExperimentConfig(seed=1, **kw))
    assert exc.value.field == field


def test_bind_audit():
    r = bind_audit("test23")
    assert r["ok"] and r["violations"] == [] and r["message_space"] == 11
    assert not r["tampered_openable"] and not r["tampered_well_formed"]


def test_constants_report():
    r = constants_report(3, 3, lab=False)
    assert r["faithful"] == [8, 32, 128, 512, 2048] and r["ok"]
    assert constants_report(1, 1, lab=False)["faithful"] == [6, 12, 24, 48, 96]
    lab = constants_report(3, 3, lab=True)
    assert lab["active"] == [2] * 5 and "warning" in lab


@pytest.mark.parametrize("argv,code", [
    (["constants"], 0),
    (["bind-audit"], 0),
    (["sigma-test", "--trials", "20"], 0),
    (["schedule-classify", "--random", "5"], 0),
    (["mim-run", "--seed", "1", "--trials", "2", "--left-tag", "2", "--right-tag", "2", "--adversary", "copier"], 0),
    (["extract", "--seed", "1", "--trials", "2", "--machine", "K_i", "--adversary", "planted"], 0),
    (["mim-run", "--seed", "1", "--group", "nope"], 2),
    (["bind-audit", "--group", "modp1536"], 2),
])
def test_main_exit_codes(argv, code, capsys):
    assert cli.main(argv) == code
    json.loads(capsys.readouterr().out)


def test_schedule_file(tmp_path, capsys):
    from nmcom.protocols import ASYNC, Protocol, compute_constants
    from nmcom.schedules import RIGHT, sequential

    sched = sequential(Protocol(ASYNC, 4, compute_constants(lab=True)).script(), RIGHT)
    f = tmp_path / "s.json"
    f.write_text(json.dumps(sched.to_json()))
    assert cli.main(["schedule-classify", "--trace", str(f)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "Bad1" in out["results"][0]["classes"]


def test_lab_env_selects_constants(monkeypatch):
    monkeypatch.setenv("NMCOM_LAB_PROFILE", "1")
    r = run_experiment(ExperimentConfig(seed=1, kind="completeness", protocol="3", trials=1))
    assert r["ok"]
