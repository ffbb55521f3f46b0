import json

from socialrl.cli import main
from socialrl.mdp import load_spec


def write_cfg(tmp_path, **doc):
    base = {"n_replications": 5, "horizon": 30}
    base.update(doc)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(base))
    return path


def test_run_writes_csvs_and_resolved_config(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "-c", str(cfg), "-o", str(out), "--replication-traces"]) == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"agents_evolution.csv", "recommender_q.csv", "replication_traces.csv", "resolved_config.json"}


def test_sweep_layout(tmp_path):
    cfg = write_cfg(tmp_path, sweep={"mbus": [1, 3], "beta": [0.25]})
    out = tmp_path / "sweep"
    assert main(["sweep", "-c", str(cfg), "-o", str(out)]) == 0
    subdirs = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert subdirs == ["beta=0.25_mbus=1", "beta=0.25_mbus=3"]
    for d in subdirs:
        resolved = json.loads((out / d / "resolved_config.json").read_text())
        assert resolved["agent"]["beta"] == 0.25 and resolved["sweep"] == {}
        assert (out / d / "agents_evolution.csv").exists()


def test_env_dump_reloads(tmp_path):
    out = tmp_path / "env.json"
    assert main(["env", "--level", "refined", "--misrepresent", "-o", str(out)]) == 0
    spec = load_spec(out)
    assert spec.misrepresented and spec.arm_modulation.n_arms == 4


def test_validate_reports_path_and_rule(tmp_path, capsys):
    good = write_cfg(tmp_path)
    assert main(["validate", "-c", str(good)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"agent": {"beta": 1.5}}))
    assert main(["validate", "-c", str(bad)]) == 2
    assert "agent.beta: out of range [0,1]" in capsys.readouterr().err


def test_plot_and_plot_errors(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "o"
    main(["run", "-c", str(cfg), "-o", str(out)])
    svg = tmp_path / "q.svg"
    assert main(["plot", "--kind", "recommender_q", "-i", str(out / "recommender_q.csv"), "-o", str(svg)]) == 0
    assert svg.read_text().count("<polyline") == 4
    assert main(["plot", "--kind", "recommender_q", "-i", str(out / "agents_evolution.csv"), "-o", str(svg)]) == 2
    assert "does not match" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path, capsys):
    assert main(["run", "-c", str(tmp_path / "nope.json"), "-o", str(tmp_path)]) == 2
    assert "not found" in capsys.readouterr().err
