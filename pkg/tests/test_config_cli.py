"""Config parsing, the benchmark runner, result files, and the CLI."""

import numpy as np
import pytest

from banditbench.bench import (
    SUMMARY_HEADER,
    build_env_factory,
    emit_results,
    format_summary_table,
    run_benchmark,
    sanitize_name,
)
from banditbench.cli import main
from banditbench.config import ConfigError, load_config, parse_config
from banditbench.envs import ConstantFeatureEnv

GOOD = """\
# tiny wheel benchmark
[environment]
name=wheel
delta=0.5
horizon=60

[agent "LinGreedy"]
epsilon=0.05
[agent "LinPost"]

[run]
trials=2
seed=3
out=outdir
"""


def test_parse_happy_path():
    cfg = parse_config(GOOD)
    assert cfg.environment == {"name": "wheel", "delta": 0.5, "horizon": 60}
    assert [a.preset for a in cfg.agents] == ["LinGreedy", "LinPost"]
    assert cfg.agents[0].overrides == {"epsilon": 0.05}
    assert cfg.agents[0].line == 7
    assert cfg.run.trials == 2 and cfg.run.seed == 3
    assert cfg.run.out == "outdir" and cfg.run.workers == 1
    assert cfg.run.horizon is None


def err(text: str) -> ConfigError:
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    return exc.value


def test_parse_errors_carry_line_numbers():
    e = err("[environment]\nname=wheel\ndelta=0.5\ndelta=0.6\n")
    assert e.line == 4 and "duplicate key" in str(e)
    e = err("[environment]\nname=wheel\ndelta=0.5\nwat=1\n")
    assert e.line == 4 and "does not accept" in str(e)
    e = err("[environment]\nname=wheel\ndelta=soft\n")
    assert e.line == 3 and "not a valid float" in str(e)
    e = err("[environment]\nname=mars\n")
    assert e.line == 2 and "unknown environment" in str(e)
    e = err('[environment]\nname=wheel\ndelta=0.5\n[agent "Nope"]\n')
    assert e.line == 4 and "unknown agent preset" in str(e)
    e = err(
        '[environment]\nname=wheel\ndelta=0.5\n'
        '[agent "LinGreedy"]\n[agent "LinGreedy"]\n'
    )
    assert e.line == 5 and "duplicate agent block" in str(e)
    e = err('[environment]\nname=wheel\ndelta=0.5\n[agent "LinGreedy"]\nq=3\n')
    assert e.line == 5 and "does not accept key" in str(e)
    e = err("[environment]\nname=wheel\ndelta=0.5\n[run]\nfoo=1\n")
    assert e.line == 5 and "unknown [run] key" in str(e)
    e = err("[wat]\n")
    assert e.line == 1 and "unrecognized section header" in str(e)
    e = err("x=1\n")
    assert e.line == 1 and "before any section" in str(e)
    e = err("[environment]\nname=wheel\ndelta 0.5\n")
    assert e.line == 3 and "expected key=value" in str(e)
    e = err("[environment]\nname=wheel\n=0.5\n")
    assert e.line == 3 and "empty key" in str(e)
    e = err("[environment]\ndelta=0.5\n")
    assert e.line == 1 and "must set name=" in str(e)
    e = err("[environment]\nname=wheel\n")
    assert e.line == 1 and "requires key 'delta'" in str(e)
    e = err("[environment]\nname=wheel\ndelta=0.5\nconstant_feature=maybe\n")
    assert e.line == 4 and "not a valid bool" in str(e)
    e = err("[environment]\nname=wheel\ndelta=0.5\n[environment]\n")
    assert e.line == 4 and "duplicate [environment]" in str(e)
    e = err("[environment]\nname=wheel\ndelta=0.5\n[run]\n[run]\n")
    assert e.line == 5 and "duplicate [run]" in str(e)


def test_parse_errors_without_lines():
    assert err('[agent "Uniform"]\n').line is None
    e = err("[environment]\nname=wheel\ndelta=0.5\n[run]\ntrials=0\n")
    assert "trials must be positive" in str(e)
    e = err("[environment]\nname=wheel\ndelta=0.5\n[run]\nworkers=0\n")
    assert "workers must be positive" in str(e)
    e = err("[environment]\nname=wheel\ndelta=0.5\n[run]\nhorizon=0\n")
    assert "horizon must be positive" in str(e)


def test_parse_bool_and_column_forms(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("1.0,2.0,a\n3.0,4.0,b\n", encoding="utf-8")
    cfg = parse_config(
        "[environment]\n"
        "name=dataset\n"
        f"path={data}\n"
        "reward_rule=classification\n"
        "header=off\n"
        "label_column=2\n"
        "numeric_columns=0, 1\n"
        "categorical_columns=\n"
    )
    env = cfg.environment
    assert env["header"] is False
    assert env["label_column"] == 2
    assert env["numeric_columns"] == (0, 1)
    assert env["categorical_columns"] == ()
    named = parse_config(
        "[environment]\nname=dataset\npath=x.csv\nreward_rule=classification\n"
        "label_column=species\nnumeric_columns=mass, 3\n"
    )
    assert named.environment["label_column"] == "species"
    assert named.environment["numeric_columns"] == ("mass", 3)


def test_load_config_reads_files(tmp_path):
    path = tmp_path / "bench.cfg"
    path.write_text(GOOD, encoding="utf-8")
    assert load_config(str(path)).run.trials == 2


def test_build_env_factory_variants(tmp_path):
    wheel = parse_config("[environment]\nname=wheel\ndelta=0.5\n[run]\nhorizon=30\n")
    env = build_env_factory(wheel)(0)
    assert env.horizon == 30  # run horizon flows into the constructed env
    linear = parse_config("[environment]\nname=linear\ndim=4\nnum_actions=3\nhorizon=20\n")
    env = build_env_factory(linear)(1)
    assert env.dim == 4 and env.num_actions == 3
    wrapped = parse_config(
        "[environment]\nname=wheel\ndelta=0.5\nhorizon=10\nconstant_feature=true\n"
    )
    env = build_env_factory(wrapped)(2)
    assert isinstance(env, ConstantFeatureEnv) and env.dim == 3
    data = tmp_path / "d.csv"
    data.write_text("1.0,a\n2.0,b\n3.0,a\n", encoding="utf-8")
    ds = parse_config(
        "[environment]\nname=dataset\n"
        f"path={data}\nreward_rule=classification\nheader=false\n"
        "label_column=1\nnumeric_columns=0\ncategorical_columns=\n"
    )
    factory = build_env_factory(ds)
    a, b = factory(0), factory(1)
    assert a.num_actions == 2
    assert not np.array_equal(a._contexts, b._contexts)  # per-trial shuffles
    bad = parse_config("[environment]\nname=wheel\ndelta=0.5\nnoise_sigma=-1.0\n")
    with pytest.raises(ConfigError, match="environment setup failed"):
        build_env_factory(bad)
    missing = parse_config(
        "[environment]\nname=dataset\npath=/nope.csv\nreward_rule=classification\n"
    )
    with pytest.raises(ConfigError):
        build_env_factory(missing)


def test_run_benchmark_appends_uniform_and_pairs_trials():
    cfg = parse_config(GOOD)
    messages = []
    result = run_benchmark(cfg, progress=messages.append)
    agents = [r.agent for r in result.reports]
    assert agents == ["LinGreedy", "LinPost", "Uniform"]
    assert len(messages) == 3
    for report in result.reports:
        assert report.trials == 2
        assert len(report.traces[0]) == 60
    # paired seeds: every agent faced the identical context stream per trial
    for t in range(2):
        digests = {r.traces[t].context_digest for r in result.reports}
        assert len(digests) == 1
    uniform_norm = next(r for r in result.normalized if r.agent == "Uniform")
    assert uniform_norm.mean_cum_regret == 100.0
    assert uniform_norm.normalized


def test_run_benchmark_horizon_rules():
    cfg = parse_config(
        "[environment]\nname=wheel\ndelta=0.5\nhorizon=40\n[run]\nhorizon=25\ntrials=1\n"
    )
    result = run_benchmark(cfg)
    assert result.horizon == 25
    assert all(len(r.traces[0]) == 25 for r in result.reports)
    over = parse_config(
        "[environment]\nname=wheel\ndelta=0.5\nhorizon=40\n[run]\nhorizon=99\ntrials=1\n"
    )
    with pytest.raises(ConfigError, match="exceeds"):
        run_benchmark(over)


def read_rows(path):
    return path.read_text(encoding="utf-8").splitlines()


def mask_wall(lines):
    return [",".join(ln.split(",")[:-1]) for ln in lines]


def test_emit_results_files_and_rerun_determinism(tmp_path):
    cfg_text = (
        "[environment]\nname=wheel\ndelta=0.5\nhorizon=30\n"
        '[agent "LinGreedy"]\n[run]\ntrials=2\nseed=1\n'
    )
    outs = []
    for sub in ("a", "b"):
        result = run_benchmark(parse_config(cfg_text))
        outs.append(sorted(emit_results(result, tmp_path / sub)))
    names_a = [p.name for p in outs[0]]
    assert names_a == [
        "regret_curve_LinGreedy.csv",
        "regret_curve_Uniform.csv",
        "summary.csv",
        "trace_LinGreedy_0.csv",
        "trace_LinGreedy_1.csv",
        "trace_Uniform_0.csv",
        "trace_Uniform_1.csv",
    ]
    for pa, pb in zip(outs[0], outs[1]):
        assert pa.name == pb.name
        if pa.name == "summary.csv":
            assert mask_wall(read_rows(pa)) == mask_wall(read_rows(pb))
        else:
            assert pa.read_bytes() == pb.read_bytes()
    summary = read_rows(outs[0][2])
    assert summary[0] == SUMMARY_HEADER
    assert len(summary) == 3
    uniform_row = next(ln for ln in summary if ln.startswith("Uniform,"))
    assert uniform_row.split(",")[6] == "100.0"
    trace = read_rows(outs[0][3])
    assert trace[0].startswith("trial,step,action,")
    assert len(trace) == 31
    curve = read_rows(outs[0][0])
    assert curve[0] == "step,mean_cum_regret,stderr"
    assert len(curve) == 31


def test_parallel_workers_match_serial(tmp_path):
    base = (
        "[environment]\nname=wheel\ndelta=0.5\nhorizon=40\n"
        '[agent "LinGreedy"]\n[run]\ntrials=2\nseed=0\nworkers={w}\n'
    )
    serial = run_benchmark(parse_config(base.format(w=1)))
    parallel = run_benchmark(parse_config(base.format(w=2)))
    for rs, rp in zip(serial.reports, parallel.reports):
        assert rs.agent == rp.agent
        np.testing.assert_array_equal(rs.cum_regrets, rp.cum_regrets)
        for ts, tp in zip(rs.traces, rp.traces):
            np.testing.assert_array_equal(ts.actions, tp.actions)
            np.testing.assert_array_equal(ts.realized_rewards, tp.realized_rewards)


def test_sanitize_name():
    assert sanitize_name("LinGreedy(eps=0.01)") == "LinGreedy_eps=0.01"
    assert sanitize_name("wheel(delta=0.95)+const") == "wheel_delta=0.95_const"


def test_format_summary_table_rms_column():
    cfg = parse_config(
        "[environment]\nname=wheel\ndelta=0.5\nhorizon=20\n"
        '[agent "LinGreedy"]\n[run]\ntrials=1\n'
    )
    table = format_summary_table(run_benchmark(cfg))
    assert "wall/RMS" not in table
    assert table.splitlines()[0].startswith("agent")
    assert any(ln.startswith("LinGreedy") for ln in table.splitlines())


def test_cli_presets_and_validate(tmp_path, capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "LinFullPost" in out and "NeuralLinear" in out
    path = tmp_path / "ok.cfg"
    path.write_text(GOOD, encoding="utf-8")
    assert main(["validate", str(path)]) == 0
    assert "OK: environment=wheel" in capsys.readouterr().out
    bad = tmp_path / "bad.cfg"
    bad.write_text("[environment]\nname=wheel\n", encoding="utf-8")
    assert main(["validate", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.cfg")]) == 2
    capsys.readouterr()


def test_cli_run_writes_files(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    path = tmp_path / "run.cfg"
    path.write_text(
        "[environment]\nname=wheel\ndelta=0.5\nhorizon=30\n"
        '[agent "LinGreedy"]\n[run]\ntrials=2\nout=results\n',
        encoding="utf-8",
    )
    assert main(["run", str(path)]) == 0
    out = capsys.readouterr().out
    assert "LinGreedy: mean cumulative regret" in out
    assert "wrote 7 files to results" in out
    assert (tmp_path / "results" / "summary.csv").exists()


def test_cli_runtime_failure_exits_one(tmp_path, capsys, monkeypatch):
    path = tmp_path / "run.cfg"
    path.write_text(GOOD, encoding="utf-8")

    def boom(*a, **kw):
        raise RuntimeError("disk full")

    monkeypatch.setattr("banditbench.cli.run_benchmark", boom)
    assert main(["run", str(path)]) == 1
    assert "disk full" in capsys.readouterr().err
