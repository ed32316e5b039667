"""Run a parsed benchmark config and emit CSV results.

Each agent preset runs ``trials`` paired trials (trial i uses seed
``run.seed + i`` for environment realization and agent randomness alike), a
Uniform baseline is appended when the config omits it, and every agent's
regret is reported raw and normalized to percent of Uniform's mean.  Output
files are a per-trial step trace, a per-agent mean regret curve, and one
summary table; all numeric cells use shortest round-trip float formatting so
reruns of the same config byte-match (wall time excepted).
"""

from __future__ import annotations

import concurrent.futures
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .config import AgentSpec, BenchmarkConfig, ConfigError
from .core import (
    Environment,
    ExperimentReport,
    RegretTrace,
    normalize_report,
    regret_curve,
    report_from_traces,
    run_trial,
)
from .envs import (
    ConstantFeatureEnv,
    DatasetSpec,
    LinearConfig,
    SampledLinearBandit,
    WheelBandit,
    WheelConfig,
    dataset_load,
)
from .presets import get_preset

WARMUP_PULLS = 3

SUMMARY_HEADER = (
    "agent,environment,mean_cum_regret,stderr_cum,mean_simple_regret,"
    "stderr_simple,normalized_cum,normalized_simple,wall_time_seconds"
)


def build_env_factory(config: BenchmarkConfig) -> Callable[[int], Environment]:
    """Environment factory honoring the run horizon; raises ConfigError."""
    env = dict(config.environment)
    name = env.pop("name")
    constant = env.pop("constant_feature", False)
    run_horizon = config.run.horizon
    if run_horizon is not None and "horizon" not in env and name != "dataset":
        env["horizon"] = run_horizon
    try:
        if name == "wheel":
            cfg = WheelConfig(**env)
            factory = lambda seed: WheelBandit(cfg, seed)
        elif name == "linear":
            cfg = LinearConfig(**env)
            factory = lambda seed: SampledLinearBandit(cfg, seed)
        else:
            spec = DatasetSpec(**env)
            base = dataset_load(spec)
            factory = lambda seed: base.shuffled(seed)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"environment setup failed: {exc}") from exc
    if constant:
        return lambda seed: ConstantFeatureEnv(factory(seed))
    return factory


def _agent_specs(config: BenchmarkConfig) -> list[AgentSpec]:
    specs = list(config.agents)
    if not any(s.preset == "Uniform" for s in specs):
        specs.append(AgentSpec(preset="Uniform", overrides={}, line=0))
    return specs


def _resolve_horizon(config: BenchmarkConfig, probe: Environment) -> int:
    horizon = config.run.horizon
    if horizon is None:
        return probe.horizon
    if horizon > probe.horizon:
        raise ConfigError(
            f"run horizon {horizon} exceeds the environment's {probe.horizon} steps"
        )
    return horizon


def _run_one(
    config: BenchmarkConfig, preset_name: str, overrides: dict, trial: int
) -> tuple[RegretTrace, float]:
    """One (agent, trial) cell; self-contained so it can run in a worker."""
    env_factory = build_env_factory(config)
    seed = config.run.seed + trial
    env = env_factory(seed)
    horizon = _resolve_horizon(config, env)
    agent = get_preset(preset_name).make(
        env.dim, env.num_actions, horizon, seed, overrides
    )
    start = time.perf_counter()
    trace = run_trial(env, agent, seed, horizon, WARMUP_PULLS)
    return trace, time.perf_counter() - start


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    horizon: int
    reports: list[ExperimentReport]
    normalized: list[ExperimentReport]

    def report_pairs(self) -> list[tuple[ExperimentReport, ExperimentReport]]:
        return list(zip(self.reports, self.normalized))


def run_benchmark(
    config: BenchmarkConfig, progress: Optional[Callable[[str], None]] = None
) -> BenchmarkResult:
    """Execute every agent block (plus Uniform) and normalize the reports."""
    say = progress or (lambda msg: None)
    specs = _agent_specs(config)
    env_factory = build_env_factory(config)
    probe = env_factory(config.run.seed)
    horizon = _resolve_horizon(config, probe)
    trials = config.run.trials

    reports: list[ExperimentReport] = []
    if config.run.workers > 1:
        tasks = [(ai, t) for ai in range(len(specs)) for t in range(trials)]
        cells: dict[tuple[int, int], tuple[RegretTrace, float]] = {}
        with concurrent.futures.ProcessPoolExecutor(config.run.workers) as pool:
            futures = {
                pool.submit(_run_one, config, specs[ai].preset, specs[ai].overrides, t): (ai, t)
                for ai, t in tasks
            }
            for fut in concurrent.futures.as_completed(futures):
                cells[futures[fut]] = fut.result()
        for ai, spec in enumerate(specs):
            traces = [cells[(ai, t)][0] for t in range(trials)]
            wall = sum(cells[(ai, t)][1] for t in range(trials))
            reports.append(report_from_traces(traces, config.run.seed, wall))
            say(f"{spec.preset}: mean cumulative regret "
                f"{reports[-1].mean_cum_regret:.4f} ({trials} trials, {wall:.1f}s)")
    else:
        for spec in specs:
            traces = []
            wall = 0.0
            for t in range(trials):
                seed = config.run.seed + t
                env = env_factory(seed)
                agent = get_preset(spec.preset).make(
                    env.dim, env.num_actions, horizon, seed, spec.overrides
                )
                start = time.perf_counter()
                traces.append(run_trial(env, agent, seed, horizon, WARMUP_PULLS))
                wall += time.perf_counter() - start
            reports.append(report_from_traces(traces, config.run.seed, wall))
            say(f"{spec.preset}: mean cumulative regret "
                f"{reports[-1].mean_cum_regret:.4f} ({trials} trials, {wall:.1f}s)")

    uniform = next(r for r in reports if r.agent == "Uniform")
    normalized = [normalize_report(r, uniform) for r in reports]
    return BenchmarkResult(config, horizon, reports, normalized)


def _fmt(x) -> str:
    return repr(float(x))


def sanitize_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", name).strip("_")


def emit_results(result: BenchmarkResult, out_dir) -> list[Path]:
    """Write trace, regret-curve, and summary CSVs; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for report in result.reports:
        san = sanitize_name(report.agent)
        for i, trace in enumerate(report.traces):
            path = out / f"trace_{san}_{i}.csv"
            inst = trace.instantaneous_regret()
            lines = ["trial,step,action,realized_reward,optimal_expected_reward,instantaneous_regret"]
            for step in range(len(trace)):
                lines.append(
                    f"{i},{step},{trace.actions[step]},{_fmt(trace.realized_rewards[step])},"
                    f"{_fmt(trace.optimal_rewards[step])},{_fmt(inst[step])}"
                )
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(path)

        mean, err = regret_curve(report.traces)
        path = out / f"regret_curve_{san}.csv"
        lines = ["step,mean_cum_regret,stderr"]
        for step in range(len(mean)):
            lines.append(f"{step},{_fmt(mean[step])},{_fmt(err[step])}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    lines = [SUMMARY_HEADER]
    for raw, norm in result.report_pairs():
        lines.append(
            f"{raw.agent},{raw.environment},{_fmt(raw.mean_cum_regret)},"
            f"{_fmt(raw.stderr_cum)},{_fmt(raw.mean_simple_regret)},"
            f"{_fmt(raw.stderr_simple)},{_fmt(norm.mean_cum_regret)},"
            f"{_fmt(norm.mean_simple_regret)},{_fmt(raw.wall_time_seconds)}"
        )
    path = out / "summary.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(path)
    return written


def format_summary_table(result: BenchmarkResult) -> str:
    """Human-readable stdout table; wall time is normalized to the RMS preset
    when one is in the run."""
    rms = next((r for r in result.reports if r.agent == "RMS"), None)
    header = f"{'agent':<24}{'cum regret':>14}{'simple':>12}{'norm cum':>12}{'wall s':>10}"
    rows = [header]
    if rms is not None:
        rows[0] += f"{'wall/RMS':>10}"
    for raw, norm in result.report_pairs():
        row = (
            f"{raw.agent:<24}{raw.mean_cum_regret:>14.4f}{raw.mean_simple_regret:>12.4f}"
            f"{norm.mean_cum_regret:>12.2f}{raw.wall_time_seconds:>10.2f}"
        )
        if rms is not None and rms.wall_time_seconds > 0:
            row += f"{raw.wall_time_seconds / rms.wall_time_seconds:>10.2f}"
        rows.append(row)
    return "\n".join(rows)
