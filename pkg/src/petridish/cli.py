"""Command-line harness: ``run``, ``benchmark``, ``replay``, ``serve``.

Every flag can also be supplied through an environment variable named
``PETRIDISH_<FLAG>`` (flag upper-cased, dashes to underscores, e.g.
``PETRIDISH_SCENARIO``, ``PETRIDISH_FRAME_SKIP``).  Explicit flags win
over environment variables, which win over built-in defaults.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Callable, Optional, Sequence

from scipy.stats import trim_mean

from .env import Env, env_reset, env_step, make_env, make_policy
from .errors import SimulationError
from .scenarios import scenario_library
from .trajectory import TrajectoryWriter, replay_trajectory

ENV_PREFIX = "PETRIDISH_"


def _env_override(flag: str) -> Optional[str]:
    return os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))


def _resolve(args: argparse.Namespace, flag: str, convert: Callable, default):
    """Flag value > PETRIDISH_* env var > default."""
    value = getattr(args, flag.replace("-", "_"))
    if value is not None:
        return value
    raw = _env_override(flag)
    if raw is not None:
        return convert(raw)
    return default


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", help="preset name (see `petridish list`)")
    parser.add_argument("--seed", type=int, help="base seed (default 0)")
    parser.add_argument("--frame-skip", type=int, help="ticks per decision (default 4)")
    parser.add_argument(
        "--obs", choices=("pixel", "symbolic"), help="observation mode (default pixel)"
    )
    parser.add_argument(
        "--noise-std", type=float, help="actuation noise std (default: scenario's)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="petridish",
        description="Continual-RL arena: run policies, benchmark, replay, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a policy and record a trajectory")
    _add_common(p_run)
    p_run.add_argument("--steps", type=int, help="number of env steps (default 1000)")
    p_run.add_argument(
        "--episodes", type=int, help="stop after this many finished episodes instead"
    )
    p_run.add_argument(
        "--policy", help="random | stationary | bot:<kind> (default random)"
    )
    p_run.add_argument("--out", help="write a trajectory file here")
    p_run.add_argument(
        "--hash-every", type=int, default=50, help="state-hash cadence in the record"
    )

    p_bench = sub.add_parser("benchmark", help="measure steps/s with a random agent")
    _add_common(p_bench)
    p_bench.add_argument("--trials", type=int, help="independent trials (default 10)")
    p_bench.add_argument(
        "--seconds", type=float, help="duration of each trial (default 2.0)"
    )

    p_replay = sub.add_parser("replay", help="verify a recorded trajectory")
    p_replay.add_argument("record", help="trajectory file to replay")

    p_serve = sub.add_parser("serve", help="expose the environment over websockets")
    _add_common(p_serve)
    p_serve.add_argument("--port", type=int, help="listen port (default 8765)")
    p_serve.add_argument(
        "--mode", choices=("agent", "human"), help="session mode (default human)"
    )
    p_serve.add_argument("--out", help="log the session trajectory here")
    p_serve.add_argument(
        "--snapshot-cadence", type=int, help="ticks between snapshots (default 2)"
    )

    sub.add_parser("list", help="list the built-in scenario presets")
    return parser


def _make_env_from_args(args: argparse.Namespace) -> Env:
    scenario = _resolve(args, "scenario", str, None)
    if scenario is None:
        raise SimulationError("--scenario is required (or set PETRIDISH_SCENARIO)")
    return make_env(
        scenario,
        seed=_resolve(args, "seed", int, 0),
        frame_skip=_resolve(args, "frame-skip", int, 4),
        obs_mode=_resolve(args, "obs", str, "pixel"),
        noise_std=_resolve(args, "noise-std", float, None),
    )


# -- run ----------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    env = _make_env_from_args(args)
    steps = _resolve(args, "steps", int, 1000)
    episodes_wanted = args.episodes
    policy_name = _resolve(args, "policy", str, "random")
    out = _resolve(args, "out", str, None)
    if steps < 0:
        raise SimulationError("--steps must be >= 0")
    if episodes_wanted is not None and env.scenario.mode != "episodic":
        raise SimulationError("--episodes only applies to episodic scenarios")

    policy = make_policy(policy_name, env.seed)
    if env.scenario.mode == "episodic":
        env_reset(env)
    writer = (
        TrajectoryWriter(out, env, policy=policy_name, hash_every=args.hash_every)
        if out
        else None
    )

    total_reward = 0.0
    deaths = 0
    steps_done = 0
    episode_returns: list[float] = []
    episode_reward = 0.0
    t0 = time.perf_counter()
    try:
        while True:
            if episodes_wanted is not None:
                if len(episode_returns) >= episodes_wanted:
                    break
            elif steps_done >= steps:
                break
            action = policy(env)
            result = env_step(env, action)
            if writer:
                writer.append(action, result)
            total_reward += result.reward
            episode_reward += result.reward
            deaths += result.info["deaths"]
            steps_done += 1
            if result.terminated or result.truncated:
                if env.scenario.mode == "episodic":
                    episode_returns.append(episode_reward)
                    episode_reward = 0.0
                    more = (
                        len(episode_returns) < episodes_wanted
                        if episodes_wanted is not None
                        else steps_done < steps
                    )
                    if more:
                        env_reset(env)
    finally:
        if writer:
            writer.close()
    elapsed = time.perf_counter() - t0

    print(f"scenario:      {env.scenario.name} (seed {env.seed}, policy {policy_name})")
    print(f"steps:         {steps_done} ({env.frame_skip} ticks each)")
    print(f"total reward:  {total_reward:.6f}")
    if episode_returns:
        mean = sum(episode_returns) / len(episode_returns)
        print(f"episodes:      {len(episode_returns)} (mean return {mean:.6f})")
    print(f"deaths:        {deaths}")
    rate = steps_done / elapsed if elapsed > 0 else float("inf")
    print(f"throughput:    {rate:.0f} steps/s ({elapsed:.2f}s)")
    if out:
        print(f"trajectory:    {out}")
    return 0


# -- benchmark ------------------------------------------------------------------


def run_benchmark(
    scenario: str,
    trials: int = 10,
    seconds: float = 2.0,
    seed: int = 0,
    frame_skips: Sequence[int] = (1, 4),
    obs_mode: str = "pixel",
) -> dict[int, dict[str, float]]:
    """Measure random-agent throughput; returns, per frame skip, the
    interquartile mean of steps/s and ticks/s across trials."""
    if trials < 1:
        raise SimulationError("benchmark needs at least one trial")
    report: dict[int, dict[str, float]] = {}
    for fs in frame_skips:
        rates: list[float] = []
        for trial in range(trials):
            env = make_env(
                scenario, seed=seed + trial, frame_skip=fs, obs_mode=obs_mode
            )
            policy = make_policy("random", seed + trial)
            if env.scenario.mode == "episodic":
                env_reset(env)
            # Warm up allocations and caches outside the timed window.
            for _ in range(20):
                env_step(env, policy(env))
            count = 0
            t0 = time.perf_counter()
            while True:
                result = env_step(env, policy(env))
                count += 1
                if result.terminated or result.truncated:
                    if env.scenario.mode == "episodic":
                        env_reset(env)
                elapsed = time.perf_counter() - t0
                if elapsed >= seconds:
                    break
            rates.append(count / elapsed)
        iqm = float(trim_mean(rates, 0.25))
        report[fs] = {
            "steps_per_s": iqm,
            "ticks_per_s": iqm * fs,
            "trials": float(trials),
        }
    return report


def cmd_benchmark(args: argparse.Namespace) -> int:
    scenario = _resolve(args, "scenario", str, "full")
    trials = _resolve(args, "trials", int, 10)
    seconds = _resolve(args, "seconds", float, 2.0)
    report = run_benchmark(
        scenario,
        trials=trials,
        seconds=seconds,
        seed=_resolve(args, "seed", int, 0),
        obs_mode=_resolve(args, "obs", str, "pixel"),
    )
    print(f"benchmark {scenario}: {trials} trials x {seconds:.1f}s (random agent)")
    for fs, row in report.items():
        print(
            f"  frame_skip {fs}: IQM {row['steps_per_s']:8.1f} steps/s "
            f"({row['ticks_per_s']:.0f} ticks/s)"
        )
    return 0


# -- replay ---------------------------------------------------------------------


def cmd_replay(args: argparse.Namespace) -> int:
    report = replay_trajectory(args.record)
    print(report.message)
    return 0 if report.ok else 1


# -- serve ----------------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    import asyncio

    from .server import serve

    scenario = _resolve(args, "scenario", str, "full")
    asyncio.run(
        serve(
            scenario=scenario,
            port=_resolve(args, "port", int, 8765),
            mode=_resolve(args, "mode", str, "human"),
            seed=_resolve(args, "seed", int, 0),
            # None lets serve() pick the mode-appropriate default
            # (human: frame_skip 1 + symbolic; agent: 4 + pixel).
            frame_skip=_resolve(args, "frame-skip", int, None),
            obs_mode=_resolve(args, "obs", str, None),
            noise_std=_resolve(args, "noise-std", float, None),
            out=_resolve(args, "out", str, None),
            snapshot_cadence=_resolve(args, "snapshot-cadence", int, 2),
        )
    )
    return 0


def cmd_list(args: argparse.Namespace) -> int:
    for name, spec in scenario_library().items():
        steps = f"{spec.max_steps} steps" if spec.max_steps else "unbounded"
        print(f"{name:24s} {spec.mode:9s} {steps:12s} {spec.description}")
    return 0


_COMMANDS = {
    "run": cmd_run,
    "benchmark": cmd_benchmark,
    "replay": cmd_replay,
    "serve": cmd_serve,
    "list": cmd_list,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
