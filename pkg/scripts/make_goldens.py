#!/usr/bin/env python3
"""Regenerate the golden trajectory fixtures under tests/goldens/.

Each golden is a recorded run of a library scenario with a pinned seed and
policy.  The acceptance suite replays them bit-exactly, so they freeze the
full simulation semantics (dynamics order, RNG streams, reward arithmetic,
state hashing) across refactors.  Regenerate only when the simulation is
deliberately changed, and call that out in the commit message.

Usage:  python3 scripts/make_goldens.py
"""

from __future__ import annotations

import sys
from pathlib import Path

from petridish.env import env_reset, env_step, make_env, make_policy
from petridish.trajectory import TrajectoryWriter, replay_trajectory

GOLDENS = (
    # filename, scenario, policy, seed, steps, hash cadence
    ("mini-5-random.traj", "mini-5", "random", 7, 400, 25),
    ("full-random.traj", "full", "random", 3, 200, 25),
    ("mini-3c-stationary.traj", "mini-3c", "stationary", 1, 100, 10),
    ("mini-9-hungry.traj", "mini-9", "bot:hungry", 4, 150, 25),
)


def record(path: Path, scenario: str, policy_name: str, seed: int,
           steps: int, hash_every: int) -> None:
    env = make_env(scenario, seed=seed, frame_skip=4, obs_mode="symbolic")
    policy = make_policy(policy_name, seed)
    if env.scenario.mode == "episodic":
        env_reset(env)
    with TrajectoryWriter(
        str(path), env, policy=policy_name, hash_every=hash_every
    ) as writer:
        for _ in range(steps):
            action = policy(env)
            result = env_step(env, action)
            writer.append(action, result)
            if (result.terminated or result.truncated) and (
                env.scenario.mode == "episodic"
            ):
                env_reset(env)


def main() -> int:
    out_dir = Path(__file__).resolve().parents[1] / "tests" / "goldens"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, scenario, policy, seed, steps, hash_every in GOLDENS:
        path = out_dir / name
        record(path, scenario, policy, seed, steps, hash_every)
        report = replay_trajectory(str(path))
        status = "ok" if report.ok else f"FAILED: {report.message}"
        print(f"{name:28s} {scenario:10s} {policy:12s} "
              f"{steps:4d} steps  {path.stat().st_size:6d} B  {status}")
        if not report.ok:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
