"""Local lockstep episode dump in the wire protocol's response format.

Plays a scripted episode in process and emits exactly the JSON lines the
server would answer for the same reset/step sequence.  Remote clients use
this as the ground truth for differential tests.
"""

from __future__ import annotations

import argparse
import json
import sys

from .server import result_payload
from .world import ActionId, GridWorld, ScenarioConfig, parse_scenario_config


def play(config: ScenarioConfig, seed: int, steps: list) -> list:
    """Reset + scripted steps; returns one payload dict per protocol reply.

    ``steps`` is a list of {"red": [...], "blue": [...]} action-name dicts.
    Play stops early when the episode ends.
    """
    world = GridWorld(config)
    _, obs = world.reset(seed)
    out = [result_payload(obs, {"red": 0.0, "blue": 0.0}, False, None)]
    for entry in steps:
        if world.done:
            break
        red = [ActionId(a) for a in entry["red"]]
        blue = [ActionId(a) for a in entry["blue"]]
        result = world.step(red, blue)
        out.append(result_payload(result.observation, result.reward, result.done, result.winner))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gapsim-lockstep", description=__doc__)
    ap.add_argument("--scenario", help="scenario config file (key=value lines)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--script", required=True,
                    help='JSON file: {"steps": [{"red": [...], "blue": [...]}, ...]}')
    ap.add_argument("--out", help="output JSONL path (default stdout)")
    args = ap.parse_args(argv)
    if args.scenario:
        with open(args.scenario) as fh:
            config = parse_scenario_config(fh.read())
    else:
        config = ScenarioConfig()
    with open(args.script) as fh:
        steps = json.load(fh)["steps"]
    payloads = play(config, args.seed, steps)
    lines = "".join(json.dumps(p) + "\n" for p in payloads)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(lines)
    else:
        sys.stdout.write(lines)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
