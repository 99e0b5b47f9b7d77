"""Command-line entry points: `bench` and `replay`."""

from __future__ import annotations

import argparse
import sys

from .bench import compare_markov, curves_csv, replay, run_random_actions
from .learning import LearnerConfig
from .world import ScenarioConfig, parse_scenario_config


def bench_main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="bench", description="gapsim benchmarks")
    sub = ap.add_subparsers(dest="command", required=True)

    p_random = sub.add_parser("random", help="random-action throughput benchmark")
    p_random.add_argument("--agents", type=int, required=True)
    p_random.add_argument("--actions", type=int, required=True)
    p_random.add_argument("--seed", type=int, default=0)
    p_random.add_argument("--out", help="write the report as CSV")
    p_random.add_argument("--mode", choices=("base", "advanced"), default="advanced")
    p_random.add_argument("--mirror", action="store_true",
                          help="run the imperative mirror instead of the rule engine")
    p_random.add_argument("--parallel", type=int, default=1,
                          help="N independent environments in separate processes")

    p_markov = sub.add_parser("markov-compare",
                              help="train Markovian vs non-Markovian arms")
    p_markov.add_argument("--budget", type=int, required=True, help="training epochs per arm")
    p_markov.add_argument("--interval", type=int, required=True, help="epochs between evaluations")
    p_markov.add_argument("--seed", type=int, default=0)
    p_markov.add_argument("--games", type=int, default=500, help="evaluation games per point")
    p_markov.add_argument("--scenario", help="scenario config file (key=value lines)")
    p_markov.add_argument("--out-prefix", default="markov_compare",
                          help="writes <prefix>_markov.csv and <prefix>_non_markov.csv")

    args = ap.parse_args(argv)
    if args.command == "random":
        if args.parallel > 1:
            from .bench import run_random_actions_parallel

            report = run_random_actions_parallel(
                args.agents, args.actions, args.seed, args.parallel,
                mode=args.mode, use_mirror=args.mirror,
            )
        else:
            report = run_random_actions(
                args.agents, args.actions, args.seed, mode=args.mode, use_mirror=args.mirror
            )
        text = report.csv()
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        sys.stdout.write(text)
        return 0

    if args.scenario:
        with open(args.scenario) as fh:
            config = parse_scenario_config(fh.read())
    else:
        config = ScenarioConfig(
            mode="advanced",
            agents_per_team=2,
            slow_agents=frozenset({"red-agent-2", "blue-agent-2"}),
        )
    curve_m, curve_nm = compare_markov(
        config, args.budget, args.interval, args.seed,
        learner=LearnerConfig(), eval_games=args.games,
    )
    for suffix, curve in (("markov", curve_m), ("non_markov", curve_nm)):
        path = f"{args.out_prefix}_{suffix}.csv"
        with open(path, "w") as fh:
            fh.write(curves_csv(curve))
        print(f"wrote {path}")
    return 0


def replay_main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="replay", description="scripted episode replay")
    ap.add_argument("--program", required=True, help="rules file (.gap)")
    ap.add_argument("--graph", required=True, help="graph+facts file (.kg)")
    ap.add_argument("--script", required=True, help="action script file (.act)")
    ap.add_argument("--trace", required=True, help="output trace CSV path")
    ap.add_argument("--final-state", help="optional output path for the final bounds")
    args = ap.parse_args(argv)
    with open(args.program) as fh:
        program_text = fh.read()
    with open(args.graph) as fh:
        graph_text = fh.read()
    with open(args.script) as fh:
        script_text = fh.read()
    trace, final = replay(
        program_text, graph_text, script_text,
        program_file=args.program, graph_file=args.graph, script_file=args.script,
    )
    with open(args.trace, "w") as fh:
        fh.write(trace)
    if args.final_state:
        with open(args.final_state, "w") as fh:
            fh.write("\n".join(final) + "\n")
    print(f"wrote {args.trace} ({trace.count(chr(10)) - 1} rows)")
    return 0
