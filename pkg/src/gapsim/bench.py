"""Benchmarking, the Markov-vs-non-Markov comparison, and scripted replay.

The benchmark drives the game with uniform random actions, restarting
episodes as they end, and reports wall time, throughput, and peak process
memory.  A hand-written imperative mirror of the same game can be run under
the identical load as a self-baseline.  Replay runs a scripted episode from
rule/graph/script files and emits the full explainable trace.
"""

from __future__ import annotations

import re
import resource
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import EpisodeDriver, export_trace
from .interp import Interpretation
from .lang import AnnotatedLiteral, Literal, Program
from .lattice import BOTTOM, TRUE
from .learning import LearnerConfig, train
from .mirror import MirrorGame
from .parser import ParseError, SourceSpan, merge_programs, parse_program
from .world import GridWorld, ScenarioConfig


@dataclass
class BenchReport:
    agents_per_team: int
    total_actions: int
    wall_time_seconds: float
    peak_memory_bytes: int
    actions_per_second: float
    engine: str = "rules"  # "rules" or "mirror"

    def csv(self) -> str:
        header = (
            "agents_per_team,total_actions,wall_time_seconds,"
            "peak_memory_bytes,actions_per_second,engine"
        )
        row = (
            f"{self.agents_per_team},{self.total_actions},{self.wall_time_seconds},"
            f"{self.peak_memory_bytes},{self.actions_per_second},{self.engine}"
        )
        return header + "\n" + row + "\n"


def _peak_rss_bytes() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def _parallel_worker(args) -> "BenchReport":
    agents_per_team, total_actions, seed, mode, max_steps, use_mirror = args
    return run_random_actions(agents_per_team, total_actions, seed,
                              mode=mode, max_steps=max_steps, use_mirror=use_mirror)


def run_random_actions_parallel(
    agents_per_team: int,
    total_actions: int,
    seed: int,
    workers: int,
    mode: str = "advanced",
    use_mirror: bool = False,
) -> BenchReport:
    """Aggregate throughput over independent environments in separate processes."""
    import multiprocessing as mp

    per = max(1, total_actions // workers)
    jobs = [(agents_per_team, per, seed + i, mode, 200, use_mirror) for i in range(workers)]
    t0 = time.perf_counter()
    with mp.Pool(workers) as pool:
        reports = pool.map(_parallel_worker, jobs)
    wall = time.perf_counter() - t0
    done = sum(r.total_actions for r in reports)
    return BenchReport(
        agents_per_team=agents_per_team,
        total_actions=done,
        wall_time_seconds=wall,
        peak_memory_bytes=max(r.peak_memory_bytes for r in reports),
        actions_per_second=done / wall,
        engine=reports[0].engine,
    )


def run_random_actions(
    agents_per_team: int,
    total_actions: int,
    seed: int,
    mode: str = "advanced",
    max_steps: int = 200,
    use_mirror: bool = False,
) -> BenchReport:
    """Uniform random actions until ``total_actions`` are consumed.

    Each step consumes one action per agent on both teams; episodes restart
    on termination.  Peak memory is read from process accounting every 1000
    actions.
    """
    if agents_per_team < 1 or total_actions < 1:
        raise ValueError("agents_per_team and total_actions must be >= 1")
    config = ScenarioConfig(mode=mode, agents_per_team=agents_per_team, max_steps=max_steps)
    actions = config.actions()
    rng = np.random.default_rng(seed)
    game = MirrorGame(config) if use_mirror else GridWorld(config)
    game.reset(seed)
    per_step = 2 * agents_per_team
    done_actions = 0
    peak = _peak_rss_bytes()
    next_sample = 1000
    t0 = time.perf_counter()
    while done_actions < total_actions:
        idx = rng.integers(0, len(actions), size=per_step)
        red = [actions[i] for i in idx[:agents_per_team]]
        blue = [actions[i] for i in idx[agents_per_team:]]
        result = game.step(red, blue)
        done_actions += per_step
        if done_actions >= next_sample:
            peak = max(peak, _peak_rss_bytes())
            next_sample += 1000
        if result.done:
            game.reset(seed)
    wall = time.perf_counter() - t0
    peak = max(peak, _peak_rss_bytes())
    return BenchReport(
        agents_per_team=agents_per_team,
        total_actions=done_actions,
        wall_time_seconds=wall,
        peak_memory_bytes=peak,
        actions_per_second=done_actions / wall,
        engine="mirror" if use_mirror else "rules",
    )


def compare_markov(
    config: ScenarioConfig,
    budget: int,
    interval: int,
    seed: int,
    learner: Optional[LearnerConfig] = None,
    eval_games: int = 500,
):
    """Train a Markovian and a non-Markovian arm on the same scenario.

    The two arms differ only in the non_markovian observation flag; each is
    evaluated every ``interval`` epochs over ``eval_games`` games.  Returns
    (markov_curve, non_markov_curve), each a list of
    (epoch, win_rate, avg_reward).
    """
    from dataclasses import replace

    learner = learner or LearnerConfig()
    markov_cfg = replace(config, non_markovian=False)
    non_markov_cfg = replace(config, non_markovian=True)
    res_m = train(markov_cfg, learner, budget, seed,
                  eval_interval=interval, eval_games=eval_games)
    res_nm = train(non_markov_cfg, learner, budget, seed,
                   eval_interval=interval, eval_games=eval_games)
    return res_m.curve, res_nm.curve


def curves_csv(curve: list) -> str:
    lines = ["epoch,win_rate,avg_reward"]
    for epoch, win_rate, avg_reward in curve:
        lines.append(f"{epoch},{win_rate},{avg_reward}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# action scripts and replay
# ---------------------------------------------------------------------------

_SCRIPT_LINE = re.compile(
    r"^\s*(\d+)\s*:\s*red\s*=\s*\[([^\]]*)\]\s*blue\s*=\s*\[([^\]]*)\]\s*$"
)


def parse_action_script(text: str, file: str = "<script>") -> dict:
    """One line per timestep: ``t: red=[a1,...] blue=[b1,...]``.

    Timesteps not listed mean no actions.  Returns {t: (red, blue)} with
    action names as strings.
    """
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SCRIPT_LINE.match(line)
        if not m:
            raise ParseError("malformed script line", SourceSpan(file, line_no, 1))
        t = int(m.group(1))
        red = [a.strip() for a in m.group(2).split(",") if a.strip()]
        blue = [a.strip() for a in m.group(3).split(",") if a.strip()]
        if t in out:
            raise ParseError(f"duplicate timestep {t}", SourceSpan(file, line_no, 1))
        out[t] = (red, blue)
    return out


def format_action_script(script: dict) -> str:
    lines = []
    for t in sorted(script):
        red, blue = script[t]
        lines.append(f"{t}: red=[{','.join(red)}] blue=[{','.join(blue)}]")
    return "\n".join(lines) + "\n"


_ACTION_FACTS = {
    "moveUp": ("moveDir", "up"),
    "moveDown": ("moveDir", "down"),
    "moveLeft": ("moveDir", "left"),
    "moveRight": ("moveDir", "right"),
    "shootUp": ("shootUp", None),
    "shootDown": ("shootDown", None),
    "shootLeft": ("shootLeft", None),
    "shootRight": ("shootRight", None),
    "noop": None,
}


def _rosters(program: Program) -> dict:
    teams = {"red": [], "blue": []}
    for src, dst, pred in sorted(program.graph.edges):
        if pred == "team" and dst in teams:
            teams[dst].append(src)
    return teams


def replay(program_text: str, graph_text: str, script_text: str,
           program_file: str = "program.gap", graph_file: str = "graph.kg",
           script_file: str = "script.act"):
    """Run a scripted episode; returns (trace_csv, final_state_lines).

    The script's action names map to the game's volatile action facts
    (moveDir and the shoot predicates); agents are the program's team
    members in name order.  The final state lists every non-bottom bound at
    the last timepoint, one ``literal bound`` line each, sorted.
    """
    program = merge_programs(
        parse_program(program_text, program_file),
        parse_program(graph_text, graph_file),
    )
    script = parse_action_script(script_text, script_file)
    rosters = _rosters(program)
    driver = EpisodeDriver(program)
    for t in range(0, program.horizon + 1):
        red, blue = script.get(t, ((), ()))
        injections = []
        for team, acts in (("red", red), ("blue", blue)):
            agents = rosters[team]
            if len(acts) > len(agents):
                raise ValueError(f"{team} has {len(agents)} agents, got {len(acts)} actions")
            for agent, name in zip(agents, acts):
                if name not in _ACTION_FACTS:
                    raise ValueError(f"unknown action {name!r} at t={t}")
                fact = _ACTION_FACTS[name]
                if fact is None:
                    continue
                pred, arg = fact
                args = (agent,) if arg is None else (agent, arg)
                injections.append(AnnotatedLiteral(Literal(pred, args), TRUE))
        driver.run_step(injections)
    trace = export_trace(driver.records)
    final = final_state_lines(driver.interp, program.horizon)
    return trace, final


def final_state_lines(interp: Interpretation, t: int) -> list:
    out = []
    preds = set(interp.slices[t]) | set(interp.static)
    for pred in sorted(preds):
        for args in sorted(interp.entries(pred, t)):
            bound = interp._get(pred, args, t)
            if bound != BOTTOM:
                lit = Literal(pred, args)
                out.append(f"{lit}:{bound}")
    return out
