"""Shared fixtures: the scripted reference episode and differential runners."""

from __future__ import annotations

import random

import gapsim as g
from gapsim.mirror import MirrorGame
from gapsim.world import ADVANCED_ACTIONS, BASE_ACTIONS, ActionId, GridWorld, ScenarioConfig

# The published trace excerpt this build reproduces: red walks down the
# first column (24 -> 16 -> 8 -> 0), blue fires left along the bottom row
# (bullet 3 -> 2 -> 1 -> 0), red doubles back up to 16 and evades.
EXCERPT_ROWS = [
    "16,red-agent-1,moveDown,[0.0,0.0],[1.0,1.0],m_Down_on",
    "17,red-agent-1,moveDown,[1.0,1.0],[0.0,0.0],m_Down_off",
    "17,(red-agent-1,16),atLoc,[0.0,1.0],[1.0,1.0],m_Set_location",
    "17,(red-agent-1,24),atLoc,[1.0,1.0],[0.0,0.0],m_Rem_location",
    "17,red-agent-1,moveDown,[0.0,0.0],[1.0,1.0],m_Down_on",
    "18,red-agent-1,moveDown,[1.0,1.0],[0.0,0.0],m_Down_off",
    "18,(red-agent-1,8),atLoc,[0.0,1.0],[1.0,1.0],m_Set_location",
    "18,(red-agent-1,16),atLoc,[1.0,1.0],[0.0,0.0],m_Rem_location",
    "18,blue-agent-1,shootLeftB,[0.0,1.0],[1.0,1.0],s_Left_on",
    "18,(blue-bullet-1,3),atLoc,[0.0,1.0],[1.0,1.0],s_Set_location",
    "18,(blue-bullet-1,left),direction,[0.0,1.0],[1.0,1.0],s_Set_dir",
    "18,red-agent-1,moveDown,[0.0,0.0],[1.0,1.0],m_Down_on",
    "19,red-agent-1,moveDown,[1.0,1.0],[0.0,0.0],m_Down_off",
    "19,(red-agent-1,0),atLoc,[0.0,1.0],[1.0,1.0],m_Set_location",
    "19,(red-agent-1,8),atLoc,[1.0,1.0],[0.0,0.0],m_Rem_location",
    "19,blue-agent-1,shootLeftB,[1.0,1.0],[0.0,0.0],s_Left_off",
    "19,(blue-bullet-1,3),atLoc,[1.0,1.0],[0.0,0.0],s_Rem_location",
    "19,(blue-bullet-1,2),atLoc,[0.0,1.0],[1.0,1.0],s_Set_location",
    "19,red-agent-1,moveUp,[0.0,0.0],[1.0,1.0],m_Up_on",
    "20,red-agent-1,moveUp,[1.0,1.0],[0.0,0.0],m_Up_off",
    "20,(red-agent-1,8),atLoc,[0.0,0.0],[1.0,1.0],m_Set_location",
    "20,(red-agent-1,0),atLoc,[1.0,1.0],[0.0,0.0],m_Rem_location",
    "20,(blue-bullet-1,2),atLoc,[1.0,1.0],[0.0,0.0],s_Rem_location",
    "20,(blue-bullet-1,1),atLoc,[0.0,1.0],[1.0,1.0],s_Set_location",
    "20,red-agent-1,moveUp,[0.0,0.0],[1.0,1.0],m_Up_on",
    "21,red-agent-1,moveUp,[1.0,1.0],[0.0,0.0],m_Up_off",
    "21,(red-agent-1,16),atLoc,[0.0,0.0],[1.0,1.0],m_Set_location",
    "21,(red-agent-1,8),atLoc,[1.0,1.0],[0.0,0.0],m_Rem_location",
    "21,(blue-bullet-1,1),atLoc,[1.0,1.0],[0.0,0.0],s_Rem_location",
    "21,(blue-bullet-1,0),atLoc,[0.0,1.0],[1.0,1.0],s_Set_location",
]


def excerpt_pairs() -> set:
    pairs = set()
    for row in EXCERPT_ROWS:
        parts = row.split(",")
        if parts[1].startswith("("):
            pairs.add((parts[1] + "," + parts[2], parts[3]))
        else:
            pairs.add((parts[1], parts[2]))
    return pairs


def scripted_config() -> ScenarioConfig:
    return ScenarioConfig(mode="advanced", max_steps=23)


SCRIPT = {
    16: (["moveDown"], []),
    17: (["moveDown"], []),
    18: (["moveDown"], ["shootLeft"]),
    19: (["moveUp"], []),
    20: (["moveUp"], []),
}

SCRIPT_POSITIONS = {"red-agent-1": 24, "blue-agent-1": 4}


def run_scripted_episode() -> GridWorld:
    """Drive the reference episode through the environment facade to its end."""
    world = GridWorld(scripted_config(), initial_positions=SCRIPT_POSITIONS)
    world.reset(0)
    t = 0
    while not world.done:
        red, blue = SCRIPT.get(t, ([], []))
        world.step(
            [ActionId(a) for a in red] or [ActionId.noop],
            [ActionId(a) for a in blue] or [ActionId.noop],
        )
        t += 1
    return world


def trace_rows(records) -> list:
    return [f"{r.t},{r.subject},{r.label},{r.old},{r.new},{r.rule}" for r in records]


def world_snapshot(world: GridWorld) -> dict:
    state = world.state
    return {
        "positions": {
            a: p
            for a, p in sorted(state.positions.items())
            if a in state.health and state.health[a] == g.TRUE
        },
        "alive": {a: (h == g.TRUE) for a, h in sorted(state.health.items())},
        "ammo": dict(sorted(state.ammo.items())),
        "bullets": dict(sorted(state.bullets.items())),
    }


def random_scenario(rnd: random.Random, force_mode=None) -> ScenarioConfig:
    mode = force_mode or rnd.choice(["base", "advanced"])
    n = rnd.choice([1, 2, 3])
    slow = frozenset()
    if mode == "advanced" and rnd.random() < 0.5:
        slow = frozenset(
            {f"red-agent-{rnd.randint(1, n)}", f"blue-agent-{rnd.randint(1, n)}"}
        )
    obstacles = frozenset(rnd.sample(range(8, 56), k=rnd.randint(0, 6)))
    return ScenarioConfig(
        mode=mode,
        agents_per_team=n,
        max_steps=rnd.choice([30, 60]),
        slow_agents=slow,
        obstacles=obstacles,
    )


def differential_episode(cfg: ScenarioConfig, rnd: random.Random, max_steps: int = 60):
    """Run engine and mirror in lockstep; returns total steps, raises on drift."""
    world = GridWorld(cfg)
    world.reset(0)
    mirror = MirrorGame(cfg)
    mirror.reset(0)
    acts = ADVANCED_ACTIONS if cfg.mode == "advanced" else BASE_ACTIONS
    steps = 0
    while not world.done and steps < max_steps:
        red = [rnd.choice(acts) for _ in range(cfg.agents_per_team)]
        blue = [rnd.choice(acts) for _ in range(cfg.agents_per_team)]
        r1 = world.step(red, blue)
        r2 = mirror.step(red, blue)
        ws = world_snapshot(world)
        ms = mirror.snapshot()
        ms["bullets"] = dict(sorted(ms["bullets"].items()))
        assert ws == ms, f"state drift at step {steps}: {ws} vs {ms}"
        assert r1.reward == r2.reward, f"reward drift at step {steps}: {r1.reward} vs {r2.reward}"
        assert (r1.done, r1.winner) == (r2.done, r2.winner)
        steps += 1
    return steps
