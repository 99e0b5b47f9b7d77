"""The scripted stochastic opponent policy.

Each timestep an agent moves toward the enemy base with probability 0.7
(uniform among the legal moves that strictly reduce Manhattan distance) and
otherwise picks uniformly from the action space.  In the advanced scenario
a shot toward an aligned enemy takes precedence while ammo lasts; with no
ammo left, shoot actions are never produced.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .world import (
    ActionId,
    BASE_ACTIONS,
    DIRECTIONS,
    ScenarioConfig,
    WorldState,
    _MOVE_DIR,
)

_SHOOT_OF = {
    "up": ActionId.shootUp,
    "down": ActionId.shootDown,
    "left": ActionId.shootLeft,
    "right": ActionId.shootRight,
}
_MOVE_OF = {d: a for a, d in _MOVE_DIR.items()}

TOWARD_BASE_PROB = 0.7
RANDOM_PROB = 0.3


def reducing_moves(state: WorldState, config: ScenarioConfig, agent: str) -> list:
    """Legal moves that strictly reduce Manhattan distance to the enemy base."""
    team = "red" if agent.startswith("red-") else "blue"
    goal = config.base_of(config.enemy(team))
    pos = state.positions.get(agent)
    if pos is None:
        return []
    gr, gc = config.row_col(goal)
    r, c = config.row_col(pos)
    dist = abs(gr - r) + abs(gc - c)
    out = []
    for d in DIRECTIONS:
        n = config.neighbor(pos, d)
        if n is None or n in config.obstacles:
            continue
        nr, nc = config.row_col(n)
        if abs(gr - nr) + abs(gc - nc) < dist:
            out.append(_MOVE_OF[d])
    return out


def _aligned_shot(state: WorldState, config: ScenarioConfig, agent: str) -> Optional[ActionId]:
    """Shot toward the nearest enemy sharing a row or column, if any."""
    team = "red" if agent.startswith("red-") else "blue"
    pos = state.positions.get(agent)
    if pos is None:
        return None
    r, c = config.row_col(pos)
    best = None  # (distance, direction index)
    for enemy in config.agent_names(config.enemy(team)):
        if not state.alive(enemy):
            continue
        epos = state.positions.get(enemy)
        if epos is None:
            continue
        er, ec = config.row_col(epos)
        if er == r and ec != c:
            d = "right" if ec > c else "left"
            cand = (abs(ec - c), DIRECTIONS.index(d), d)
        elif ec == c and er != r:
            d = "up" if er > r else "down"
            cand = (abs(er - r), DIRECTIONS.index(d), d)
        else:
            continue
        if best is None or cand < best:
            best = cand
    if best is None:
        return None
    return _SHOOT_OF[best[2]]


def base_policy(
    state: WorldState,
    config: ScenarioConfig,
    agent: str,
    rng: np.random.Generator,
) -> ActionId:
    """Action for ``agent`` under the scripted opponent behavior."""
    if config.mode == "advanced" and state.ammo.get(agent, 0) > 0:
        shot = _aligned_shot(state, config, agent)
        if shot is not None:
            return shot
    if config.mode == "advanced" and state.ammo.get(agent, 0) > 0:
        pool = list(config.actions())
    else:
        pool = [a for a in config.actions() if a in BASE_ACTIONS]
    if rng.random() < TOWARD_BASE_PROB:
        moves = reducing_moves(state, config, agent)
        if moves:
            return moves[int(rng.integers(len(moves)))]
    return pool[int(rng.integers(len(pool)))]


def team_actions(
    state: WorldState,
    config: ScenarioConfig,
    team: str,
    rng: np.random.Generator,
) -> list:
    return [base_policy(state, config, a, rng) for a in config.agent_names(team)]
