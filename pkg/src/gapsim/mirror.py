"""Hand-rolled imperative implementation of the grid war game.

This mirrors the rule-compiled dynamics with plain Python state and no
inference machinery.  It exists as a differential oracle for the engine
(every reachable state and reward must agree) and as the self-baseline the
benchmark compares the logic engine against.  Keep it boring and direct;
it must not import the engine.

Step phases, matching the engine's per-timestep contract:

1. scheduled moves land (fast moves one step later, slow moves two) and
   in-flight bullets advance one cell, leaving play at walls and obstacles;
2. hits: every live agent sharing a cell with an unspent bullet dies and
   those bullets are spent;
3. capture/elimination ends the step before any new action is processed
   (dying on the base does not capture; simultaneous capture is a draw);
4. otherwise actions of currently-live agents are classified and applied:
   shots spawn bullets in the neighbouring cell (point-blank hits resolve
   immediately, before movement), moves with a legal target are scheduled;
5. elimination is re-checked after point-blank fire.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .world import (
    GOT_SHOT_REWARD,
    INVALID_ACTION_REWARD,
    LOSS_REWARD,
    SHOT_OPPONENT_REWARD,
    UNSAFE_ACTION_REWARD,
    VALID_ACTION_REWARD,
    WIN_REWARD,
    ActionId,
    ScenarioConfig,
    TEAMS,
    _MOVE_DIR,
    _SHOOT_DIR,
)


@dataclass
class _Bullet:
    name: str
    order: int  # global declaration order, used for kill attribution
    cell: Optional[int] = None
    direction: Optional[str] = None
    spent: bool = False


@dataclass
class MirrorResult:
    reward: dict
    done: bool
    winner: Optional[str]
    events: dict = field(default_factory=dict)


class MirrorGame:
    """Reference implementation of the scenario dynamics."""

    def __init__(self, config: ScenarioConfig, initial_positions: Optional[dict] = None):
        self.config = config
        self._initial_positions = dict(initial_positions or {})
        self.done = True
        self.winner: Optional[str] = None

    def reset(self, seed: int = 0) -> None:
        cfg = self.config
        self.position = {}
        self.alive = {}
        self.ammo = {}
        self.busy_until = {}
        self.bullets = []
        self.pending_moves = {}  # land_t -> [(agent, target)]
        self.t = 0
        self.done = False
        self.winner = None
        order = 0
        for team in TEAMS:
            for i, agent in enumerate(cfg.agent_names(team), start=1):
                self.position[agent] = self._initial_positions.get(agent, cfg.base_of(team))
                self.alive[agent] = True
                self.ammo[agent] = cfg.bullets_per_agent if cfg.mode == "advanced" else 0
                if cfg.mode == "advanced":
                    for b in cfg.bullet_names(team, i):
                        self.bullets.append(_Bullet(b, order))
                        order += 1

    # -- helpers -------------------------------------------------------------

    def _team(self, agent: str) -> str:
        return "red" if agent.startswith("red-") else "blue"

    def _team_alive(self, team: str) -> bool:
        return any(self.alive[a] for a in self.config.agent_names(team))

    def _terminal(self, captured: set) -> Optional[str]:
        red = "red" in captured
        blue = "blue" in captured
        if self.config.mode == "advanced":
            red_alive = self._team_alive("red")
            blue_alive = self._team_alive("blue")
            if not red_alive and not blue_alive:
                return "draw"
            if not blue_alive:
                red = True
            if not red_alive:
                blue = True
        if red and blue:
            return "draw"
        if red:
            return "red"
        if blue:
            return "blue"
        return None

    def _resolve_hits(self, rewards: dict, decomposition: dict) -> None:
        """Kill every live agent co-located with an unspent in-flight bullet."""
        struck = {}
        for agent, pos in self.position.items():
            if not self.alive[agent]:
                continue
            hitters = [
                b for b in self.bullets
                if not b.spent and b.cell is not None and b.cell == pos
            ]
            if hitters:
                struck[agent] = min(hitters, key=lambda b: b.order)
        cells = {self.position[a] for a in struck}
        for b in self.bullets:
            if not b.spent and b.cell in cells:
                b.spent = True
                b.cell = None
        for agent, killer in sorted(struck.items()):
            self.alive[agent] = False
            self.position.pop(agent, None)
            vteam = self._team(agent)
            rewards[vteam] += GOT_SHOT_REWARD
            decomposition[vteam].append((agent, "got_shot", GOT_SHOT_REWARD))
            kteam = self._team(killer.name)
            if kteam != vteam:
                rewards[kteam] += SHOT_OPPONENT_REWARD
                decomposition[kteam].append((None, "shot_opponent", SHOT_OPPONENT_REWARD))

    def _captured(self) -> set:
        out = set()
        for team in TEAMS:
            goal = self.config.base_of(self.config.enemy(team))
            for agent in self.config.agent_names(team):
                if self.alive[agent] and self.position.get(agent) == goal:
                    out.add(team)
        return out

    # -- stepping --------------------------------------------------------------

    def step(self, red_actions, blue_actions) -> MirrorResult:
        if self.done:
            raise RuntimeError("mirror episode is done")
        cfg = self.config
        t = self.t
        rewards = {"red": 0.0, "blue": 0.0}
        decomposition = {"red": [], "blue": []}

        # 1. scheduled moves land; bullets advance
        for agent, target in self.pending_moves.pop(t, ()):
            if self.alive[agent]:
                self.position[agent] = target
        for b in self.bullets:
            if b.spent or b.cell is None:
                continue
            nxt = cfg.neighbor(b.cell, b.direction)
            if nxt is None or nxt in cfg.obstacles:
                b.cell = None
            else:
                b.cell = nxt

        # 2. hits, then 3. terminal check before actions
        self._resolve_hits(rewards, decomposition)
        outcome = self._terminal(self._captured())
        if outcome is None:
            # 4. actions of live agents against the settled state
            shooters = []
            movers = []
            for team, acts in (("red", red_actions), ("blue", blue_actions)):
                for agent, action in zip(cfg.agent_names(team), acts):
                    if not self.alive[agent]:
                        continue
                    if (
                        agent in cfg.slow_agents
                        and action != ActionId.noop
                        and self.busy_until.get(agent, 0) > t
                    ):
                        rewards[team] += VALID_ACTION_REWARD
                        decomposition[team].append((agent, "deferred", VALID_ACTION_REWARD))
                        continue
                    if action in _MOVE_DIR:
                        target = cfg.neighbor(self.position[agent], _MOVE_DIR[action])
                        if target is None or target in cfg.obstacles:
                            rewards[team] += UNSAFE_ACTION_REWARD
                            decomposition[team].append((agent, "unsafe", UNSAFE_ACTION_REWARD))
                        else:
                            rewards[team] += VALID_ACTION_REWARD
                            decomposition[team].append((agent, "valid", VALID_ACTION_REWARD))
                            movers.append((agent, action, target))
                    elif action in _SHOOT_DIR:
                        if self.ammo[agent] <= 0:
                            rewards[team] += INVALID_ACTION_REWARD
                            decomposition[team].append((agent, "invalid", INVALID_ACTION_REWARD))
                        else:
                            rewards[team] += VALID_ACTION_REWARD
                            decomposition[team].append((agent, "valid", VALID_ACTION_REWARD))
                            shooters.append((agent, action))
                    else:  # noop
                        rewards[team] += VALID_ACTION_REWARD
                        decomposition[team].append((agent, "valid", VALID_ACTION_REWARD))
                    if agent in cfg.slow_agents and action != ActionId.noop:
                        self.busy_until[agent] = t + 2

            # 4a. all shots spawn, then point-blank hits resolve
            for agent, action in shooters:
                team = self._team(agent)
                self.ammo[agent] -= 1
                direction = _SHOOT_DIR[action]
                spawn = cfg.neighbor(self.position[agent], direction)
                bullet = next(
                    b for b in self.bullets
                    if b.name.startswith(team) and b.cell is None and not b.spent
                    and b.direction is None
                    and self._owner(b) == agent
                )
                bullet.direction = direction
                if spawn is not None and spawn not in cfg.obstacles:
                    bullet.cell = spawn
            self._resolve_hits(rewards, decomposition)

            # 4b. moves of agents that survived point-blank fire
            for agent, action, target in movers:
                if not self.alive[agent]:
                    continue
                delay = 2 if agent in cfg.slow_agents else 1
                self.pending_moves.setdefault(t + delay, []).append((agent, target))

            # 5. elimination may end the game after point-blank fire
            outcome = self._terminal(set())

        done = outcome is not None
        if not done and t + 1 >= cfg.max_steps:
            done = True
            outcome = "timeout"
        winner = outcome if outcome in ("red", "blue") else None
        if outcome in ("red", "blue"):
            rewards[outcome] += WIN_REWARD
            decomposition[outcome].append((None, "win", WIN_REWARD))
            loser = cfg.enemy(outcome)
            rewards[loser] += LOSS_REWARD
            decomposition[loser].append((None, "loss", LOSS_REWARD))
        elif done:
            pass  # timeout or mutual elimination: no terminal bonus

        self.done = done
        self.winner = winner
        self.t = t + 1
        return MirrorResult(reward=rewards, done=done, winner=winner, events=decomposition)

    def _owner(self, bullet: _Bullet) -> str:
        cfg = self.config
        team = self._team(bullet.name)
        number = int(bullet.name.rsplit("-", 1)[1])
        agent_index = (number - 1) // cfg.bullets_per_agent + 1
        return f"{team}-agent-{agent_index}"

    # -- state view (for differential tests) -----------------------------------

    def snapshot(self) -> dict:
        return {
            "positions": {a: p for a, p in sorted(self.position.items()) if self.alive[a]},
            "alive": dict(sorted(self.alive.items())),
            "ammo": dict(sorted(self.ammo.items())),
            "bullets": {
                b.name: (b.cell, b.direction)
                for b in self.bullets
                if b.cell is not None and not b.spent
            },
        }
