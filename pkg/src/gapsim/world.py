"""The grid war game compiled to a temporal logic program, with an env facade.

Two teams on a rectangular grid of cells (id = row*width + col, row 0 at the
bottom).  Red's base sits bottom-right, blue's top-left; obstacles block
movement and bullets.  Every game dynamic - movement, shooting, bullet
flight, hits, base capture - is a rule in the compiled program; the
environment injects per-step action facts, drives the engine, and decodes
observations and rewards from the resulting trace.

Safety is enforced inside the rules (moves demand an unblocked target cell,
shots demand ammo and health), so an unsafe action changes nothing and only
costs reward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .lattice import FALSE, TRUE, Interval
from .lang import AnnotatedLiteral, GapRule, KnowledgeGraph, Literal, Program, Var
from .engine import EpisodeDriver

# reward constants
WIN_REWARD = 250.0
LOSS_REWARD = -250.0
SHOT_OPPONENT_REWARD = 400.0
GOT_SHOT_REWARD = -200.0
VALID_ACTION_REWARD = -2.0
UNSAFE_ACTION_REWARD = -200.0
INVALID_ACTION_REWARD = -10.0

DIRECTIONS = ("up", "down", "left", "right")
TEAMS = ("red", "blue")


class ActionId(Enum):
    moveUp = "moveUp"
    moveDown = "moveDown"
    moveLeft = "moveLeft"
    moveRight = "moveRight"
    noop = "noop"
    shootUp = "shootUp"
    shootDown = "shootDown"
    shootLeft = "shootLeft"
    shootRight = "shootRight"


BASE_ACTIONS = (
    ActionId.moveUp,
    ActionId.moveDown,
    ActionId.moveLeft,
    ActionId.moveRight,
    ActionId.noop,
)
ADVANCED_ACTIONS = BASE_ACTIONS + (
    ActionId.shootUp,
    ActionId.shootDown,
    ActionId.shootLeft,
    ActionId.shootRight,
)

_MOVE_DIR = {
    ActionId.moveUp: "up",
    ActionId.moveDown: "down",
    ActionId.moveLeft: "left",
    ActionId.moveRight: "right",
}
_SHOOT_DIR = {
    ActionId.shootUp: "up",
    ActionId.shootDown: "down",
    ActionId.shootLeft: "left",
    ActionId.shootRight: "right",
}


@dataclass(frozen=True)
class ScenarioConfig:
    grid_width: int = 8
    grid_height: int = 8
    agents_per_team: int = 1
    obstacles: frozenset = frozenset({26, 27, 36, 37})
    red_base: int = 7
    blue_base: int = 56
    mode: str = "base"  # "base" or "advanced"
    non_markovian: bool = False
    slow_agents: frozenset = frozenset()  # agent names, e.g. "red-agent-2"
    bullets_per_agent: int = 3
    max_steps: int = 100

    def __post_init__(self):
        cells = self.grid_width * self.grid_height
        if self.grid_width < 1 or self.grid_height < 1:
            raise ValueError("grid dimensions must be positive")
        if self.agents_per_team < 1:
            raise ValueError("agents_per_team must be >= 1")
        if self.mode not in ("base", "advanced"):
            raise ValueError(f"unknown mode {self.mode!r}")
        for c in (self.red_base, self.blue_base):
            if not (0 <= c < cells):
                raise ValueError(f"base cell {c} outside grid")
        if self.red_base == self.blue_base:
            raise ValueError("bases must be distinct cells")
        bad = {self.red_base, self.blue_base} & set(self.obstacles)
        if bad:
            raise ValueError(f"bases cannot be obstacles: {sorted(bad)}")
        for c in self.obstacles:
            if not (0 <= c < cells):
                raise ValueError(f"obstacle cell {c} outside grid")
        agents = set(self.agent_names("red")) | set(self.agent_names("blue"))
        unknown = set(self.slow_agents) - agents
        if unknown:
            raise ValueError(f"slow_agents not in roster: {sorted(unknown)}")
        if self.bullets_per_agent < 0:
            raise ValueError("bullets_per_agent must be >= 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def agent_names(self, team: str) -> list:
        return [f"{team}-agent-{i}" for i in range(1, self.agents_per_team + 1)]

    def bullet_names(self, team: str, agent_index: int) -> list:
        base = (agent_index - 1) * self.bullets_per_agent
        return [f"{team}-bullet-{base + j}" for j in range(1, self.bullets_per_agent + 1)]

    def actions(self) -> tuple:
        return ADVANCED_ACTIONS if self.mode == "advanced" else BASE_ACTIONS

    def row_col(self, cell: int) -> tuple:
        return cell // self.grid_width, cell % self.grid_width

    def cell(self, row: int, col: int) -> int:
        return row * self.grid_width + col

    def neighbor(self, cell: int, direction: str) -> Optional[int]:
        row, col = self.row_col(cell)
        if direction == "up":
            row += 1
        elif direction == "down":
            row -= 1
        elif direction == "left":
            col -= 1
        elif direction == "right":
            col += 1
        else:
            raise ValueError(f"unknown direction {direction!r}")
        if not (0 <= row < self.grid_height and 0 <= col < self.grid_width):
            return None
        return self.cell(row, col)

    def base_of(self, team: str) -> int:
        return self.red_base if team == "red" else self.blue_base

    def enemy(self, team: str) -> str:
        return "blue" if team == "red" else "red"

    def observation_length(self) -> int:
        per_agent = 7 if self.mode == "advanced" else 4
        n = per_agent * self.agents_per_team
        return 2 * n if self.non_markovian else n


def parse_scenario_config(text: str) -> ScenarioConfig:
    """Key-value scenario file: one ``key=value`` per line, '#' comments."""
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    kwargs = {}
    ints = {
        "grid_width",
        "grid_height",
        "agents_per_team",
        "red_base",
        "blue_base",
        "bullets_per_agent",
        "max_steps",
    }
    for key, val in values.items():
        if key in ints:
            kwargs[key] = int(val)
        elif key == "mode":
            kwargs[key] = val
        elif key == "non_markovian":
            kwargs[key] = val.lower() in ("1", "true", "yes")
        elif key == "obstacles":
            kwargs[key] = frozenset(int(v) for v in val.split(",") if v.strip())
        elif key == "slow_agents":
            kwargs[key] = frozenset(v.strip() for v in val.split(",") if v.strip())
        else:
            raise ValueError(f"unknown config key {key!r}")
    return ScenarioConfig(**kwargs)


def format_scenario_config(config: ScenarioConfig) -> str:
    lines = [
        f"grid_width={config.grid_width}",
        f"grid_height={config.grid_height}",
        f"agents_per_team={config.agents_per_team}",
        f"obstacles={','.join(str(c) for c in sorted(config.obstacles))}",
        f"red_base={config.red_base}",
        f"blue_base={config.blue_base}",
        f"mode={config.mode}",
        f"non_markovian={'true' if config.non_markovian else 'false'}",
        f"slow_agents={','.join(sorted(config.slow_agents))}",
        f"bullets_per_agent={config.bullets_per_agent}",
        f"max_steps={config.max_steps}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# program compilation
# ---------------------------------------------------------------------------

_A, _B, _X, _Y, _L = Var("A"), Var("B"), Var("X"), Var("Y"), Var("L")


def _ann(pred, args, bound) -> AnnotatedLiteral:
    return AnnotatedLiteral(Literal(pred, tuple(args)), bound)


_ALIVE = Interval(0.1, 1.0)  # demanded of health/ammo: "definitely at least a little"


def compile_scenario(config: ScenarioConfig, initial_positions: Optional[dict] = None) -> Program:
    """Compile the scenario into rules, a knowledge graph, and initial facts.

    ``initial_positions`` overrides start cells per agent (used by scripted
    replays); by default every agent starts at its team base.
    """
    width, height = config.grid_width, config.grid_height
    cells = [str(c) for c in range(width * height)]
    graph = KnowledgeGraph()
    for c in cells:
        graph.add_node(c)
    for team in TEAMS:
        graph.add_node(team)
    for d in DIRECTIONS:
        graph.add_node(d)

    for c in range(width * height):
        for d in DIRECTIONS:
            n = config.neighbor(c, d)
            if n is not None:
                # dLoc(Y, X): Y is the cell reached moving d from X
                graph.add_edge(str(n), str(c), f"{d}Loc")

    advanced = config.mode == "advanced"
    slow = sorted(config.slow_agents)
    agents = {team: config.agent_names(team) for team in TEAMS}

    for team in TEAMS:
        for a in agents[team]:
            graph.add_node(a)
            graph.add_edge(a, team, "team")

    if advanced:
        for k in range(config.bullets_per_agent + 1):
            graph.add_node(f"lvl{k}")
        for team in TEAMS:
            for i, a in enumerate(agents[team], start=1):
                for j, b in enumerate(config.bullet_names(team, i), start=1):
                    graph.add_node(b)
                    graph.add_edge(a, b, "bulletSlot")
                    # bullet j fires while the agent still holds (bpa - j + 1) rounds
                    graph.add_edge(b, f"lvl{config.bullets_per_agent - j + 1}", "slotLevel")

    rules: list[GapRule] = []

    def rule(rid, head, body, delay=0, immediate=False, label=None):
        rules.append(GapRule(rid, head, tuple(body), delay, immediate, label))

    cap = {"up": "Up", "down": "Down", "left": "Left", "right": "Right"}

    # --- immediate rules (fire within the step, in this order) ---
    if advanced:
        for team, tag in (("blue", "B"), ("red", "R")):
            suffix = "" if team == "blue" else "_R"
            for d in DIRECTIONS:
                rule(
                    f"s_{cap[d]}_on{suffix}",
                    _ann(f"shoot{cap[d]}{tag}", (_A,), TRUE),
                    [
                        _ann("agent", (_A,), TRUE),
                        _ann("team", (_A, team), TRUE),
                        _ann("health", (_A,), _ALIVE),
                        _ann("ammo", (_A,), _ALIVE),
                        _ann(f"shoot{cap[d]}", (_A,), TRUE),
                    ],
                    immediate=True,
                )
        for team, tag in (("blue", "B"), ("red", "R")):
            for d in DIRECTIONS:
                rule(
                    f"s_Fired_{d}_{team}",
                    _ann("shotFired", (_A,), TRUE),
                    [_ann(f"shoot{cap[d]}{tag}", (_A,), TRUE)],
                    immediate=True,
                )
        for team, tag in (("blue", "B"), ("red", "R")):
            for d in DIRECTIONS:
                rule(
                    f"s_Spawn_{d}_{team}",
                    _ann("atLoc", (_B, _Y), TRUE),
                    [
                        _ann(f"shoot{cap[d]}{tag}", (_A,), TRUE),
                        _ann("atLoc", (_A, _X), TRUE),
                        _ann(f"{d}Loc", (_Y, _X), TRUE),
                        _ann("blocked", (_Y,), FALSE),
                        _ann("bulletSlot", (_A, _B), TRUE),
                        _ann("slotLevel", (_B, _L), TRUE),
                        _ann("ammoLevel", (_A, _L), TRUE),
                    ],
                    immediate=True,
                    label="s_Set_location",
                )
        for team, tag in (("blue", "B"), ("red", "R")):
            for d in DIRECTIONS:
                rule(
                    f"s_Dir_{d}_{team}",
                    _ann("direction", (_B, d), TRUE),
                    [
                        _ann(f"shoot{cap[d]}{tag}", (_A,), TRUE),
                        _ann("bulletSlot", (_A, _B), TRUE),
                        _ann("slotLevel", (_B, _L), TRUE),
                        _ann("ammoLevel", (_A, _L), TRUE),
                    ],
                    immediate=True,
                    label="s_Set_dir",
                )
        # hit resolution: a bullet sharing a cell with a live agent marks the
        # agent struck and itself spent; spent bullets never propagate.  The
        # bullet's location is cleared by the ordinary flight-clear rule on
        # the next step rather than retracted mid-cascade.
        rule(
            "h_Mark",
            _ann("struck", (_A,), TRUE),
            [
                _ann("bullet", (_B,), TRUE),
                _ann("atLoc", (_B, _X), TRUE),
                _ann("spent", (_B,), FALSE),
                _ann("agent", (_A,), TRUE),
                _ann("atLoc", (_A, _X), TRUE),
                _ann("health", (_A,), _ALIVE),
            ],
            immediate=True,
        )
        rule(
            "h_Spend",
            _ann("spent", (_B,), TRUE),
            [
                _ann("bullet", (_B,), TRUE),
                _ann("atLoc", (_B, _X), TRUE),
                _ann("agent", (_A,), TRUE),
                _ann("atLoc", (_A, _X), TRUE),
                _ann("struck", (_A,), TRUE),
            ],
            immediate=True,
        )
        rule(
            "h_Hit",
            _ann("health", (_A,), FALSE),
            [_ann("agent", (_A,), TRUE), _ann("struck", (_A,), TRUE)],
            immediate=True,
        )
        rule(
            "h_Corpse",
            _ann("atLoc", (_A, _X), FALSE),
            [
                _ann("agent", (_A,), TRUE),
                _ann("atLoc", (_A, _X), TRUE),
                _ann("health", (_A,), FALSE),
            ],
            immediate=True,
        )

    for team in TEAMS:
        enemy_base = str(config.base_of(config.enemy(team)))
        rule(
            f"c_Capture_{team}",
            _ann("wins", (team,), TRUE),
            [
                _ann("agent", (_A,), TRUE),
                _ann("team", (_A, team), TRUE),
                _ann("atLoc", (_A, enemy_base), TRUE),
                _ann("health", (_A,), _ALIVE),
            ],
            immediate=True,
        )

    fast_guard = [_ann("slowAgent", (_A,), FALSE)] if slow else []
    for d in DIRECTIONS:
        rule(
            f"m_{cap[d]}_on",
            _ann(f"move{cap[d]}", (_A,), TRUE),
            [
                _ann("agent", (_A,), TRUE),
                _ann("moveDir", (_A, d), TRUE),
                _ann("atLoc", (_A, _X), TRUE),
                _ann(f"{d}Loc", (_Y, _X), TRUE),
                _ann("blocked", (_Y,), FALSE),
            ]
            + fast_guard,
            immediate=True,
        )
    if slow:
        for d in DIRECTIONS:
            rule(
                f"m_{cap[d]}_on_S",
                _ann(f"move{cap[d]}S", (_A,), TRUE),
                [
                    _ann("agent", (_A,), TRUE),
                    _ann("moveDir", (_A, d), TRUE),
                    _ann("atLoc", (_A, _X), TRUE),
                    _ann(f"{d}Loc", (_Y, _X), TRUE),
                    _ann("blocked", (_Y,), FALSE),
                    _ann("slowAgent", (_A,), TRUE),
                ],
                immediate=True,
            )

    # --- delayed rules (evaluated at step end; land in this order) ---
    for d in DIRECTIONS:
        rule(
            f"m_{cap[d]}_off",
            _ann(f"move{cap[d]}", (_A,), FALSE),
            [_ann(f"move{cap[d]}", (_A,), TRUE)],
            delay=1,
        )
    if slow:
        for d in DIRECTIONS:
            rule(
                f"m_{cap[d]}_off_S",
                _ann(f"move{cap[d]}S", (_A,), FALSE),
                [_ann(f"move{cap[d]}S", (_A,), TRUE)],
                delay=1,
            )
    for d in DIRECTIONS:
        rule(
            f"m_Set_{d}",
            _ann("atLoc", (_A, _Y), TRUE),
            [
                _ann(f"move{cap[d]}", (_A,), TRUE),
                _ann("atLoc", (_A, _X), TRUE),
                _ann(f"{d}Loc", (_Y, _X), TRUE),
            ],
            delay=1,
            label="m_Set_location",
        )
    if slow:
        for d in DIRECTIONS:
            rule(
                f"m_Set_{d}_S",
                _ann("atLoc", (_A, _Y), TRUE),
                [
                    _ann(f"move{cap[d]}S", (_A,), TRUE),
                    _ann("atLoc", (_A, _X), TRUE),
                    _ann(f"{d}Loc", (_Y, _X), TRUE),
                ],
                delay=2,
                label="m_Set_location",
            )
    for d in DIRECTIONS:
        rule(
            f"m_Rem_{d}",
            _ann("atLoc", (_A, _X), FALSE),
            [_ann(f"move{cap[d]}", (_A,), TRUE), _ann("atLoc", (_A, _X), TRUE)],
            delay=1,
            label="m_Rem_location",
        )
    if slow:
        for d in DIRECTIONS:
            rule(
                f"m_Rem_{d}_S",
                _ann("atLoc", (_A, _X), FALSE),
                [_ann(f"move{cap[d]}S", (_A,), TRUE), _ann("atLoc", (_A, _X), TRUE)],
                delay=2,
                label="m_Rem_location",
            )
    if advanced:
        for team, tag in (("blue", "B"), ("red", "R")):
            suffix = "" if team == "blue" else "_R"
            for d in DIRECTIONS:
                rule(
                    f"s_{cap[d]}_off{suffix}",
                    _ann(f"shoot{cap[d]}{tag}", (_A,), FALSE),
                    [_ann(f"shoot{cap[d]}{tag}", (_A,), TRUE)],
                    delay=1,
                )
        rule(
            "s_Rem_location",
            _ann("atLoc", (_B, _X), FALSE),
            [_ann("bullet", (_B,), TRUE), _ann("atLoc", (_B, _X), TRUE)],
            delay=1,
        )
        for d in DIRECTIONS:
            rule(
                f"s_Prop_{d}",
                _ann("atLoc", (_B, _Y), TRUE),
                [
                    _ann("bullet", (_B,), TRUE),
                    _ann("atLoc", (_B, _X), TRUE),
                    _ann("spent", (_B,), FALSE),
                    _ann("direction", (_B, d), TRUE),
                    _ann(f"{d}Loc", (_Y, _X), TRUE),
                    _ann("blocked", (_Y,), FALSE),
                ],
                delay=1,
                label="s_Set_location",
            )
        rule(
            "s_Fired_off",
            _ann("shotFired", (_A,), FALSE),
            [_ann("shotFired", (_A,), TRUE)],
            delay=1,
        )
        for k in range(config.bullets_per_agent, 0, -1):
            rule(
                f"a_Dec_{k}",
                _ann("ammoLevel", (_A, f"lvl{k - 1}"), TRUE),
                [_ann("shotFired", (_A,), TRUE), _ann("ammoLevel", (_A, f"lvl{k}"), TRUE)],
                delay=1,
            )
        for k in range(config.bullets_per_agent, 0, -1):
            rule(
                f"a_Rem_{k}",
                _ann("ammoLevel", (_A, f"lvl{k}"), FALSE),
                [_ann("shotFired", (_A,), TRUE), _ann("ammoLevel", (_A, f"lvl{k}"), TRUE)],
                delay=1,
            )
        if config.bullets_per_agent > 0:
            rule(
                "a_Empty",
                _ann("ammo", (_A,), FALSE),
                [_ann("shotFired", (_A,), TRUE), _ann("ammoLevel", (_A, "lvl1"), TRUE)],
                delay=1,
            )

    # --- initial facts: obstacles first (the trace's opening rows) ---
    facts: list[tuple] = []
    obstacle_set = set(config.obstacles)
    for c in sorted(obstacle_set):
        facts.append((_ann("blocked", (str(c),), TRUE), 0))
    for c in range(width * height):
        if c not in obstacle_set:
            facts.append((_ann("blocked", (str(c),), FALSE), 0))
    positions = dict(initial_positions or {})
    for team in TEAMS:
        for a in agents[team]:
            facts.append((_ann("agent", (a,), TRUE), 0))
            start = positions.get(a, config.base_of(team))
            facts.append((_ann("atLoc", (a, str(start)), TRUE), 0))
            facts.append((_ann("health", (a,), TRUE), 0))
            if slow:
                facts.append(
                    (_ann("slowAgent", (a,), TRUE if a in config.slow_agents else FALSE), 0)
                )
            for d in DIRECTIONS:
                facts.append((_ann(f"move{cap[d]}", (a,), FALSE), 0))
                if a in config.slow_agents:
                    facts.append((_ann(f"move{cap[d]}S", (a,), FALSE), 0))
            if advanced:
                has_ammo = config.bullets_per_agent > 0
                facts.append((_ann("ammo", (a,), TRUE if has_ammo else FALSE), 0))
                facts.append(
                    (_ann("ammoLevel", (a, f"lvl{config.bullets_per_agent}"), TRUE), 0)
                )
    if advanced:
        for team in TEAMS:
            for i in range(1, config.agents_per_team + 1):
                for b in config.bullet_names(team, i):
                    facts.append((_ann("bullet", (b,), TRUE), 0))
                    facts.append((_ann("spent", (b,), FALSE), 0))

    volatile = {"moveDir"}
    static = {"blocked", "agent", "slowAgent", "bullet"}
    if advanced:
        volatile |= {f"shoot{cap[d]}" for d in DIRECTIONS}
        volatile.add("struck")

    return Program(
        rules=tuple(rules),
        graph=graph,
        facts=tuple(facts),
        horizon=config.max_steps,
        volatile=frozenset(volatile),
        static=frozenset(static),
    )


# ---------------------------------------------------------------------------
# environment facade
# ---------------------------------------------------------------------------


@dataclass
class WorldState:
    positions: dict  # agent/bullet -> cell int (absent when not placed)
    health: dict  # agent -> Interval
    ammo: dict  # agent -> remaining count
    bullets: dict  # bullet -> (cell, direction) for bullets in flight
    step: int

    def alive(self, agent: str) -> bool:
        return self.health.get(agent) == TRUE


@dataclass
class StepResult:
    observation: dict  # team -> np.ndarray
    reward: dict  # team -> float
    done: bool
    winner: Optional[str]  # "red" | "blue" | None (None + done means draw/timeout)
    trace: list = field(default_factory=list)
    events: dict = field(default_factory=dict)  # team -> [(agent|None, kind, value)]


class GridWorld:
    """reset/step facade over the compiled scenario program."""

    def __init__(self, config: ScenarioConfig, initial_positions: Optional[dict] = None):
        self.config = config
        self.program = compile_scenario(config, initial_positions)
        self._initial_positions = dict(initial_positions or {})
        self.driver: Optional[EpisodeDriver] = None
        self.state: Optional[WorldState] = None
        self.done = True
        self.winner: Optional[str] = None
        self._busy_until: dict = {}
        self._prev_obs: Optional[dict] = None
        self._wins_seen: set = set()
        self.seed = 0

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed: int = 0):
        """Fresh episode: agents at their bases, full ammo, no bullets.

        The world's dynamics are deterministic given the action sequence;
        the seed is recorded for protocol symmetry and reproducibility
        bookkeeping.
        """
        self.seed = seed
        self.driver = EpisodeDriver(self.program)
        self.done = False
        self.winner = None
        self._busy_until = {}
        self._wins_seen = set()
        self._spent = set()
        self._dirs = {}  # bullet -> direction, survives transit between cells
        positions = {}
        health = {}
        ammo = {}
        for team in TEAMS:
            for i, a in enumerate(self.config.agent_names(team), start=1):
                positions[a] = self._initial_positions.get(a, self.config.base_of(team))
                health[a] = TRUE
                ammo[a] = self.config.bullets_per_agent if self.config.mode == "advanced" else 0
        self.state = WorldState(positions, health, ammo, {}, step=-1)
        self._prev_obs = None
        obs = self.observe()
        self._prev_obs = obs
        return self.state, obs

    # -- decoding ----------------------------------------------------------

    def _apply_records(self, records) -> dict:
        """Fold trace records into the running state; returns step events."""
        st = self.state
        events = {"newly_dead": [], "spent_bullets": []}
        agent_set = set(st.health)
        for rec in records:
            if rec.label == "atLoc":
                entity, cell = rec.subject[1:-1].split(",")
                if rec.new == TRUE:
                    st.positions[entity] = int(cell)
                    if entity not in agent_set and entity not in self._spent:
                        st.bullets[entity] = (int(cell), self._dirs.get(entity))
                elif rec.new == FALSE and st.positions.get(entity) == int(cell):
                    st.positions.pop(entity, None)
                    if entity not in agent_set:
                        st.bullets.pop(entity, None)
            elif rec.label == "health" and rec.new == FALSE:
                if st.health.get(rec.subject) == TRUE:
                    events["newly_dead"].append(rec.subject)
                st.health[rec.subject] = FALSE
            elif rec.label == "spent" and rec.new == TRUE:
                events["spent_bullets"].append(rec.subject)
                self._spent.add(rec.subject)
                st.bullets.pop(rec.subject, None)
            elif rec.label == "ammoLevel" and rec.new == TRUE:
                agent, lvl = rec.subject[1:-1].split(",")
                st.ammo[agent] = int(lvl[3:])
            elif rec.label == "direction" and rec.new == TRUE:
                bullet, d = rec.subject[1:-1].split(",")
                self._dirs[bullet] = d
                if bullet in st.bullets:
                    st.bullets[bullet] = (st.bullets[bullet][0], d)
            elif rec.label == "wins" and rec.new == TRUE:
                self._wins_seen.add(rec.subject)
        # bullets without a live cell are out of play
        st.bullets = {b: (c, d) for b, (c, d) in st.bullets.items() if c is not None}
        return events

    def _team_of(self, name: str) -> str:
        return "red" if name.startswith("red-") else "blue"

    def _team_alive(self, team: str) -> bool:
        return any(self.state.health[a] == TRUE for a in self.config.agent_names(team))

    # -- stepping ----------------------------------------------------------

    def slow_agent_gate(self, agent: str, action: ActionId, t: Optional[int] = None) -> str:
        """'accepted' or 'deferred': a slow agent acts once per two timesteps."""
        if agent not in self.config.slow_agents or action == ActionId.noop:
            return "accepted"
        t = (self.driver.t + 1) if t is None else t
        return "deferred" if self._busy_until.get(agent, 0) > t else "accepted"

    def _classify(self, agent: str, action: ActionId, t: int):
        """Per-agent reward class and injections, against the pre-step state."""
        st = self.state
        if action in _MOVE_DIR:
            target = self.config.neighbor(st.positions[agent], _MOVE_DIR[action])
            unsafe = target is None or target in self.config.obstacles
            reward = UNSAFE_ACTION_REWARD if unsafe else VALID_ACTION_REWARD
            inject = [_ann("moveDir", (agent, _MOVE_DIR[action]), TRUE)]
            return reward, inject
        if action in _SHOOT_DIR:
            if self.config.mode != "advanced":
                raise ValueError(f"{action.value} is not available in base mode")
            if st.ammo[agent] <= 0:
                return INVALID_ACTION_REWARD, [
                    _ann(f"shoot{_SHOOT_DIR[action].capitalize()}", (agent,), TRUE)
                ]
            return VALID_ACTION_REWARD, [
                _ann(f"shoot{_SHOOT_DIR[action].capitalize()}", (agent,), TRUE)
            ]
        if action == ActionId.noop:
            return VALID_ACTION_REWARD, []
        raise ValueError(f"unknown action {action!r}")

    def _terminal(self) -> Optional[str]:
        """Winner string, "draw", or None while the game is still live."""
        red_win = "red" in self._wins_seen
        blue_win = "blue" in self._wins_seen
        if self.config.mode == "advanced":
            red_alive = self._team_alive("red")
            blue_alive = self._team_alive("blue")
            if not red_alive and not blue_alive:
                return "draw"
            if not blue_alive:
                red_win = True
            if not red_alive:
                blue_win = True
        if red_win and blue_win:
            return "draw"
        if red_win:
            return "red"
        if blue_win:
            return "blue"
        return None

    def step(self, red_actions, blue_actions) -> StepResult:
        if self.done:
            raise RuntimeError("episode is done; call reset()")
        cfg = self.config
        for name, acts in (("red", red_actions), ("blue", blue_actions)):
            if len(acts) != cfg.agents_per_team:
                raise ValueError(
                    f"{name} action list must have {cfg.agents_per_team} entries"
                )
            for a in acts:
                if a not in cfg.actions():
                    raise ValueError(f"action {a} not available in {cfg.mode} mode")
        t = self.driver.t + 1
        action_rewards = {"red": 0.0, "blue": 0.0}
        decomposition = {"red": [], "blue": []}
        side_effects = []  # (agent, action): busy/ammo bookkeeping if the step proceeds
        mark = len(self.driver.records)
        self._gate_mark = mark

        def action_phase(driver):
            # runs after scheduled effects landed: actions are classified
            # against the settled mid-step state; a win ends the step here
            self._apply_records(driver.records[mark:])
            self._gate_mark = len(driver.records)
            if self._terminal() is not None:
                return None
            injections = []
            for team, acts in (("red", red_actions), ("blue", blue_actions)):
                for agent, action in zip(cfg.agent_names(team), acts):
                    if self.state.health[agent] != TRUE:
                        continue
                    if self.slow_agent_gate(agent, action, t) == "deferred":
                        action_rewards[team] += VALID_ACTION_REWARD
                        decomposition[team].append((agent, "deferred", VALID_ACTION_REWARD))
                        continue
                    reward, inject = self._classify(agent, action, t)
                    action_rewards[team] += reward
                    kind = {
                        VALID_ACTION_REWARD: "valid",
                        UNSAFE_ACTION_REWARD: "unsafe",
                        INVALID_ACTION_REWARD: "invalid",
                    }[reward]
                    decomposition[team].append((agent, kind, reward))
                    injections.extend(inject)
                    side_effects.append((agent, action))
            return injections

        halted = self.driver.run_step(action_phase=action_phase)
        self._apply_records(self.driver.records[self._gate_mark:])
        step_records = list(self.driver.records[mark:])

        rewards = {"red": 0.0, "blue": 0.0}
        if not halted:
            rewards["red"] += action_rewards["red"]
            rewards["blue"] += action_rewards["blue"]
            fired = {
                r.subject for r in step_records
                if r.label == "shotFired" and r.new == TRUE
            }
            for agent, action in side_effects:
                if agent in cfg.slow_agents and action != ActionId.noop:
                    self._busy_until[agent] = t + 2
                # the rules decide whether a shot actually fired (the shooter
                # may have been hit while its bullet order was in flight)
                if action in _SHOOT_DIR and agent in fired:
                    self.state.ammo[agent] -= 1

        # hit events: victims pay, the shooting team scores on opponents
        newly_dead = sorted(self._step_dead(step_records))
        for victim in newly_dead:
            vteam = self._team_of(victim)
            rewards[vteam] += GOT_SHOT_REWARD
            decomposition[vteam].append((victim, "got_shot", GOT_SHOT_REWARD))
            shooter_team = self._killer_team(victim, step_records)
            if shooter_team and shooter_team != vteam:
                rewards[shooter_team] += SHOT_OPPONENT_REWARD
                decomposition[shooter_team].append((None, "shot_opponent", SHOT_OPPONENT_REWARD))

        outcome = self._terminal()
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

        self.done = done
        self.winner = winner
        self.state.step = t

        obs = self.observe(previous=self._prev_obs)
        result = StepResult(
            observation=obs,
            reward=rewards,
            done=done,
            winner=winner,
            trace=step_records,
            events=decomposition,
        )
        self._prev_obs = {team: vec[: len(vec) // 2] if cfg.non_markovian else vec
                          for team, vec in obs.items()}
        return result

    def _step_dead(self, records) -> set:
        return {r.subject for r in records if r.label == "health" and r.new == FALSE}

    def _killer_team(self, victim: str, records) -> Optional[str]:
        """Team owning the first bullet spent in the victim's death cell."""
        death_cell = None
        for r in records:
            if r.label == "atLoc" and r.rule == "h_Corpse" and r.new == FALSE:
                entity, cell = r.subject[1:-1].split(",")
                if entity == victim:
                    death_cell = int(cell)
                    break
        if death_cell is None:
            return None
        for r in records:
            if r.label == "spent" and r.new == TRUE:
                if self.state.positions.get(r.subject) == death_cell:
                    return self._team_of(r.subject)
        return None

    # -- observations ------------------------------------------------------

    def observe(self, previous: Optional[dict] = None) -> dict:
        """Per-team observation vectors (numpy float64)."""
        cfg = self.config
        out = {}
        for team in TEAMS:
            vec = []
            enemy = cfg.enemy(team)
            own = cfg.agent_names(team)
            opp = cfg.agent_names(enemy)
            for i in range(cfg.agents_per_team):
                for agent in (own[i], opp[i]):
                    pos = self.state.positions.get(agent)
                    if pos is None or self.state.health[agent] != TRUE:
                        vec.extend((-1.0, -1.0))
                    else:
                        r, c = cfg.row_col(pos)
                        vec.extend((float(r), float(c)))
                if cfg.mode == "advanced":
                    hostile = [
                        (cell, b)
                        for b, (cell, d) in sorted(self.state.bullets.items())
                        if self._team_of(b) == enemy and cell is not None
                    ]
                    vec.append(float(len(hostile)))
                    me = self.state.positions.get(own[i])
                    if not hostile or me is None:
                        vec.extend((-1.0, -1.0))
                    else:
                        rows_cols = [cfg.row_col(cell) for cell, _ in hostile]
                        mr, mc = cfg.row_col(me)
                        best = min(
                            rows_cols, key=lambda rc: (abs(rc[0] - mr) + abs(rc[1] - mc), rc)
                        )
                        vec.extend((float(best[0]), float(best[1])))
            arr = np.asarray(vec, dtype=np.float64)
            if cfg.non_markovian:
                prev = previous.get(team) if previous else None
                if prev is None:
                    prev = arr
                else:
                    prev = prev[: len(arr)]
                arr = np.concatenate([arr, prev])
            out[team] = arr
        return out
