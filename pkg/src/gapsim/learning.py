"""Value-function learning against the scripted opponent.

A deliberately small Q-network (one tanh hidden layer, numpy forward and
backward passes, Adam updates) with experience replay and hard target
snapshots.  Keeping the learner self-contained makes the finite-difference
gradient check meaningful and the whole training loop reproducible from a
single seed; anything heavier should train over the wire protocol instead.

Multi-agent scenarios train one network per agent slot.  Transitions from
all slots live in one shared replay buffer; each network samples its own
slot's entries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .policy import team_actions
from .world import GridWorld, ScenarioConfig

_MAGIC = b"GQNETPOL"
_VERSION = 1


@dataclass
class LearnerConfig:
    hidden_width: int = 64
    replay_capacity: int = 100_000
    batch_size: int = 32
    target_sync_period: int = 500
    discount: float = 0.99
    eps_start: float = 1.0
    # the floor stays high because exploration is temporally extended: a
    # quarter of steps in ballistic random runs keeps win discovery alive
    # all through training (greedy evaluation is unaffected)
    eps_end: float = 0.25
    eps_decay_frac: float = 0.1  # linear decay over this fraction of the budget
    learning_rate: float = 1e-3
    train_period: int = 1  # environment steps between gradient updates
    # multi-step returns: targets bootstrap n steps ahead, which carries the
    # sparse terminal rewards back through the episode far faster than
    # one-step backups at this budget
    n_step: int = 8
    # a long warmup lets exploration seed the replay with winning episodes
    # before updates begin; without them the net settles into a
    # survive-only optimum
    warmup: int = 20_000
    # temporally-extended exploration: an exploring agent repeats its random
    # action with this probability, giving ballistic rather than diffusive
    # coverage (mean run length 1/(1-p))
    explore_persistence: float = 0.9
    # internal conditioning: rewards and observations are scaled before they
    # reach the network so the smooth-L1 loss stays in its quadratic zone
    reward_scale: float = 0.005
    obs_scale: float = 0.125

    def __post_init__(self):
        if self.batch_size > self.replay_capacity:
            raise ValueError("batch_size must not exceed replay_capacity")
        if not (0.0 < self.discount <= 1.0):
            raise ValueError("discount must be in (0, 1]")

    def epsilon(self, step: int, budget: int) -> float:
        span = max(1, int(budget * self.eps_decay_frac))
        frac = min(1.0, step / span)
        return self.eps_start + (self.eps_end - self.eps_start) * frac


def smooth_l1(delta: np.ndarray) -> np.ndarray:
    a = np.abs(delta)
    return np.where(a < 1.0, 0.5 * delta * delta, a - 0.5)


def smooth_l1_grad(delta: np.ndarray) -> np.ndarray:
    return np.clip(delta, -1.0, 1.0)


class QNet:
    """obs -> action values; one tanh hidden layer, float64 throughout."""

    def __init__(self, in_dim: int, hidden: int, out_dim: int, rng: np.random.Generator):
        self.in_dim, self.hidden, self.out_dim = in_dim, hidden, out_dim
        s1 = np.sqrt(6.0 / (in_dim + hidden))
        s2 = np.sqrt(6.0 / (hidden + out_dim))
        self.params = {
            "W1": rng.uniform(-s1, s1, (in_dim, hidden)),
            "b1": np.zeros(hidden),
            "W2": rng.uniform(-s2, s2, (hidden, out_dim)),
            "b2": np.zeros(out_dim),
        }

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = np.tanh(x @ self.params["W1"] + self.params["b1"])
        return h @ self.params["W2"] + self.params["b2"]

    def loss_and_grads(self, obs: np.ndarray, actions: np.ndarray, targets: np.ndarray):
        """Smooth-L1 TD loss on the taken actions, with analytic gradients."""
        p = self.params
        z1 = obs @ p["W1"] + p["b1"]
        h = np.tanh(z1)
        q = h @ p["W2"] + p["b2"]
        n = obs.shape[0]
        taken = q[np.arange(n), actions]
        delta = taken - targets
        loss = float(np.mean(smooth_l1(delta)))
        dq = np.zeros_like(q)
        dq[np.arange(n), actions] = smooth_l1_grad(delta) / n
        dW2 = h.T @ dq
        db2 = dq.sum(axis=0)
        dh = dq @ p["W2"].T
        dz1 = dh * (1.0 - h * h)
        dW1 = obs.T @ dz1
        db1 = dz1.sum(axis=0)
        return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}

    def clone(self) -> "QNet":
        dup = QNet.__new__(QNet)
        dup.in_dim, dup.hidden, dup.out_dim = self.in_dim, self.hidden, self.out_dim
        dup.params = {k: v.copy() for k, v in self.params.items()}
        return dup

    def load_from(self, other: "QNet") -> None:
        for k in self.params:
            self.params[k][...] = other.params[k]


class Adam:
    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def update(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1t = 1.0 - self.b1 ** self.t
        b2t = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * (g * g)
            params[k] -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


class Transition(NamedTuple):
    observation: np.ndarray
    action: int
    reward: float
    next_observation: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions; eviction is oldest-first.

    Entries may span several environment steps (n-step returns): ``rewards``
    holds the discounted partial return and ``boots`` the discount applied
    to the bootstrap value at ``next_obs``.
    """

    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.boots = np.ones(capacity)
        self.slots = np.zeros(capacity, dtype=np.int64)
        self.size = 0
        self.head = 0

    def add(self, transition: Transition, slot: int = 0) -> None:
        self.push(slot, transition.observation, transition.action, transition.reward,
                  transition.next_observation, transition.done)

    def push(self, slot, obs, action, reward, next_obs, done, boot: float = 1.0) -> None:
        i = self.head
        self.slots[i] = slot
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = 1.0 if done else 0.0
        self.boots[i] = boot
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_for_slot(self, slot: int, batch: int, rng: np.random.Generator):
        idx = np.flatnonzero(self.slots[: self.size] == slot)
        if len(idx) < batch:
            return None
        pick = idx[rng.integers(0, len(idx), size=batch)]
        return (
            self.obs[pick],
            self.actions[pick],
            self.rewards[pick],
            self.next_obs[pick],
            self.dones[pick],
            self.boots[pick],
        )


class Policy:
    """Greedy per-slot action selection over trained networks."""

    def __init__(self, nets: list, actions: tuple, obs_scale: float = 1.0):
        self.nets = nets
        self.actions = actions
        self.obs_scale = obs_scale

    def act(self, obs: np.ndarray) -> list:
        x = obs[None, :] * self.obs_scale
        out = []
        for net in self.nets:
            q = net.forward(x)[0]
            out.append(self.actions[int(np.argmax(q))])  # argmax: lowest index wins ties
        return out

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IId", _VERSION, len(self.nets), self.obs_scale))
            for net in self.nets:
                fh.write(struct.pack("<III", net.in_dim, net.hidden, net.out_dim))
                for key in ("W1", "b1", "W2", "b2"):
                    arr = np.ascontiguousarray(net.params[key], dtype="<f8")
                    fh.write(arr.tobytes())

    @classmethod
    def load(cls, path: str, actions: tuple) -> "Policy":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != _MAGIC:
                raise ValueError(f"not a policy file (magic {magic!r})")
            version, count, obs_scale = struct.unpack("<IId", fh.read(16))
            if version != _VERSION:
                raise ValueError(f"unsupported policy version {version}")
            nets = []
            for _ in range(count):
                in_dim, hidden, out_dim = struct.unpack("<III", fh.read(12))
                net = QNet.__new__(QNet)
                net.in_dim, net.hidden, net.out_dim = in_dim, hidden, out_dim
                net.params = {}
                for key, shape in (
                    ("W1", (in_dim, hidden)),
                    ("b1", (hidden,)),
                    ("W2", (hidden, out_dim)),
                    ("b2", (out_dim,)),
                ):
                    n = int(np.prod(shape))
                    net.params[key] = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape).copy()
                nets.append(net)
        return cls(nets, actions, obs_scale)


@dataclass
class EvalReport:
    games: int
    win_rate: float
    avg_reward: float
    avg_actions_per_win: float


@dataclass
class TrainResult:
    policy: Policy
    curve: list  # (epoch, win_rate, avg_reward)
    losses: list = field(default_factory=list)


def _slot_reward(events: list, agent: str) -> float:
    """Agent's own costs/penalties plus team-level event rewards."""
    total = 0.0
    for who, _, value in events:
        if who is None or who == agent:
            total += value
    return total


def random_policy(scenario: ScenarioConfig, seed: int) -> "RandomPolicy":
    return RandomPolicy(scenario.actions(), scenario.agents_per_team, np.random.default_rng(seed))


class RandomPolicy:
    def __init__(self, actions: tuple, n_slots: int, rng: np.random.Generator):
        self.actions = actions
        self.n_slots = n_slots
        self.rng = rng

    def act(self, obs: np.ndarray) -> list:
        return [
            self.actions[int(self.rng.integers(len(self.actions)))]
            for _ in range(self.n_slots)
        ]


def evaluate(policy, scenario: ScenarioConfig, games: int, seed: int) -> EvalReport:
    """Red plays ``policy`` greedily against the blue base policy."""
    if games < 1:
        raise ValueError("games must be >= 1")
    wins = 0
    total_reward = 0.0
    win_steps = []
    seeds = np.random.SeedSequence(seed).spawn(games)
    for g, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        world = GridWorld(scenario)
        _, obs = world.reset(seed + g)
        episode_reward = 0.0
        steps = 0
        while not world.done:
            red = policy.act(obs["red"])
            blue = team_actions(world.state, scenario, "blue", rng)
            result = world.step(red, blue)
            obs = result.observation
            episode_reward += result.reward["red"]
            steps += 1
        total_reward += episode_reward
        if world.winner == "red":
            wins += 1
            win_steps.append(steps)
    return EvalReport(
        games=games,
        win_rate=wins / games,
        avg_reward=total_reward / games,
        avg_actions_per_win=float(np.mean(win_steps)) if win_steps else 0.0,
    )


def train(
    scenario: ScenarioConfig,
    learner: LearnerConfig,
    epochs: int,
    seed: int,
    eval_interval: Optional[int] = None,
    eval_games: int = 100,
) -> TrainResult:
    """Train red against the blue base policy; one epoch is one environment step.

    Returns the greedy policy and the learning curve; identical seeds yield
    identical curves.  Raises on non-finite loss.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    opp_rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))
    world = GridWorld(scenario)
    actions = scenario.actions()
    n_actions = len(actions)
    n_slots = scenario.agents_per_team
    obs_dim = scenario.observation_length()

    nets = [QNet(obs_dim, learner.hidden_width, n_actions, rng) for _ in range(n_slots)]
    targets = [net.clone() for net in nets]
    optims = [Adam(net.params, learner.learning_rate) for net in nets]
    buffer = ReplayBuffer(learner.replay_capacity, obs_dim)
    policy = Policy(nets, actions, obs_scale=learner.obs_scale)

    curve = []
    losses = []
    _, obs = world.reset(seed)
    episode_seed = seed
    sticky = [None] * n_slots  # current exploration action per slot
    # per-slot queues of transitions awaiting their n-step return
    pending = [[] for _ in range(n_slots)]

    def flush(slot, next_scaled, done, horizon):
        queue = pending[slot]
        while queue and (done or queue[0][3] >= horizon):
            p_obs, p_act, p_ret, p_steps = queue.pop(0)
            buffer.push(slot, p_obs, p_act, p_ret, next_scaled, done,
                        boot=learner.discount ** p_steps)

    def maybe_eval(epoch: int) -> None:
        if eval_interval is None:
            return
        report = evaluate(policy, scenario, eval_games, seed=seed + 977)
        curve.append((epoch, report.win_rate, report.avg_reward))

    maybe_eval(0)
    for step in range(1, epochs + 1):
        eps = learner.epsilon(step, epochs)
        red_obs = obs["red"]
        red_actions = []
        act_idx = []
        for slot in range(n_slots):
            if rng.random() < eps:
                if sticky[slot] is None or rng.random() >= learner.explore_persistence:
                    sticky[slot] = int(rng.integers(n_actions))
                a = sticky[slot]
            else:
                sticky[slot] = None
                q = nets[slot].forward(red_obs[None, :] * learner.obs_scale)[0]
                a = int(np.argmax(q))
            act_idx.append(a)
            red_actions.append(actions[a])
        blue_actions = team_actions(world.state, scenario, "blue", opp_rng)
        result = world.step(red_actions, blue_actions)
        next_obs = result.observation["red"]
        red_agents = scenario.agent_names("red")
        next_scaled = next_obs * learner.obs_scale
        for slot in range(n_slots):
            reward = _slot_reward(result.events["red"], red_agents[slot]) * learner.reward_scale
            queue = pending[slot]
            queue.append([red_obs * learner.obs_scale, act_idx[slot], 0.0, 0])
            for entry in queue:
                entry[2] += (learner.discount ** entry[3]) * reward
                entry[3] += 1
            flush(slot, next_scaled, result.done, learner.n_step)
        obs = result.observation
        if result.done:
            episode_seed += 1
            _, obs = world.reset(episode_seed)
            sticky = [None] * n_slots

        if buffer.size >= max(learner.warmup, learner.batch_size) and step % learner.train_period == 0:
            for slot in range(n_slots):
                batch = buffer.sample_for_slot(slot, learner.batch_size, rng)
                if batch is None:
                    continue
                b_obs, b_act, b_rew, b_next, b_done, b_boot = batch
                q_next = targets[slot].forward(b_next)
                y = b_rew + b_boot * (1.0 - b_done) * q_next.max(axis=1)
                loss, grads = nets[slot].loss_and_grads(b_obs, b_act, y)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"training diverged: non-finite loss at epoch {step} (slot {slot})"
                    )
                optims[slot].update(nets[slot].params, grads)
                losses.append(loss)
        if step % learner.target_sync_period == 0:
            for slot in range(n_slots):
                targets[slot].load_from(nets[slot])
        if eval_interval is not None and step % eval_interval == 0:
            maybe_eval(step)

    return TrainResult(policy=policy, curve=curve, losses=losses)


def write_curve_csv(curve: list, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,win_rate,avg_reward\n")
        for epoch, win_rate, avg_reward in curve:
            fh.write(f"{epoch},{win_rate},{avg_reward}\n")
