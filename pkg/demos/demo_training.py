"""Short training run of the built-in Q-learner against the base policy.

Uses a small budget so it finishes in about a minute; expect the win rate
to stay modest at this scale (the acceptance suite runs the full budget).
"""

from gapsim.learning import LearnerConfig, evaluate, random_policy, train
from gapsim.world import ScenarioConfig


def main() -> None:
    scenario = ScenarioConfig(max_steps=100)
    baseline = evaluate(random_policy(scenario, 0), scenario, games=100, seed=99)
    print(f"random baseline: win rate {baseline.win_rate:.1%}, "
          f"avg reward {baseline.avg_reward:.0f}")
    learner = LearnerConfig()
    result = train(scenario, learner, epochs=60_000, seed=3,
                   eval_interval=20_000, eval_games=100)
    for epoch, win_rate, avg_reward in result.curve:
        print(f"epoch {epoch:>6}: win rate {win_rate:.1%}, avg reward {avg_reward:.0f}")


if __name__ == "__main__":
    main()
