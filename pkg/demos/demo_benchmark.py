"""Throughput comparison: the rule engine vs the hand-rolled imperative mirror.

The mirror implements the same game without any inference machinery, so the
gap shows what the explainable rule dynamics cost.
"""

from gapsim.bench import run_random_actions


def main() -> None:
    for agents in (1, 5):
        for use_mirror in (False, True):
            report = run_random_actions(agents, 20_000, seed=1, use_mirror=use_mirror)
            print(
                f"{report.engine:>6} engine, {agents} agents/team: "
                f"{report.actions_per_second:>10,.0f} actions/s, "
                f"peak rss {report.peak_memory_bytes / 1e6:.0f} MB"
            )


if __name__ == "__main__":
    main()
