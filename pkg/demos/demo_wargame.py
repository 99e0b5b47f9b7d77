"""Play the scripted evasion episode and print the explainable trace window.

Red walks down the first column while blue fires a bullet along the bottom
row; red doubles back and evades.  The printed window is the trace excerpt
the engine is pinned to reproduce.
"""

from gapsim import export_trace
from gapsim.world import ActionId, GridWorld, ScenarioConfig

SCRIPT = {
    16: ([ActionId.moveDown], [ActionId.noop]),
    17: ([ActionId.moveDown], [ActionId.noop]),
    18: ([ActionId.moveDown], [ActionId.shootLeft]),
    19: ([ActionId.moveUp], [ActionId.noop]),
    20: ([ActionId.moveUp], [ActionId.noop]),
}


def render(world: GridWorld) -> str:
    cfg = world.config
    cells = {}
    for agent, pos in world.state.positions.items():
        if world.state.health.get(agent) is not None and world.state.alive(agent):
            cells[pos] = "R" if agent.startswith("red") else "B"
    for bullet, (pos, _) in world.state.bullets.items():
        cells.setdefault(pos, "*")
    for c in cfg.obstacles:
        cells[c] = "#"
    rows = []
    for row in range(cfg.grid_height - 1, -1, -1):
        rows.append(" ".join(cells.get(cfg.cell(row, col), ".") for col in range(cfg.grid_width)))
    return "\n".join(rows)


def main() -> None:
    world = GridWorld(
        ScenarioConfig(mode="advanced", max_steps=23),
        initial_positions={"red-agent-1": 24, "blue-agent-1": 4},
    )
    world.reset(0)
    t = 0
    while not world.done:
        red, blue = SCRIPT.get(t, ([ActionId.noop], [ActionId.noop]))
        world.step(red, blue)
        if 16 <= t <= 21:
            print(f"--- board after t={t} ---")
            print(render(world))
        t += 1
    print("\ntrace window t=16..21:")
    for line in export_trace(world.driver.records).splitlines():
        if line.startswith(("16,", "17,", "18,", "19,", "20,", "21,")):
            print(line)


if __name__ == "__main__":
    main()
