import json
import socket
import threading

from gapsim import lockstep
from gapsim.server import (
    EnvSession,
    PROTOCOL_VERSION,
    hello_payload,
    serve_tcp,
)
from gapsim.world import ScenarioConfig


def test_hello_contains_scenario_summary():
    cfg = ScenarioConfig(mode="advanced", agents_per_team=2)
    hello = hello_payload(cfg)
    assert hello["v"] == PROTOCOL_VERSION
    assert hello["scenario"]["observation_length"] == 14
    assert hello["scenario"]["actions"][-1] == "shootRight"


def test_session_reset_step_and_errors():
    session = EnvSession(ScenarioConfig())
    r = session.handle({"v": 1, "cmd": "step", "red": ["noop"], "blue": ["noop"]})
    assert "error" in r and "reset" in r["error"]
    r = session.handle({"v": 1, "cmd": "reset", "seed": 3})
    assert r["obs"]["red"] == [0.0, 7.0, 7.0, 0.0]
    assert r["done"] is False and r["winner"] is None
    r = session.handle({"v": 1, "cmd": "step", "red": ["moveUp"], "blue": ["noop"]})
    assert r["reward"] == {"red": -2.0, "blue": -2.0}
    r = session.handle({"v": 1, "cmd": "step", "red": ["fly"], "blue": ["noop"]})
    assert "malformed action list" in r["error"]
    r = session.handle({"v": 1, "cmd": "step", "red": ["shootUp"], "blue": ["noop"]})
    assert "malformed action list" in r["error"]  # base mode has 5 actions
    r = session.handle({"v": 2, "cmd": "reset"})
    assert "version mismatch" in r["error"]
    r = session.handle({"v": 1, "cmd": "dance"})
    assert "unknown command" in r["error"]


def test_step_after_done_requires_reset():
    cfg = ScenarioConfig(max_steps=1)
    session = EnvSession(cfg)
    session.handle({"v": 1, "cmd": "reset", "seed": 0})
    r = session.handle({"v": 1, "cmd": "step", "red": ["noop"], "blue": ["noop"]})
    assert r["done"] is True and r["winner"] == "none"
    r = session.handle({"v": 1, "cmd": "step", "red": ["noop"], "blue": ["noop"]})
    assert "episode done" in r["error"]
    r = session.handle({"v": 1, "cmd": "reset", "seed": 0})
    assert r["done"] is False


def test_tcp_lockstep_matches_local_run():
    cfg = ScenarioConfig(mode="advanced", agents_per_team=2, max_steps=80)
    ports = []
    done = threading.Event()

    def announce(msg, flush=True):
        ports.append(int(msg.split()[1]))
        done.set()

    thread = threading.Thread(
        target=serve_tcp, args=(cfg,), kwargs={"port": 0, "once": True, "announce": announce},
        daemon=True,
    )
    thread.start()
    assert done.wait(5.0)
    port = ports[0]

    script = []
    cycle = [["moveUp", "moveRight"], ["moveDown", "moveLeft"]]
    for i in range(60):
        script.append({"red": cycle[i % 2], "blue": cycle[(i + 1) % 2]})
    expected = lockstep.play(cfg, 9, script)
    assert len(expected) == 61  # oscillating moves never terminate: reset + 60 steps

    with socket.create_connection(("127.0.0.1", port), timeout=5) as conn:
        rfile = conn.makefile("r", encoding="utf-8")
        wfile = conn.makefile("w", encoding="utf-8")
        hello = json.loads(rfile.readline())
        assert hello["type"] == "hello" and hello["v"] == PROTOCOL_VERSION
        got = []

        def rpc(msg):
            wfile.write(json.dumps(msg) + "\n")
            wfile.flush()
            return json.loads(rfile.readline())

        got.append(rpc({"v": 1, "cmd": "reset", "seed": 9}))
        for entry in script:
            reply = rpc({"v": 1, "cmd": "step", "red": entry["red"], "blue": entry["blue"]})
            got.append(reply)
            if reply.get("done"):
                break
        rpc({"v": 1, "cmd": "close"})
    assert got == expected
    thread.join(timeout=5)
