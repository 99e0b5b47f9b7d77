"""Line-delimited JSON wire protocol for the environment.

Every message carries a protocol version field ``v``.  On connect the
server sends a hello line with the scenario summary; afterwards it answers
one request per line:

    {"v": 1, "cmd": "reset", "seed": 7}
    {"v": 1, "cmd": "step", "red": ["moveUp"], "blue": ["noop"]}
    {"v": 1, "cmd": "close"}

Step and reset responses look like
``{"v":1,"obs":{"red":[...],"blue":[...]},"reward":{...},"done":false,"winner":null}``;
``winner`` is "red", "blue", or "none" (draw/timeout) once done.  Protocol
errors are reported as ``{"v":1,"error":"..."}`` without closing the
connection.  Serve over TCP or standard streams.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

from .world import ActionId, GridWorld, ScenarioConfig, parse_scenario_config

PROTOCOL_VERSION = 1


def scenario_summary(config: ScenarioConfig) -> dict:
    return {
        "grid_width": config.grid_width,
        "grid_height": config.grid_height,
        "agents_per_team": config.agents_per_team,
        "mode": config.mode,
        "non_markovian": config.non_markovian,
        "slow_agents": sorted(config.slow_agents),
        "bullets_per_agent": config.bullets_per_agent,
        "max_steps": config.max_steps,
        "observation_length": config.observation_length(),
        "actions": [a.value for a in config.actions()],
    }


def hello_payload(config: ScenarioConfig) -> dict:
    return {"v": PROTOCOL_VERSION, "type": "hello", "scenario": scenario_summary(config)}


def result_payload(obs: dict, reward: dict, done: bool, winner) -> dict:
    wire_winner = None
    if done:
        wire_winner = winner if winner in ("red", "blue") else "none"
    return {
        "v": PROTOCOL_VERSION,
        "obs": {team: [float(x) for x in vec] for team, vec in obs.items()},
        "reward": {team: float(r) for team, r in reward.items()},
        "done": bool(done),
        "winner": wire_winner,
    }


def _error(message: str) -> dict:
    return {"v": PROTOCOL_VERSION, "error": message}


class EnvSession:
    """One environment behind the wire protocol."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.world = GridWorld(config)

    def handle(self, msg) -> dict:
        if not isinstance(msg, dict):
            return _error("request must be a JSON object")
        if msg.get("v") != PROTOCOL_VERSION:
            return _error(
                f"protocol version mismatch: server speaks v{PROTOCOL_VERSION}, "
                f"got {msg.get('v')!r}"
            )
        cmd = msg.get("cmd")
        if cmd == "reset":
            seed = msg.get("seed", 0)
            if not isinstance(seed, int):
                return _error("reset seed must be an integer")
            _, obs = self.world.reset(seed)
            return result_payload(obs, {"red": 0.0, "blue": 0.0}, False, None)
        if cmd == "step":
            if self.world.driver is None:
                return _error("no episode: send reset first")
            if self.world.done:
                return _error("episode done; send reset to start a new one")
            try:
                red = [ActionId(a) for a in msg.get("red", [])]
                blue = [ActionId(a) for a in msg.get("blue", [])]
            except (ValueError, TypeError) as exc:
                return _error(f"malformed action list: {exc}")
            try:
                result = self.world.step(red, blue)
            except ValueError as exc:
                return _error(f"malformed action list: {exc}")
            return result_payload(result.observation, result.reward, result.done, result.winner)
        if cmd == "close":
            return {"v": PROTOCOL_VERSION, "ok": True, "closing": True}
        return _error(f"unknown command {cmd!r}")


def serve_stream(config: ScenarioConfig, rfile, wfile) -> None:
    """Run one session over a pair of text streams (hello first)."""
    session = EnvSession(config)
    wfile.write(json.dumps(hello_payload(config)) + "\n")
    wfile.flush()
    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = _error(f"bad JSON: {exc}")
        else:
            reply = session.handle(msg)
        wfile.write(json.dumps(reply) + "\n")
        wfile.flush()
        if reply.get("closing"):
            break


def serve_tcp(config: ScenarioConfig, host: str = "127.0.0.1", port: int = 0,
              once: bool = False, announce=print) -> None:
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    announce(f"LISTENING {srv.getsockname()[1]}", flush=True)
    try:
        while True:
            conn, _ = srv.accept()
            with conn:
                rfile = conn.makefile("r", encoding="utf-8")
                wfile = conn.makefile("w", encoding="utf-8")
                try:
                    serve_stream(config, rfile, wfile)
                except (BrokenPipeError, ConnectionResetError):
                    pass
            if once:
                break
    finally:
        srv.close()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gapsim-server", description=__doc__)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=0, help="0 picks a free port")
    ap.add_argument("--stdio", action="store_true", help="serve on stdin/stdout")
    ap.add_argument("--scenario", help="scenario config file (key=value lines)")
    ap.add_argument("--once", action="store_true", help="exit after one client")
    args = ap.parse_args(argv)
    if args.scenario:
        with open(args.scenario) as fh:
            config = parse_scenario_config(fh.read())
    else:
        config = ScenarioConfig()
    if args.stdio:
        serve_stream(config, sys.stdin, sys.stdout)
    else:
        serve_tcp(config, args.host, args.port, once=args.once)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
