"""Spawn the wire-protocol server and drive it as a remote client.

The same reset/step exchange any external trainer would use: line-delimited
JSON over a local TCP socket, protocol version checked on both ends.
"""

import json
import socket
import subprocess
import sys


def main() -> None:
    proc = subprocess.Popen(
        [sys.executable, "-m", "gapsim.server", "--port", "0", "--once"],
        stdout=subprocess.PIPE,
        text=True,
    )
    try:
        port = int(proc.stdout.readline().split()[1])
        print(f"server listening on {port}")
        with socket.create_connection(("127.0.0.1", port)) as conn:
            rfile = conn.makefile("r")
            wfile = conn.makefile("w")

            def rpc(msg):
                wfile.write(json.dumps(msg) + "\n")
                wfile.flush()
                return json.loads(rfile.readline())

            hello = json.loads(rfile.readline())
            print("hello:", json.dumps(hello["scenario"], indent=2))
            print("reset:", rpc({"v": 1, "cmd": "reset", "seed": 42}))
            for action in ("moveUp", "moveLeft", "moveUp"):
                reply = rpc({"v": 1, "cmd": "step", "red": [action], "blue": ["noop"]})
                print(f"step {action}: reward={reply['reward']} obs={reply['obs']['red']}")
            rpc({"v": 1, "cmd": "close"})
    finally:
        proc.wait(timeout=10)


if __name__ == "__main__":
    main()
