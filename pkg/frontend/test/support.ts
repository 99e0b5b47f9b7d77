/** Test helpers: spawn the Python environment server and lockstep dumps. */

import { ChildProcess, spawn } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

export const REPO_ROOT = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "..",
);
export const PYTHON = process.env.GAPSIM_PYTHON ?? "python3";

export interface ServerHandle {
  port: number;
  proc: ChildProcess;
  stop(): Promise<void>;
}

export function writeTempFile(name: string, contents: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "gapsim-client-"));
  const file = path.join(dir, name);
  fs.writeFileSync(file, contents);
  return file;
}

/** Start `python -m gapsim.server` and wait for its LISTENING line. */
export function startServer(args: string[] = []): Promise<ServerHandle> {
  return new Promise((resolve, reject) => {
    const proc = spawn(PYTHON, ["-m", "gapsim.server", "--port", "0", ...args], {
      cwd: REPO_ROOT,
      stdio: ["ignore", "pipe", "pipe"],
    });
    let out = "";
    let errout = "";
    const timer = setTimeout(() => {
      proc.kill();
      reject(new Error(`server did not announce a port; stderr: ${errout}`));
    }, 15000);
    proc.stdout!.setEncoding("utf-8");
    proc.stderr!.setEncoding("utf-8");
    proc.stderr!.on("data", (chunk: string) => (errout += chunk));
    proc.stdout!.on("data", (chunk: string) => {
      out += chunk;
      const match = out.match(/LISTENING (\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve({
          port: Number(match[1]),
          proc,
          stop: () =>
            new Promise<void>((done) => {
              proc.once("exit", () => done());
              proc.kill();
              setTimeout(done, 2000);
            }),
        });
      }
    });
    proc.once("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`server exited early (code ${code}); stderr: ${errout}`));
    });
  });
}

/** Run the local lockstep dump; returns one parsed payload per reply line. */
export function lockstepDump(
  scenarioFile: string | null,
  seed: number,
  steps: Array<{ red: string[]; blue: string[] }>,
): Promise<unknown[]> {
  return new Promise((resolve, reject) => {
    const scriptFile = writeTempFile("script.json", JSON.stringify({ steps }));
    const args = [
      "-m",
      "gapsim.lockstep",
      "--seed",
      String(seed),
      "--script",
      scriptFile,
    ];
    if (scenarioFile) args.push("--scenario", scenarioFile);
    const proc = spawn(PYTHON, args, { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] });
    let out = "";
    let errout = "";
    proc.stdout!.setEncoding("utf-8");
    proc.stderr!.setEncoding("utf-8");
    proc.stdout!.on("data", (chunk: string) => (out += chunk));
    proc.stderr!.on("data", (chunk: string) => (errout += chunk));
    proc.once("exit", (code) => {
      if (code !== 0) {
        reject(new Error(`lockstep dump failed (code ${code}): ${errout}`));
        return;
      }
      resolve(
        out
          .split("\n")
          .filter((line) => line.trim())
          .map((line) => JSON.parse(line)),
      );
    });
  });
}
