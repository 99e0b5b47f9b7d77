/**
 * Wire protocol types for the gapsim environment server.
 *
 * Line-delimited JSON; every message carries a protocol version field `v`.
 * The server's first line is a hello with the scenario summary, after which
 * it answers one request per line.
 */

export const PROTOCOL_VERSION = 1;

export type Team = "red" | "blue";

/** Scenario summary delivered in the hello handshake. */
export interface ScenarioSummary {
  grid_width: number;
  grid_height: number;
  agents_per_team: number;
  mode: "base" | "advanced";
  non_markovian: boolean;
  slow_agents: string[];
  bullets_per_agent: number;
  max_steps: number;
  observation_length: number;
  actions: string[];
}

export interface HelloMessage {
  v: number;
  type: "hello";
  scenario: ScenarioSummary;
}

/** reset/step reply: observations and rewards per team. */
export interface StepReply {
  v: number;
  obs: Record<Team, number[]>;
  reward: Record<Team, number>;
  done: boolean;
  /** "red" | "blue" | "none" once done, null while the episode runs. */
  winner: Team | "none" | null;
}

export interface ErrorReply {
  v: number;
  error: string;
}

export type ServerReply = StepReply | ErrorReply;

export interface ResetRequest {
  v: number;
  cmd: "reset";
  seed: number;
}

export interface StepRequest {
  v: number;
  cmd: "step";
  red: string[];
  blue: string[];
}

export interface CloseRequest {
  v: number;
  cmd: "close";
}

export function isErrorReply(reply: unknown): reply is ErrorReply {
  return typeof reply === "object" && reply !== null && "error" in reply;
}

export function isHello(msg: unknown): msg is HelloMessage {
  return (
    typeof msg === "object" &&
    msg !== null &&
    (msg as HelloMessage).type === "hello"
  );
}

/** The server rejected or announced an incompatible protocol version. */
export class VersionMismatchError extends Error {
  constructor(
    public readonly serverVersion: number,
    public readonly clientVersion: number,
  ) {
    super(
      `protocol version mismatch: server speaks v${serverVersion}, ` +
        `client speaks v${clientVersion}`,
    );
    this.name = "VersionMismatchError";
  }
}

/** The server reported a protocol-level error for a request. */
export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}
