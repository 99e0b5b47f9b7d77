/**
 * RemoteEnv: gym-style reset/step against a gapsim environment server.
 *
 * Semantics match the in-process environment exactly: the lockstep dump
 * tool on the Python side produces the same reply payloads this client
 * receives, which the differential test compares verbatim.
 */

import { LineSocket } from "./framing.js";
import {
  HelloMessage,
  PROTOCOL_VERSION,
  ProtocolError,
  ScenarioSummary,
  ServerReply,
  StepReply,
  VersionMismatchError,
  isErrorReply,
  isHello,
} from "./protocol.js";

export interface ConnectOptions {
  host?: string;
  port: number;
  timeoutMs?: number;
}

export class RemoteEnv {
  /** Filled by the handshake; action/observation metadata for trainers. */
  readonly scenario: ScenarioSummary;
  /** Last observation returned by reset/step, per team. */
  lastObservation: Record<"red" | "blue", number[]> | null = null;
  private done = true;

  private constructor(
    private readonly socket: LineSocket,
    hello: HelloMessage,
  ) {
    this.scenario = hello.scenario;
  }

  /**
   * Connect and perform the handshake.  Rejects with VersionMismatchError
   * when the server announces a different protocol version; no partial
   * state survives a failed connect.
   */
  static async connect(options: ConnectOptions): Promise<RemoteEnv> {
    const socket = await LineSocket.connect(
      options.host ?? "127.0.0.1",
      options.port,
      options.timeoutMs ?? 5000,
    );
    try {
      const line = await socket.nextLine(options.timeoutMs ?? 5000);
      const hello = JSON.parse(line) as unknown;
      if (!isHello(hello)) {
        throw new ProtocolError(`expected hello, got: ${line}`);
      }
      if (hello.v !== PROTOCOL_VERSION) {
        throw new VersionMismatchError(hello.v, PROTOCOL_VERSION);
      }
      return new RemoteEnv(socket, hello);
    } catch (err) {
      socket.close();
      throw err;
    }
  }

  private async request(message: unknown): Promise<StepReply> {
    this.socket.send(message);
    const line = await this.socket.nextLine();
    const reply = JSON.parse(line) as ServerReply;
    if (isErrorReply(reply)) {
      if (reply.error.includes("version mismatch")) {
        throw new VersionMismatchError(PROTOCOL_VERSION, PROTOCOL_VERSION);
      }
      throw new ProtocolError(reply.error);
    }
    return reply;
  }

  /** Start a fresh episode; returns the initial observation payload. */
  async reset(seed: number): Promise<StepReply> {
    const reply = await this.request({ v: PROTOCOL_VERSION, cmd: "reset", seed });
    this.lastObservation = reply.obs;
    this.done = reply.done;
    return reply;
  }

  /**
   * Advance one step.  Action names must come from scenario.actions; the
   * server validates list lengths and mode legality and reports protocol
   * errors without ending the episode.
   */
  async step(red: string[], blue: string[]): Promise<StepReply> {
    const reply = await this.request({ v: PROTOCOL_VERSION, cmd: "step", red, blue });
    this.lastObservation = reply.obs;
    this.done = reply.done;
    return reply;
  }

  get episodeDone(): boolean {
    return this.done;
  }

  async close(): Promise<void> {
    try {
      this.socket.send({ v: PROTOCOL_VERSION, cmd: "close" });
      await this.socket.nextLine(1000).catch(() => undefined);
    } finally {
      this.socket.close();
    }
  }
}
