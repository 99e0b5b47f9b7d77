export { RemoteEnv, ConnectOptions } from "./client.js";
export {
  PROTOCOL_VERSION,
  ProtocolError,
  VersionMismatchError,
  type HelloMessage,
  type ScenarioSummary,
  type ServerReply,
  type StepReply,
  type Team,
} from "./protocol.js";
export { LineSocket } from "./framing.js";
