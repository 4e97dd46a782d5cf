/**
 * Wire protocol shared with the simulation gateway.
 *
 * Server frames: {type, seq, schema_version, payload} with a strictly
 * increasing per-connection seq. Frames whose schema_version does not match
 * ours are skipped by the caller (never rendered).
 */

export const SCHEMA_VERSION = 1;

export type ServerFrameType =
  | "hello"
  | "world_snapshot"
  | "uncertainty_update"
  | "arbitration_request_shown"
  | "arbitration_decision"
  | "episode_end"
  | "error";

const SERVER_FRAME_TYPES: ReadonlySet<string> = new Set([
  "hello",
  "world_snapshot",
  "uncertainty_update",
  "arbitration_request_shown",
  "arbitration_decision",
  "episode_end",
  "error",
]);

export interface GatewayFrame {
  type: ServerFrameType;
  seq: number;
  schema_version: number;
  payload: Record<string, unknown>;
}

export interface HelloPayload {
  role: "controller" | "observer";
  scenario: string;
  mode: string;
  arbiter: string;
  tick_hz: number;
  theta_u: number;
}

export interface VehiclePayload {
  x: number;
  y: number;
  heading: number;
  speed: number;
  half_length: number;
  half_width: number;
}

export interface ActorPayload {
  id: string;
  kind: string;
  x: number;
  y: number;
  heading: number;
  half_length: number;
  half_width: number;
}

export interface LanePayload {
  id: number;
  center: number[][];
  width: number;
  markings: { left: string; right: string };
}

export interface GatePayload {
  x: number;
  y: number;
  radius: number;
  passed: boolean;
}

export interface SnapshotPayload {
  frame: number;
  sim_t: number;
  ego: VehiclePayload;
  actors: ActorPayload[];
  control_source: string;
  autonomy_plan: string;
  route_completion: number;
  active_plan: string | null;
  planned_path: number[][];
  gates: GatePayload[];
  lanes: LanePayload[];
  human_input: { throttle: number; brake: number; steering: number } | null;
}

export interface UncertaintyPayload {
  frame: number;
  sim_t: number;
  u: number;
  intra_raw: number;
  inter_raw: number;
  triggered: boolean;
}

export interface RequestShownPayload {
  correlation_id: number;
  frame: number;
  human_plan: string;
  autonomy_plan: string;
  mode: string;
}

export interface DecisionPayload {
  correlation_id: number;
  frame: number;
  choice: "human" | "autonomy" | "alternative";
  grounded_plan: string;
  rationale: string;
  intent: string;
  fallback: boolean;
}

export interface EpisodeEndPayload {
  frame: number;
  collided: boolean;
  route_completion: number;
  interventions: number;
}

/** Parse a raw websocket message; null means skip-and-log (malformed). */
export function parseFrame(raw: string): GatewayFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const frame = data as Record<string, unknown>;
  if (typeof frame.type !== "string" || !SERVER_FRAME_TYPES.has(frame.type)) return null;
  if (typeof frame.seq !== "number" || !Number.isFinite(frame.seq)) return null;
  if (typeof frame.schema_version !== "number") return null;
  if (typeof frame.payload !== "object" || frame.payload === null) return null;
  return frame as unknown as GatewayFrame;
}

/** Primitive vocabulary for the intervention picker: slug -> phrase. */
export const PLAN_PHRASES: Record<string, string> = {
  stop: "stop",
  slow_down: "slow down",
  drive_forward: "drive forward",
  turn_left: "turn left",
  turn_right: "turn right",
  lane_change_left: "change lane to the left",
  lane_change_right: "change lane to the right",
};

export interface HumanInputMessage {
  type: "human_input";
  payload: { steering: number; throttle: number; brake: number };
}

export interface InterventionMessage {
  type: "intervention";
  payload: {
    plan?: string;
    steering?: number;
    throttle?: number;
    brake?: number;
  };
}

export function humanInputMessage(
  steering: number,
  throttle: number,
  brake: number,
): HumanInputMessage {
  return { type: "human_input", payload: { steering, throttle, brake } };
}

/**
 * Intervention with an explicit primitive (picker) or raw controls, from
 * which the gateway infers the plan by rollout + classification.
 */
export function interventionMessage(
  plan: string | null,
  controls?: { steering: number; throttle: number; brake: number },
): InterventionMessage {
  if (plan !== null) {
    const phrase = PLAN_PHRASES[plan] ?? plan;
    return { type: "intervention", payload: { plan: phrase } };
  }
  if (!controls) throw new Error("intervention needs a plan or raw controls");
  return { type: "intervention", payload: { ...controls } };
}
