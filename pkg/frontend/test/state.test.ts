import { describe, expect, it } from "vitest";

import { GatewayFrame, SCHEMA_VERSION } from "../src/protocol.js";
import { SessionStore, UNCERTAINTY_WINDOW_S } from "../src/state.js";

function frame(type: string, seq: number, payload: Record<string, unknown>): GatewayFrame {
  return { type: type as GatewayFrame["type"], seq, schema_version: SCHEMA_VERSION, payload };
}

function snapshotPayload(frameNo: number): Record<string, unknown> {
  return {
    frame: frameNo,
    sim_t: frameNo * 0.05,
    ego: { x: frameNo, y: 0, heading: 0, speed: 8, half_length: 2.25, half_width: 0.9 },
    actors: [],
    control_source: "autonomy",
    autonomy_plan: "drive_forward",
    route_completion: 0,
    active_plan: null,
    planned_path: [],
    gates: [],
    lanes: [],
    human_input: null,
  };
}

function decisionPayload(correlationId: number, overrides: Record<string, unknown> = {}) {
  return {
    correlation_id: correlationId,
    frame: 100,
    choice: "human",
    grounded_plan: "stop",
    rationale: "why",
    intent: "what",
    fallback: false,
    ...overrides,
  };
}

describe("SessionStore", () => {
  it("rejects schema_version mismatches", () => {
    const store = new SessionStore();
    store.apply({ ...frame("world_snapshot", 1, snapshotPayload(1)), schema_version: 99 });
    expect(store.snapshot).toBeNull();
    expect(store.droppedFrames).toBe(1);
  });

  it("discards stale snapshots (seq regression)", () => {
    const store = new SessionStore();
    store.apply(frame("world_snapshot", 10, snapshotPayload(10)));
    store.apply(frame("world_snapshot", 6, snapshotPayload(6)));
    expect(store.snapshot!.frame).toBe(10);
    expect(store.droppedFrames).toBe(1);
    store.apply(frame("world_snapshot", 12, snapshotPayload(12)));
    expect(store.snapshot!.frame).toBe(12);
  });

  it("keeps the decision feed sorted by seq regardless of arrival order", () => {
    const store = new SessionStore();
    store.apply(frame("arbitration_decision", 30, decisionPayload(2)));
    store.apply(frame("arbitration_decision", 10, decisionPayload(1)));
    store.apply(frame("arbitration_decision", 20, decisionPayload(3)));
    expect(store.decisions.map((d) => d.seq)).toEqual([10, 20, 30]);
    expect(store.latestDecision()!.seq).toBe(30);
  });

  it("pairs decisions with their request frames by correlation id", () => {
    const store = new SessionStore();
    store.apply(
      frame("arbitration_request_shown", 5, {
        correlation_id: 7,
        frame: 90,
        human_plan: "stop",
        autonomy_plan: "drive_forward",
        mode: "supervisory",
      }),
    );
    store.apply(frame("arbitration_decision", 6, decisionPayload(7)));
    expect(store.decisions[0].requestShown!.correlation_id).toBe(7);
  });

  it("trims the uncertainty history to the 30 s window", () => {
    const store = new SessionStore();
    for (let i = 0; i <= 800; i++) {
      store.apply(
        frame("uncertainty_update", i + 1, {
          frame: i,
          sim_t: i * 0.05,
          u: 0.1,
          intra_raw: 0,
          inter_raw: 0,
          triggered: i === 400,
        }),
      );
    }
    const tEnd = 800 * 0.05;
    expect(store.uncertainty[0].simT).toBeGreaterThanOrEqual(tEnd - UNCERTAINTY_WINDOW_S);
    expect(store.triggerMarkers()).toEqual([400 * 0.05]);
  });

  it("captures hello role/threshold, errors, and episode end", () => {
    const store = new SessionStore();
    store.apply(
      frame("hello", 1, {
        role: "observer",
        scenario: "blocked_lane",
        mode: "supervisory",
        arbiter: "stub-vlm",
        tick_hz: 20,
        theta_u: 0.5,
      }),
    );
    expect(store.role).toBe("observer");
    expect(store.thetaU).toBe(0.5);
    store.apply(frame("error", 2, { message: "bad frame" }));
    expect(store.lastError).toBe("bad frame");
    store.apply(
      frame("episode_end", 3, { frame: 240, collided: false, route_completion: 1, interventions: 1 }),
    );
    expect(store.episodeEnd!.collided).toBe(false);
  });
});
