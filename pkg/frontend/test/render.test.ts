import { describe, expect, it } from "vitest";

import { decisionFeedViews, decisionView } from "../src/panel.js";
import {
  Camera,
  cameraFor,
  Draw2D,
  drawGauge,
  MARKING_STYLES,
  renderWorld,
  worldToScreen,
} from "../src/render.js";
import { SnapshotPayload } from "../src/protocol.js";
import { DecisionEntry, UncertaintySample } from "../src/state.js";

/** Recording stub for the Draw2D surface. */
class StubCtx implements Draw2D {
  fillStyle: string = "";
  strokeStyle: string = "";
  lineWidth = 1;
  globalAlpha = 1;
  font = "";
  ops: string[] = [];
  strokes: string[] = [];
  arcs: number[][] = [];
  beginPath() { this.ops.push("beginPath"); }
  moveTo() { this.ops.push("moveTo"); }
  lineTo() { this.ops.push("lineTo"); }
  arc(x: number, y: number, r: number) { this.ops.push("arc"); this.arcs.push([x, y, r]); }
  rect() { this.ops.push("rect"); }
  fill() { this.ops.push("fill"); }
  stroke() { this.ops.push("stroke"); this.strokes.push(String(this.strokeStyle)); }
  fillRect() { this.ops.push("fillRect"); }
  clearRect() { this.ops.push("clearRect"); }
  setLineDash() { this.ops.push("setLineDash"); }
  save() { this.ops.push("save"); }
  restore() { this.ops.push("restore"); }
  translate() { this.ops.push("translate"); }
  rotate() { this.ops.push("rotate"); }
  fillText() { this.ops.push("fillText"); }
}

function emptyRoadSnapshot(): SnapshotPayload {
  return {
    frame: 40,
    sim_t: 2.0,
    ego: { x: 16, y: 0, heading: 0, speed: 8, half_length: 2.25, half_width: 0.9 },
    actors: [],
    control_source: "autonomy",
    autonomy_plan: "drive_forward",
    route_completion: 0.25,
    active_plan: null,
    planned_path: [],
    gates: [
      { x: 40, y: 0, radius: 4, passed: true },
      { x: 70, y: 0, radius: 4, passed: false },
    ],
    lanes: [
      {
        id: 0,
        center: [[0, 0], [200, 0]],
        width: 3.5,
        markings: { left: "solid_yellow", right: "solid_white" },
      },
    ],
    human_input: null,
  };
}

describe("camera", () => {
  it("round-trips world points through the screen transform", () => {
    const cam: Camera = { cx: 10, cy: 5, scale: 6, width: 800, height: 600 };
    const [sx, sy] = worldToScreen(cam, 10, 5);
    expect(sx).toBe(400);
    expect(sy).toBe(300);
    const [fx, fy] = worldToScreen(cam, 11, 6);
    expect(fx).toBe(406);
    expect(fy).toBe(294); // +y world is up on screen
  });

  it("follows the ego", () => {
    const snap = emptyRoadSnapshot();
    const cam = cameraFor(snap, 800, 600);
    expect(cam.cy).toBe(snap.ego.y);
    expect(cam.cx).toBeGreaterThan(snap.ego.x); // look-ahead bias
  });
});

describe("renderWorld", () => {
  it("draws the empty-road snapshot without throwing (ego + gates only)", () => {
    const ctx = new StubCtx();
    const snap = emptyRoadSnapshot();
    renderWorld(ctx, snap, cameraFor(snap, 800, 600));
    expect(ctx.ops).toContain("clearRect");
    // two gate arcs, no actor boxes beyond the ego's rect
    expect(ctx.arcs.length).toBe(2);
    expect(ctx.ops.filter((o) => o === "rect").length).toBe(1);
  });

  it("renders solid yellow distinctly from white markings", () => {
    expect(MARKING_STYLES.solid_yellow.color).not.toBe(MARKING_STYLES.solid_white.color);
    expect(MARKING_STYLES.double_yellow.double).toBe(true);
    const ctx = new StubCtx();
    const snap = emptyRoadSnapshot();
    renderWorld(ctx, snap, cameraFor(snap, 800, 600));
    expect(ctx.strokes).toContain(MARKING_STYLES.solid_yellow.color);
  });

  it("overlays an alternative plan in a distinct style", () => {
    const snap = emptyRoadSnapshot();
    snap.planned_path = [[16, 0], [24, 1], [31, 3.5]];
    const normal = new StubCtx();
    renderWorld(normal, snap, cameraFor(snap, 800, 600), "human");
    const alt = new StubCtx();
    renderWorld(alt, snap, cameraFor(snap, 800, 600), "alternative");
    const normalStyles = new Set(normal.strokes);
    const altStyles = new Set(alt.strokes);
    const distinct = [...altStyles].filter((s) => !normalStyles.has(s));
    expect(distinct.length).toBeGreaterThan(0);
  });
});

describe("drawGauge", () => {
  const history: UncertaintySample[] = [
    { simT: 0.0, u: 0.1, triggered: false },
    { simT: 0.5, u: 0.6, triggered: true },
    { simT: 1.0, u: 0.7, triggered: true },
    { simT: 1.5, u: 0.2, triggered: false },
  ];

  it("draws a marker per triggered sample plus the threshold line", () => {
    const ctx = new StubCtx();
    drawGauge(ctx, history, 0.5, 360, 110);
    expect(ctx.arcs.length).toBe(2); // the two triggered samples
    expect(ctx.ops.filter((o) => o === "stroke").length).toBeGreaterThanOrEqual(2);
  });

  it("handles an empty history", () => {
    const ctx = new StubCtx();
    drawGauge(ctx, [], 0.5, 360, 110);
    expect(ctx.arcs.length).toBe(0);
  });
});

describe("decision panel views", () => {
  function entry(overrides: Record<string, unknown>): DecisionEntry {
    return {
      seq: 1,
      requestShown: null,
      payload: {
        correlation_id: 1,
        frame: 100,
        choice: "human",
        grounded_plan: "stop",
        rationale: "reasoning text",
        intent: "yield",
        fallback: false,
        ...overrides,
      } as DecisionEntry["payload"],
    };
  }

  it("badge matches the choice field", () => {
    expect(decisionView(entry({ choice: "human" })).badge).toBe("human");
    expect(decisionView(entry({ choice: "autonomy" })).badge).toBe("autonomy");
    expect(decisionView(entry({ choice: "alternative" })).badge).toBe("alternative");
  });

  it("fallback decisions get the safe-stop badge", () => {
    const view = decisionView(entry({ fallback: true }));
    expect(view.badge).toBe("fallback");
    expect(view.badgeLabel).toBe("safe stop fallback");
  });

  it("feed views preserve the store's seq order", () => {
    const views = decisionFeedViews([
      { ...entry({}), seq: 1 },
      { ...entry({ choice: "autonomy" }), seq: 2 },
    ]);
    expect(views.map((v) => v.badge)).toEqual(["human", "autonomy"]);
  });
});
