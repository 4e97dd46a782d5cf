/**
 * Top-down canvas rendering of the world snapshot and the uncertainty gauge.
 *
 * Drawing goes through the Draw2D subset of CanvasRenderingContext2D so tests
 * can substitute a recording stub. The camera follows the ego vehicle.
 */

import { SnapshotPayload } from "./protocol.js";
import { UncertaintySample } from "./state.js";

export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  setLineDash(segments: number[]): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
  fillText(text: string, x: number, y: number): void;
  font: string;
}

export interface Camera {
  cx: number; // world meters at screen center
  cy: number;
  scale: number; // pixels per meter
  width: number; // canvas pixels
  height: number;
}

export function cameraFor(snapshot: SnapshotPayload, width: number, height: number): Camera {
  // keep the ego slightly left of center so the road ahead dominates
  return {
    cx: snapshot.ego.x + (0.3 * width) / 6 / 2,
    cy: snapshot.ego.y,
    scale: 6,
    width,
    height,
  };
}

export function worldToScreen(cam: Camera, wx: number, wy: number): [number, number] {
  return [
    cam.width / 2 + (wx - cam.cx) * cam.scale,
    cam.height / 2 - (wy - cam.cy) * cam.scale,
  ];
}

export interface MarkingStyle {
  color: string;
  dash: number[];
  double: boolean;
}

/** Solid yellow must read differently from white lines at a glance. */
export const MARKING_STYLES: Record<string, MarkingStyle> = {
  dashed_white: { color: "#d8d8d8", dash: [8, 10], double: false },
  solid_white: { color: "#e8e8e8", dash: [], double: false },
  solid_yellow: { color: "#e7c93f", dash: [], double: false },
  double_yellow: { color: "#e7c93f", dash: [], double: true },
};

const ACTOR_COLORS: Record<string, string> = {
  vehicle: "#b0522d",
  pedestrian: "#27ae60",
  cone_or_sign: "#f39c12",
  open_door: "#c0692b",
  emergency_vehicle: "#e74c3c",
  barrier: "#7f8c8d",
};

const EGO_COLOR = "#3498db";
const PATH_COLOR = "#41d9d4";
const ALTERNATIVE_PATH_COLOR = "#d46cf0";

function strokePolyline(ctx: Draw2D, cam: Camera, points: number[][]): void {
  ctx.beginPath();
  points.forEach(([wx, wy], i) => {
    const [sx, sy] = worldToScreen(cam, wx, wy);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
}

function offsetPolyline(center: number[][], lateral: number): number[][] {
  // lateral positive = right of travel direction (matches the sim convention)
  const out: number[][] = [];
  for (let i = 0; i < center.length; i++) {
    const a = center[Math.max(0, i - 1)];
    const b = center[Math.min(center.length - 1, i + 1)];
    const dx = b[0] - a[0];
    const dy = b[1] - a[1];
    const len = Math.hypot(dx, dy) || 1;
    out.push([center[i][0] + (lateral * dy) / len, center[i][1] - (lateral * dx) / len]);
  }
  return out;
}

function drawBoundary(ctx: Draw2D, cam: Camera, line: number[][], style: MarkingStyle): void {
  ctx.strokeStyle = style.color;
  ctx.lineWidth = 2;
  ctx.setLineDash(style.dash);
  if (style.double) {
    strokePolyline(ctx, cam, offsetPolyline(line, -0.15));
    strokePolyline(ctx, cam, offsetPolyline(line, 0.15));
  } else {
    strokePolyline(ctx, cam, line);
  }
  ctx.setLineDash([]);
}

function drawBox(
  ctx: Draw2D,
  cam: Camera,
  x: number,
  y: number,
  heading: number,
  halfLength: number,
  halfWidth: number,
  color: string,
): void {
  const [sx, sy] = worldToScreen(cam, x, y);
  ctx.save();
  ctx.translate(sx, sy);
  ctx.rotate(-heading); // screen y is flipped
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.rect(
    -halfLength * cam.scale,
    -halfWidth * cam.scale,
    2 * halfLength * cam.scale,
    2 * halfWidth * cam.scale,
  );
  ctx.fill();
  // heading wedge
  ctx.fillStyle = "#ffffff";
  ctx.beginPath();
  ctx.moveTo(halfLength * cam.scale, 0);
  ctx.lineTo(halfLength * cam.scale * 0.45, -halfWidth * cam.scale * 0.6);
  ctx.lineTo(halfLength * cam.scale * 0.45, halfWidth * cam.scale * 0.6);
  ctx.fill();
  ctx.restore();
}

/**
 * Render one world snapshot. `latestChoice` selects the overlay style for the
 * active planned trajectory: alternatives get a distinct dashed stroke.
 */
export function renderWorld(
  ctx: Draw2D,
  snapshot: SnapshotPayload,
  cam: Camera,
  latestChoice: string | null = null,
): void {
  ctx.clearRect(0, 0, cam.width, cam.height);
  ctx.fillStyle = "#15191e";
  ctx.fillRect(0, 0, cam.width, cam.height);

  // road surface then boundary markings
  for (const lane of snapshot.lanes) {
    ctx.strokeStyle = "#2b3138";
    ctx.lineWidth = lane.width * cam.scale;
    ctx.setLineDash([]);
    strokePolyline(ctx, cam, lane.center);
  }
  for (const lane of snapshot.lanes) {
    const left = offsetPolyline(lane.center, -lane.width / 2);
    const right = offsetPolyline(lane.center, lane.width / 2);
    drawBoundary(ctx, cam, left, MARKING_STYLES[lane.markings.left] ?? MARKING_STYLES.solid_white);
    drawBoundary(
      ctx,
      cam,
      right,
      MARKING_STYLES[lane.markings.right] ?? MARKING_STYLES.solid_white,
    );
  }

  // route gates
  for (const gate of snapshot.gates) {
    const [sx, sy] = worldToScreen(cam, gate.x, gate.y);
    ctx.strokeStyle = gate.passed ? "#2ecc71" : "#b5b8bd";
    ctx.lineWidth = 2;
    ctx.setLineDash(gate.passed ? [] : [4, 4]);
    ctx.beginPath();
    ctx.arc(sx, sy, gate.radius * cam.scale, 0, Math.PI * 2);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  // active planned trajectory overlay
  if (snapshot.planned_path.length > 1) {
    ctx.strokeStyle = latestChoice === "alternative" ? ALTERNATIVE_PATH_COLOR : PATH_COLOR;
    ctx.lineWidth = 3;
    ctx.setLineDash(latestChoice === "alternative" ? [10, 6] : []);
    strokePolyline(ctx, cam, snapshot.planned_path);
    ctx.setLineDash([]);
  }

  // actors then ego on top
  for (const actor of snapshot.actors) {
    drawBox(
      ctx,
      cam,
      actor.x,
      actor.y,
      actor.heading,
      actor.half_length,
      actor.half_width,
      ACTOR_COLORS[actor.kind] ?? "#95a5a6",
    );
  }
  drawBox(
    ctx,
    cam,
    snapshot.ego.x,
    snapshot.ego.y,
    snapshot.ego.heading,
    snapshot.ego.half_length,
    snapshot.ego.half_width,
    EGO_COLOR,
  );
}

/**
 * Uncertainty gauge: u over the history window, the trigger threshold line,
 * and a marker at every sample where the trigger fired.
 */
export function drawGauge(
  ctx: Draw2D,
  history: UncertaintySample[],
  thetaU: number,
  width: number,
  height: number,
  windowS = 30,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#15191e";
  ctx.fillRect(0, 0, width, height);
  if (history.length === 0) return;
  const tEnd = history[history.length - 1].simT;
  const tStart = tEnd - windowS;
  const toX = (t: number) => ((t - tStart) / windowS) * width;
  const toY = (u: number) => height - u * height;

  // threshold line
  ctx.strokeStyle = "#e67e22";
  ctx.lineWidth = 1;
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(0, toY(thetaU));
  ctx.lineTo(width, toY(thetaU));
  ctx.stroke();
  ctx.setLineDash([]);

  // u polyline
  ctx.strokeStyle = "#41d9d4";
  ctx.lineWidth = 2;
  ctx.beginPath();
  history.forEach((sample, i) => {
    const x = toX(sample.simT);
    const y = toY(sample.u);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();

  // trigger markers
  ctx.fillStyle = "#e74c3c";
  for (const sample of history) {
    if (!sample.triggered) continue;
    ctx.beginPath();
    ctx.arc(toX(sample.simT), toY(sample.u), 3, 0, Math.PI * 2);
    ctx.fill();
  }
}
